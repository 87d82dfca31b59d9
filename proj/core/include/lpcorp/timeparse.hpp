#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lpcorp::timeparse {

// Seconds since the Unix epoch, UTC. Accepts "YYYY-MM-DD HH:MM:SS" or
// "YYYY-MM-DDTHH:MM:SS", optional trailing "Z". No time zones or leap
// seconds; timestamps in a cohort are assumed to share one clock.
std::int64_t parse_iso8601(std::string_view s);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(std::int64_t epoch_seconds);

}  // namespace lpcorp::timeparse
