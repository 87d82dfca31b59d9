#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lpcorp::text {

// Byte offset of the first invalid UTF-8 sequence, or npos if the buffer
// is well-formed. Overlong encodings and surrogates are rejected.
constexpr std::size_t npos = static_cast<std::size_t>(-1);
std::size_t utf8_find_invalid(std::string_view bytes);

// Throws DataError naming `origin` and the byte offset on invalid input.
void utf8_require_valid(std::string_view bytes, std::string_view origin);

// Decodes well-formed UTF-8 into codepoints. Call utf8_find_invalid first
// for untrusted input.
std::vector<char32_t> utf8_decode(std::string_view bytes);

std::string utf8_encode(const std::vector<char32_t>& codepoints);

std::string_view trim(std::string_view s);

bool is_blank(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

std::string ascii_lower(std::string_view s);

// Case-insensitive (ASCII fold) substring search; returns byte offset or npos.
std::size_t find_ci(std::string_view haystack, std::string_view needle,
                    std::size_t from = 0);

}  // namespace lpcorp::text
