#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace lpcorp {

// mt19937_64 is fully specified by the standard, so streams are identical
// across compilers and platforms. Bounded draws avoid
// std::uniform_int_distribution, whose output is implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased draw in [0, n) via rejection sampling.
  std::uint64_t below(std::uint64_t n);

  // [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

private:
  std::mt19937_64 gen_;
};

// Fans one global seed out into independent purpose-labeled streams,
// e.g. derive_seed(seed, "split") vs derive_seed(seed, "oracle:sample-17").
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

constexpr std::uint64_t kFnvOffset64 = 0xcbf29ce484222325ull;

// 64-bit FNV-1a. Pass a previous result as `state` to hash in chunks.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t state = kFnvOffset64);

// fnv1a64 rendered as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace lpcorp
