#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace genrec {

/// Deterministic random source based on SplitMix64 (Steele/Lea/Flood mixer).
/// Chosen over std:: engines/distributions because its output is bit-stable
/// across compilers and platforms, which journal replay relies on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t next_below(std::uint64_t bound);

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// First k indices of a partial Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> sample_without_replacement(std::size_t k, std::size_t n);

 private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view data);

/// Labeled substream derivation: the root seed and a (label, index) pair map
/// to an independent stream, so e.g. per-iteration simulation draws do not
/// shift when strategy randomness changes.
Rng derive_stream(std::uint64_t root_seed, std::string_view label, std::uint64_t index = 0);

}  // namespace genrec
