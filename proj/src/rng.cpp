#include "genrec/rng.hpp"

#include <numeric>

namespace genrec {

std::uint64_t Rng::next_below(std::uint64_t bound) {
  // 2^64 mod bound; values below it would bias the final modulo.
  std::uint64_t threshold = (~bound + 1) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t k, std::size_t n) {
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (k > n) k = n;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t pick = j + static_cast<std::size_t>(next_below(n - j));
    std::swap(indices[j], indices[pick]);
  }
  indices.resize(k);
  return indices;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001B3ull;
  }
  return hash;
}

Rng derive_stream(std::uint64_t root_seed, std::string_view label, std::uint64_t index) {
  Rng mixer(root_seed ^ fnv1a64(label) ^ (index * 0x9E3779B97F4A7C15ull));
  // Two warm-up draws decorrelate structurally similar (seed, label) pairs.
  mixer.next_u64();
  return Rng(mixer.next_u64());
}

}  // namespace genrec
