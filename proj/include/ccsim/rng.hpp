#pragma once

#include <cstdint>
#include <initializer_list>

namespace ccsim {

// Deterministic 64-bit generator (splitmix64). Every random stream in the
// project is derived from this generator so runs are reproducible across
// platforms; the keystream used by coding::scramble is the raw word stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Combines several words into one sub-stream seed. Used to derive
// independent per-node / per-trial streams from a master seed.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x8f3c0e5a2d1b49e7ULL;
  for (std::uint64_t p : parts) {
    h ^= p + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    SplitMix64 g(h);
    h = g();
  }
  return h;
}

// Uniform integer in [0, n), n >= 1.
inline std::uint64_t bounded(SplitMix64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Uniform double in [0, 1) with 53 random bits.
inline double unit_real(SplitMix64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ccsim
