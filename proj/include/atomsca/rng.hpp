#pragma once

#include <cmath>
#include <cstdint>

// Small deterministic RNG toolkit. Everything here is fully specified so
// that trace bytes and report CSVs are reproducible across standard-library
// versions for a fixed seed.

namespace atomsca {

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline uint64_t splitmix64(uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// xoshiro256++ seeded through splitmix64.
class Xoshiro256 {
 public:
  using result_type = uint64_t;

  explicit Xoshiro256(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) {
      x += kGolden;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      w = z ^ (z >> 31);
    }
  }

  static constexpr uint64_t min() { return 0; }
  static constexpr uint64_t max() { return ~0ull; }

  uint64_t operator()() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in (0, 1].
  double uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }
  // Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Weighted pick over a small table of counts; returns an index.
  template <typename Table>
  std::size_t pick_weighted(const Table& table, uint64_t total) {
    uint64_t r = (*this)() % total;
    std::size_t i = 0;
    for (const auto& entry : table) {
      if (r < entry.count) return i;
      r -= entry.count;
      ++i;
    }
    return i - 1;
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  uint64_t s_[4];
};

// Box-Muller gaussian over xoshiro256++; generates in pairs.
class GaussianSampler {
 public:
  explicit GaussianSampler(uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = rng_.uniform_pos();
    const double u2 = rng_.uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

 private:
  Xoshiro256 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace atomsca
