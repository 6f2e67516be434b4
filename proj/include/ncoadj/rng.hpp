#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ncoadj::rng {

// splitmix64 step; used only to derive well-separated seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for stream `index` under `root`, namespaced by `purpose` so that
// different consumers (replicates, permutation draws) never collide.
inline std::uint64_t derive_stream(std::uint64_t root, std::uint64_t index,
                                   std::uint64_t purpose) {
  std::uint64_t s = root;
  std::uint64_t a = splitmix64(s);
  s ^= purpose * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = splitmix64(s);
  s ^= index + 0x632be59bd9b4e019ULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b + (c << 1));
}

// Deterministic random stream. mt19937_64 supplies the bits (its sequence is
// pinned by the standard); all distributions are implemented here because the
// std ones are implementation-defined.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform on (0, 1): 53-bit mantissa, zero remapped away from the boundary.
  double uniform() {
    double u = static_cast<double>(bits() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // Standard normal via the trigonometric Box-Muller transform with a cached
  // spare, so consumption order is a fixed function of call order.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, m) via modulo rejection (unbiased).
  std::uint64_t below(std::uint64_t m) {
    std::uint64_t threshold = (0 - m) % m;
    std::uint64_t r = bits();
    while (r < threshold) r = bits();
    return r % m;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ncoadj::rng
