#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// std::mt19937_64 produces a standardized stream, but the stdlib
// distributions and std::shuffle do not, so the few transforms needed are
// spelled out here to keep seeded outputs identical across toolchains.

namespace gapmin::rng {

using Engine = std::mt19937_64;

// uniform on (0, 1], 53-bit resolution
inline double uniform01(Engine& g) {
  return static_cast<double>((g() >> 11) + 1) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// standard normal via Box-Muller (cosine branch only, stateless)
inline double normal(Engine& g) {
  double u1 = uniform01(g);
  double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline double normal(Engine& g, double mean, double sd) {
  return mean + sd * normal(g);
}

// uniform integer in [0, n), rejection sampled
inline std::uint64_t below(Engine& g, std::uint64_t n) {
  std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = g();
    if (r >= threshold) return r % n;
  }
}

template <typename T>
void shuffle(std::vector<T>& v, Engine& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace gapmin::rng
