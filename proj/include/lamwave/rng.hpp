#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace lamwave {

// Counter-based helpers so pseudo-random streams are reproducible and
// independent of threading or evaluation order.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Uniform in [0, 1) from 53 high bits.
inline double u01(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two decorrelated counter hashes.
inline double gauss(std::uint64_t key) {
  const double u1 = u01(splitmix64(key));
  const double u2 = u01(splitmix64(key ^ 0xD1B54A32D192ED03ull));
  const double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-60));
  return r * std::cos(6.283185307179586 * u2);
}

}  // namespace lamwave
