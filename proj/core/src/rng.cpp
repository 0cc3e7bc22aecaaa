#include "dociiw/rng.hpp"

#include <cmath>
#include <numbers>

namespace dociiw {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t master, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ull)));
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dociiw
