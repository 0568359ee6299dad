#include "owo/rng.hpp"

#include <algorithm>
#include <cmath>

namespace owo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ull));
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(a, b), c);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                  std::uint64_t d) {
  return mix(mix(a, b, c), d);
}

double Substream::uniform01() {
  // 53-bit mantissa, shifted into (0, 1]
  return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
}

double Substream::normal(double mean, double stddev) {
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(6.283185307179586476925286766559 * u2);
  return mean + stddev * z;
}

double Substream::truncated_normal(double mean, double stddev, double nsigmas) {
  const double z = normal(mean, stddev);
  const double lo = mean - nsigmas * stddev;
  const double hi = mean + nsigmas * stddev;
  return std::clamp(z, lo, hi);
}

}  // namespace owo
