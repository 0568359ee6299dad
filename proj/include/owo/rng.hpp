#pragma once

#include <cstdint>
#include <random>

namespace owo {

// splitmix64-style key mixing. Streams keyed by (seed, t, i, k) must be
// independent and reproducible across platforms, so all randomness flows
// through explicit keys instead of one shared generator.
std::uint64_t mix(std::uint64_t a, std::uint64_t b);
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                  std::uint64_t d);

// One keyed random stream. Box-Muller by hand because std::normal_distribution
// is implementation-defined; mt19937_64 raw output is pinned by the standard.
class Substream {
 public:
  explicit Substream(std::uint64_t key) : gen_(key) {}

  // uniform on (0, 1]: never 0, so logs are safe
  double uniform01();
  double normal(double mean, double stddev);
  // draw clamped to mean +- nsigmas*stddev; support bound used by loss_bounds
  double truncated_normal(double mean, double stddev, double nsigmas);

 private:
  std::mt19937_64 gen_;
};

}  // namespace owo
