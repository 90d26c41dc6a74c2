#pragma once

#include <cstdint>
#include <random>

namespace ocs {

/// Independent random streams derived from one user seed. Each consumer
/// gets its own stream id so adding draws in one place never shifts another.
enum class Stream : std::uint64_t {
  Cluster = 1,
  Tasks = 2,
  Policy = 3,
  Training = 4,
  Init = 5,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed, Stream stream = Stream::Policy, std::uint64_t substream = 0);

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(engine_); }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ocs
