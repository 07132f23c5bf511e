#pragma once

#include <cstdint>
#include <random>

namespace greenpot {

std::uint64_t splitmix64(std::uint64_t x);

// Seed for the k-th independent sub-experiment of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k);

// Reproducible random stream. The engine seed is splitmix64(seed ^ stream),
// so (seed, stream) pins every draw and per-trial streams are obtained by
// using the trial index as the stream.
class RngStream {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/splitmix64(seed^stream)";

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double exponential();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace greenpot
