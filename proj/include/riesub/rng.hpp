#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace riesub {

// Counter-based generator: output k is splitmix64(key + k * golden_gamma).
//
// The stream is fully determined by (key, counter), so results are identical
// across platforms and compilers. Normal deviates use the Marsaglia polar
// method and consume a variable number of uniforms; everything else consumes
// exactly one 64-bit draw per call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed)) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGamma); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., m - 1}. One draw, multiply-shift without rejection
  // (bias below m / 2^64).
  std::uint64_t uniform_index(std::uint64_t m);

  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  // Independent child stream; children of equal index are equal.
  Rng split(std::uint64_t index) const;

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream for run `index` of a multi-run experiment with master seed `seed`.
inline Rng run_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(Rng::mix(seed ^ Rng::mix(index + 0x632BE59BD9B4E019ULL)));
}

// Column-major fill with standard normal entries.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace riesub
