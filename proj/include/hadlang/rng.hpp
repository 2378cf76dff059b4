#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace hadlang {

// Deterministic, seedable random stream; one stream per chain.
//
// Generator is xoshiro256++ seeded through SplitMix64. Sub-streams use the
// generator's jump function: stream k starts k * 2^128 draws ahead of
// stream 0, so distinct stream_ids never overlap and can be treated as
// independent. Same (seed, stream_id) replays the identical draw sequence
// bit for bit on a given platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint32_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double uniform01();

  // One standard normal draw. Box-Muller; the spare value is cached in the
  // stream so replay from a fresh stream is exact.
  double normal();

  // n independent standard normal draws, n >= 1. Brownian increments are
  // formed downstream as sqrt(dt) * xi.
  Eigen::VectorXd normal_vec(Eigen::Index n);

  // Inverse-Gaussian(mean mu, shape) with density
  //   sqrt(shape / (2 pi x^3)) exp(-shape (x - mu)^2 / (2 mu^2 x)),  x > 0.
  // Michael-Schucany-Haas transformation: one normal, one uniform.
  double inverse_gaussian(double mu, double shape);

  // Gamma(shape_k, rate), Marsaglia-Tsang; shape_k < 1 boosted through k+1.
  double gamma(double shape_k, double rate);

 private:
  void jump();

  std::uint64_t seed_;
  std::uint32_t stream_id_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hadlang
