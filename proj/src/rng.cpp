#include "hadlang/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace hadlang {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint32_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t sm = seed;
  for (auto& si : s_) si = splitmix64(sm);
  for (std::uint32_t k = 0; k < stream_id; ++k) jump();
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

void RngStream::jump() {
  static const std::uint64_t kJump[] = {0x180EC6D33CFD0ABAULL, 0xD5A61266F0C9392CULL,
                                        0xA9582618E03FC9AAULL, 0x39ABDC4529B1661CULL};
  std::uint64_t t[4] = {0, 0, 0, 0};
  for (std::uint64_t j : kJump) {
    for (int b = 0; b < 64; ++b) {
      if (j & (1ULL << b)) {
        t[0] ^= s_[0];
        t[1] ^= s_[1];
        t[2] ^= s_[2];
        t[3] ^= s_[3];
      }
      next_u64();
    }
  }
  s_[0] = t[0];
  s_[1] = t[1];
  s_[2] = t[2];
  s_[3] = t[3];
}

double RngStream::uniform01() {
  // 53-bit mantissa shifted into the open interval.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Eigen::VectorXd RngStream::normal_vec(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("normal_vec: n must be >= 1");
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = normal();
  return out;
}

double RngStream::inverse_gaussian(double mu, double shape) {
  if (!(mu > 0.0) || !(shape > 0.0))
    throw std::invalid_argument("inverse_gaussian: mu and shape must be positive");
  const double nu = normal();
  const double t = mu * (nu * nu) / (2.0 * shape);
  // Smaller root of the MSH quadratic, written so it stays positive for
  // large t: mu (1 + t - sqrt(t(t+2))) == mu / (1 + t + sqrt(t(t+2))).
  const double x1 = mu / (1.0 + t + std::sqrt(t * (t + 2.0)));
  const double u = uniform01();
  return (u <= mu / (mu + x1)) ? x1 : mu * mu / x1;
}

double RngStream::gamma(double shape_k, double rate) {
  if (!(shape_k > 0.0) || !(rate > 0.0))
    throw std::invalid_argument("gamma: shape and rate must be positive");
  if (shape_k < 1.0) {
    const double g = gamma(shape_k + 1.0, rate);
    return g * std::pow(uniform01(), 1.0 / shape_k);
  }
  const double d = shape_k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

}  // namespace hadlang
