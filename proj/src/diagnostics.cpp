#include "hadlang/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hadlang {

namespace {

// Grow R until the polynomially weighted density tail is negligible
// relative to the bulk.
double auto_halfwidth(const TargetModel& model) {
  auto weight = [&](double x) {
    Eigen::VectorXd v(1);
    v[0] = x;
    const double w = std::max(1.0, x * x * x * x);
    return w * std::exp(rho_log_unnormalized(v, model));
  };
  double peak = 0.0;
  for (int i = -400; i <= 400; ++i) peak = std::max(peak, weight(i * 0.05));
  double r = 20.0;
  while (r < 1e6 && std::max(weight(r), weight(-r)) > 1e-16 * peak) r *= 1.5;
  return r;
}

double integrate_rule(const std::function<double(double)>& f, double a, double b,
                      const QuadratureConfig& quad, QuadRule rule) {
  if (rule == QuadRule::adaptive_simpson)
    return integrate_adaptive(f, a, b, quad.abs_tol, quad.rel_tol);
  return integrate_gauss_legendre(f, a, b, 16, 256);
}

}  // namespace

double quadrature_expectation_1d(const std::function<double(double)>& phi,
                                 const TargetModel& model, const QuadratureConfig& quad,
                                 QuadRule rule) {
  if (model.dim != 1)
    throw std::invalid_argument("quadrature_expectation_1d: model must be one-dimensional");
  if (!(quad.abs_tol > 0.0) || !(quad.rel_tol > 0.0))
    throw std::invalid_argument("quadrature_expectation_1d: tolerances must be positive");
  const double r = quad.domain_halfwidth > 0.0 ? quad.domain_halfwidth : auto_halfwidth(model);
  auto density = [&](double x) {
    Eigen::VectorXd v(1);
    v[0] = x;
    return std::exp(rho_log_unnormalized(v, model));
  };
  auto weighted = [&](double x) { return phi(x) * density(x); };
  const double mass = integrate_rule(density, -r, 0.0, quad, rule) +
                      integrate_rule(density, 0.0, r, quad, rule);
  if (!(mass > 0.0)) throw std::runtime_error("quadrature_expectation_1d: vanishing mass");
  const double num = integrate_rule(weighted, -r, 0.0, quad, rule) +
                     integrate_rule(weighted, 0.0, r, quad, rule);
  return num / mass;
}

double ess(const Eigen::VectorXd& samples) {
  const Eigen::Index n = samples.size();
  if (n < 10) throw std::invalid_argument("ess: need at least 10 samples");
  const double mean = samples.mean();
  const Eigen::VectorXd c = samples.array() - mean;
  const double c0 = c.squaredNorm() / static_cast<double>(n);
  if (c0 == 0.0) return static_cast<double>(n);  // constant chain

  auto gamma_hat = [&](Eigen::Index k) {
    return c.head(n - k).dot(c.tail(n - k)) / static_cast<double>(n);
  };

  // Initial monotone positive sequence over lag pairs.
  double sum_pairs = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0;; ++m) {
    const Eigen::Index k0 = 2 * m, k1 = 2 * m + 1;
    if (k0 >= n) break;
    double pair = gamma_hat(k0) + (k1 < n ? gamma_hat(k1) : 0.0);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    sum_pairs += pair;
  }
  const double tau = std::max(1.0, 2.0 * sum_pairs / c0 - 1.0);
  return static_cast<double>(n) / tau;
}

double ks_statistic(const Eigen::VectorXd& samples, const std::function<double(double)>& cdf) {
  const Eigen::Index n = samples.size();
  if (n == 0) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> s(samples.data(), samples.data() + n);
  std::sort(s.begin(), s.end());
  double sup = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = cdf(s[static_cast<std::size_t>(i)]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    sup = std::max({sup, std::abs(f - lo), std::abs(f - hi)});
  }
  return sup;
}

double quantile_type7(const Eigen::VectorXd& samples, double p) {
  const Eigen::Index n = samples.size();
  if (n == 0) throw std::invalid_argument("quantile_type7: empty sample");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_type7: p outside [0,1]");
  std::vector<double> s(samples.data(), samples.data() + n);
  std::sort(s.begin(), s.end());
  const double h = (static_cast<double>(n) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= static_cast<std::size_t>(n)) return s.back();
  return s[lo] + (h - std::floor(h)) * (s[lo + 1] - s[lo]);
}

SummaryStats moments_and_quantiles(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows(), d = samples.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("moments_and_quantiles: empty input");
  SummaryStats out;
  out.mean.resize(d);
  out.variance.resize(d);
  out.q05.resize(d);
  out.q95.resize(d);
  out.ess.resize(d);
  out.stderr_mean.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd col = samples.col(j);
    const double m = col.mean();
    out.mean[j] = m;
    out.variance[j] = n > 1 ? (col.array() - m).matrix().squaredNorm() / static_cast<double>(n - 1) : 0.0;
    out.q05[j] = quantile_type7(col, 0.05);
    out.q95[j] = quantile_type7(col, 0.95);
    out.ess[j] = n >= 10 ? ess(col) : static_cast<double>(n);
    out.stderr_mean[j] = std::sqrt(out.variance[j] / out.ess[j]);
  }
  return out;
}

}  // namespace hadlang
