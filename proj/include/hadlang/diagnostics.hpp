#pragma once

#include "hadlang/model.hpp"
#include "hadlang/quadrature.hpp"

#include <Eigen/Core>

#include <functional>

namespace hadlang {

enum class QuadRule { adaptive_simpson, gauss_legendre };

// E_rho[phi] for a one-dimensional model, computed as
// (int phi rho~) / (int rho~) over (-R,0) and (0,R) so the |x| kink sits on a
// panel boundary. R comes from the config or is grown until the weighted
// tail is below 1e-14 of the bulk. Two rules are available so results can be
// cross-checked independently.
double quadrature_expectation_1d(const std::function<double(double)>& phi,
                                 const TargetModel& model, const QuadratureConfig& quad,
                                 QuadRule rule = QuadRule::adaptive_simpson);

// ESS = n / max(1, 1 + 2 sum_k rho_k) with Geyer's initial monotone positive
// sequence truncation of the empirical autocorrelations (clamped so
// ESS <= n). A zero-variance chain returns n by convention. Input length
// must be >= 10.
double ess(const Eigen::VectorXd& samples);

// sup_x |F_emp(x) - cdf(x)| for a monotone cdf.
double ks_statistic(const Eigen::VectorXd& samples, const std::function<double(double)>& cdf);

// Type-7 quantile (linear interpolation of order statistics).
double quantile_type7(const Eigen::VectorXd& samples, double p);

struct SummaryStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // unbiased
  Eigen::VectorXd q05, q95;
  Eigen::VectorXd ess;
  Eigen::VectorXd stderr_mean;  // sqrt(variance / ESS)
};

// Per-column summaries of a samples matrix (rows are draws).
SummaryStats moments_and_quantiles(const Eigen::MatrixXd& samples);

}  // namespace hadlang
