#include "hadlang/model.hpp"

#include <cmath>
#include <stdexcept>

namespace hadlang {

DataTerm DataTerm::zero() { return DataTerm{}; }

DataTerm DataTerm::quadratic(LinOpPtr A, Eigen::VectorXd y) {
  if (!A) throw std::invalid_argument("DataTerm::quadratic: null operator");
  if (y.size() != A->rows())
    throw std::invalid_argument("DataTerm::quadratic: y length must equal operator rows");
  DataTerm t;
  t.kind = Kind::quadratic;
  t.op = std::move(A);
  t.y = std::move(y);
  const NormEstimate est = operator_norm_estimate(*t.op, 1e-12, 20000);
  t.lipschitz_L = est.value * est.value;
  return t;
}

TargetModel::TargetModel(double lambda_, double beta_, DataTerm term, Eigen::Index dim_for_zero)
    : lambda(lambda_), beta(beta_), data_term(std::move(term)) {
  if (!(lambda > 0.0)) throw std::invalid_argument("TargetModel: lambda must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("TargetModel: beta must be positive");
  if (data_term.kind == DataTerm::Kind::quadratic) {
    dim = data_term.op->cols();
    if (dim_for_zero != 0 && dim_for_zero != dim)
      throw std::invalid_argument("TargetModel: dim disagrees with operator cols");
  } else {
    if (dim_for_zero < 1)
      throw std::invalid_argument("TargetModel: zero data term needs an explicit dimension");
    dim = dim_for_zero;
  }
}

GroupStructure::GroupStructure(std::vector<std::vector<Eigen::Index>> blocks_, Eigen::Index d)
    : blocks(std::move(blocks_)), dim(d) {
  std::vector<char> seen(static_cast<std::size_t>(d), 0);
  Eigen::Index covered = 0;
  for (const auto& b : blocks) {
    if (b.empty()) throw std::invalid_argument("GroupStructure: empty block");
    for (Eigen::Index i : b) {
      if (i < 0 || i >= d) throw std::invalid_argument("GroupStructure: index out of range");
      if (seen[static_cast<std::size_t>(i)]) throw std::invalid_argument("GroupStructure: blocks overlap");
      seen[static_cast<std::size_t>(i)] = 1;
      ++covered;
    }
  }
  if (covered != d) throw std::invalid_argument("GroupStructure: blocks must cover all coordinates");
}

Eigen::VectorXd group_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const GroupStructure& groups) {
  if (u.size() != groups.n_groups())
    throw std::invalid_argument("group_product: u length must equal number of groups");
  if (v.size() != groups.dim)
    throw std::invalid_argument("group_product: v length must equal dimension");
  Eigen::VectorXd x(v.size());
  for (Eigen::Index j = 0; j < groups.n_groups(); ++j)
    for (Eigen::Index i : groups.blocks[static_cast<std::size_t>(j)]) x[i] = u[j] * v[i];
  return x;
}

double data_term_value(const Eigen::VectorXd& x, const TargetModel& model) {
  if (x.size() != model.dim) throw std::invalid_argument("data_term_value: dimension mismatch");
  if (model.data_term.kind == DataTerm::Kind::zero) return 0.0;
  return 0.5 * (model.data_term.op->apply(x) - model.data_term.y).squaredNorm();
}

Eigen::VectorXd grad_G(const Eigen::VectorXd& x, const TargetModel& model) {
  if (x.size() != model.dim) throw std::invalid_argument("grad_G: dimension mismatch");
  if (model.data_term.kind == DataTerm::Kind::zero) return Eigen::VectorXd::Zero(x.size());
  return model.data_term.op->apply_adjoint(model.data_term.op->apply(x) - model.data_term.y);
}

double rho_log_unnormalized(const Eigen::VectorXd& x, const TargetModel& model) {
  return -model.beta * (model.lambda * x.lpNorm<1>() + data_term_value(x, model));
}

double pi_log_unnormalized(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                           const TargetModel& model) {
  if (u.size() != model.dim || v.size() != model.dim)
    throw std::invalid_argument("pi_log_unnormalized: dimension mismatch");
  if ((u.array() <= 0.0).any())
    throw std::domain_error("pi_log_unnormalized: pi is supported on u > 0");
  const double quad = 0.5 * model.lambda * (u.squaredNorm() + v.squaredNorm());
  const Eigen::VectorXd x = u.cwiseProduct(v);
  return u.array().log().sum() - model.beta * (quad + data_term_value(x, model));
}

double laplace_mixture_residual(double z, double a, const QuadratureConfig& quad) {
  if (!(a > 0.0)) throw std::invalid_argument("laplace_mixture_residual: a must be positive");
  // Substitute eta = t^2: the eta^{-1/2} endpoint singularity disappears and
  // the integrand 2 exp(-z^2/(2 t^2) - a^2 t^2 / 2) is smooth on (0, t_max].
  auto integrand = [z, a](double t) {
    if (t == 0.0) return 0.0;
    return 2.0 * std::exp(-z * z / (2.0 * t * t) - 0.5 * a * a * t * t);
  };
  // Tail cut where the Gaussian factor alone is below 1e-14 of the bulk.
  double t_max = std::sqrt(2.0 * 70.0) / a;
  if (quad.domain_halfwidth > 0.0) t_max = quad.domain_halfwidth;
  const double integral =
      integrate_adaptive(integrand, 0.0, t_max, quad.abs_tol, quad.rel_tol);
  const double mixture = a / std::sqrt(2.0 * M_PI) * integral;
  return std::abs(mixture - std::exp(-a * std::abs(z)));
}

}  // namespace hadlang
