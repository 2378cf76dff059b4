#pragma once

#include "hadlang/linops.hpp"
#include "hadlang/quadrature.hpp"

#include <optional>
#include <vector>

namespace hadlang {

// Data fidelity term G. Quadratic kind is G(x) = ||Ax - y||^2 / 2.
struct DataTerm {
  enum class Kind { zero, quadratic };

  Kind kind = Kind::zero;
  LinOpPtr op;        // quadratic: A
  Eigen::VectorXd y;  // quadratic: observations, length A.rows()
  double lipschitz_L = 0.0;            // ||A||^2, cached at construction
  std::optional<double> grad_bound_B;  // metadata only, reported with drift constants

  static DataTerm zero();
  static DataTerm quadratic(LinOpPtr A, Eigen::VectorXd y);
};

// Target rho(x) = exp(-beta (lambda ||x||_1 + G(x))) / Z and the
// overparameterized pi(u,v) on (0,inf)^d x R^d. Densities are unnormalized
// and handled in log space; Z is never computed.
struct TargetModel {
  double lambda;
  double beta;
  DataTerm data_term;
  Eigen::Index dim;

  // dim_for_zero is required for the zero data term; for quadratic terms the
  // dimension comes from the operator and must agree if given.
  TargetModel(double lambda, double beta, DataTerm term, Eigen::Index dim_for_zero = 0);
};

// Disjoint blocks covering {0..d-1}.
struct GroupStructure {
  std::vector<std::vector<Eigen::Index>> blocks;
  Eigen::Index dim = 0;

  GroupStructure(std::vector<std::vector<Eigen::Index>> blocks, Eigen::Index d);
  Eigen::Index n_groups() const { return static_cast<Eigen::Index>(blocks.size()); }
};

// x_i = u_{g(i)} v_i where g(i) is the block of coordinate i; u has one entry
// per block.
Eigen::VectorXd group_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const GroupStructure& groups);

double data_term_value(const Eigen::VectorXd& x, const TargetModel& model);
Eigen::VectorXd grad_G(const Eigen::VectorXd& x, const TargetModel& model);

// -beta (lambda ||x||_1 + G(x))
double rho_log_unnormalized(const Eigen::VectorXd& x, const TargetModel& model);

// sum_i log u_i - beta (lambda (||u||^2 + ||v||^2)/2 + G(u .* v)).
// Throws std::domain_error if any u_i <= 0.
double pi_log_unnormalized(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                           const TargetModel& model);

// |a/sqrt(2 pi) * integral_0^inf eta^{-1/2} exp(-z^2/(2 eta) - a^2 eta/2) d eta
//  - exp(-a |z|)|.
// Self-test of the Gaussian-mixture identity behind the latent-scale
// augmentation; not a runtime path.
double laplace_mixture_residual(double z, double a, const QuadratureConfig& quad);

}  // namespace hadlang
