#include "hadlang/model.hpp"

#include "hadlang/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace hadlang;

namespace {

TargetModel scalar_lasso(double a, double y, double lambda, double beta) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = a;
  Eigen::VectorXd yv(1);
  yv[0] = y;
  return TargetModel(lambda, beta, DataTerm::quadratic(dense_operator(m), yv));
}

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v[0] = x;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("rho log density examples") {
  TargetModel zerod(1.0, 1.0, DataTerm::zero(), 3);
  CHECK(rho_log_unnormalized(Eigen::VectorXd::Zero(3), zerod) == 0.0);

  TargetModel m = scalar_lasso(1.0, 3.0, 2.7, 1.0);
  CHECK(rho_log_unnormalized(vec1(3.0), m) == doctest::Approx(-8.1).epsilon(1e-14));

  TargetModel two(1.0, 2.0, DataTerm::zero(), 2);
  Eigen::VectorXd x(2);
  x << 1, -1;
  CHECK(rho_log_unnormalized(x, two) == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("pi log density examples and domain") {
  TargetModel zerod(1.0, 1.0, DataTerm::zero(), 1);
  CHECK(pi_log_unnormalized(vec1(1.0), vec1(0.0), zerod) ==
        doctest::Approx(-0.5).epsilon(1e-14));

  TargetModel m = scalar_lasso(1.0, 3.0, 2.7, 1.0);
  CHECK(pi_log_unnormalized(vec1(1.0), vec1(1.0), m) == doctest::Approx(-4.7).epsilon(1e-14));

  CHECK_THROWS_AS(pi_log_unnormalized(vec1(0.0), vec1(1.0), zerod), std::domain_error);
}

TEST_CASE("grad_G examples") {
  TargetModel zerod(1.0, 1.0, DataTerm::zero(), 2);
  CHECK(grad_G(Eigen::VectorXd::Constant(2, 5.0), zerod) == Eigen::VectorXd::Zero(2));

  TargetModel m = scalar_lasso(1.0, 3.0, 1.0, 1.0);
  CHECK(grad_G(vec1(1.0), m)[0] == doctest::Approx(-2.0).epsilon(1e-14));

  Eigen::MatrixXd a = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  TargetModel diag(1.0, 1.0, DataTerm::quadratic(dense_operator(a), Eigen::VectorXd::Zero(2)));
  const Eigen::VectorXd g = grad_G(Eigen::VectorXd::Ones(2), diag);
  CHECK(g[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("model invariants") {
  CHECK_THROWS_AS(TargetModel(0.0, 1.0, DataTerm::zero(), 1), std::invalid_argument);
  CHECK_THROWS_AS(TargetModel(1.0, -1.0, DataTerm::zero(), 1), std::invalid_argument);
  CHECK_THROWS_AS(TargetModel(1.0, 1.0, DataTerm::zero(), 0), std::invalid_argument);
  Eigen::MatrixXd a(2, 3);
  a.setOnes();
  CHECK_THROWS_AS(DataTerm::quadratic(dense_operator(a), Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
  // cached L equals the squared spectral norm
  RngStream rng(3, 0);
  Eigen::MatrixXd m(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) m(i, j) = rng.normal();
  const DataTerm term = DataTerm::quadratic(dense_operator(m), Eigen::VectorXd::Zero(4));
  const double expect = operator_norm_estimate(*dense_operator(m)).value;
  CHECK(term.lipschitz_L == doctest::Approx(expect * expect).epsilon(1e-8));
}

TEST_CASE("laplace mixture identity examples") {
  QuadratureConfig quad;
  CHECK(laplace_mixture_residual(0.0, 1.0, quad) <= 1e-8);
  CHECK(laplace_mixture_residual(1.0, 1.0, quad) <= 1e-8);
  CHECK(laplace_mixture_residual(-2.0, 0.5, quad) <= 1e-8);
}

TEST_CASE("laplace mixture identity on the spec grid") {
  QuadratureConfig quad;
  for (double a : {0.5, 1.0, 2.7})
    for (int z = -5; z <= 5; ++z) CHECK(laplace_mixture_residual(z, a, quad) <= 1e-8);
}

TEST_CASE("pi is even in each v coordinate when G = 0") {
  TargetModel zerod(1.3, 0.7, DataTerm::zero(), 3);
  RngStream rng(4, 0);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd u = rng.normal_vec(3).cwiseAbs().array() + 0.1;
    const Eigen::VectorXd v = rng.normal_vec(3);
    Eigen::VectorXd vflip = v;
    vflip[t % 3] = -vflip[t % 3];
    CHECK(pi_log_unnormalized(u, v, zerod) ==
          doctest::Approx(pi_log_unnormalized(u, vflip, zerod)).epsilon(1e-14));
  }
}

TEST_CASE("rho differences reduce to the potential difference") {
  TargetModel m = scalar_lasso(1.0, 3.0, 2.7, 1.3);
  RngStream rng(5, 0);
  for (int t = 0; t < 50; ++t) {
    const double x = 3.0 * rng.normal();
    const double direct = rho_log_unnormalized(vec1(x), m) -
                          rho_log_unnormalized(vec1(0.0), m);
    const double expect =
        -m.beta * ((m.lambda * std::abs(x) + 0.5 * (x - 3.0) * (x - 3.0)) - 0.5 * 9.0);
    CHECK(direct == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("pi factorizes across coordinates when G = 0") {
  TargetModel joint(0.9, 1.7, DataTerm::zero(), 3);
  TargetModel single(0.9, 1.7, DataTerm::zero(), 1);
  RngStream rng(6, 0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd u = rng.normal_vec(3).cwiseAbs().array() + 0.05;
    const Eigen::VectorXd v = rng.normal_vec(3);
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
      sum += pi_log_unnormalized(vec1(u[i]), vec1(v[i]), single);
    CHECK(std::abs(pi_log_unnormalized(u, v, joint) - sum) <= 1e-12);
  }
}

TEST_CASE("group structure validation and product") {
  CHECK_THROWS_AS(GroupStructure({{0, 1}, {1, 2}}, 3), std::invalid_argument);  // overlap
  CHECK_THROWS_AS(GroupStructure({{0}}, 2), std::invalid_argument);             // not covering
  CHECK_THROWS_AS(GroupStructure({{0}, {}}, 1), std::invalid_argument);         // empty block

  GroupStructure g({{0, 2}, {1}}, 3);
  Eigen::VectorXd u(2), v(3);
  u << 2, 3;
  v << 1, 1, 1;
  const Eigen::VectorXd x = group_product(u, v, g);
  CHECK(x[0] == 2.0);
  CHECK(x[1] == 3.0);
  CHECK(x[2] == 2.0);
}

TEST_SUITE_END();
