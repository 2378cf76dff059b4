#include "hadlang/rng.hpp"

#include "hadlang/quadrature.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace hadlang;

TEST_SUITE_BEGIN("rng");

TEST_CASE("replay determinism per (seed, stream)") {
  RngStream a(1234, 3), b(1234, 3), c(1234, 4);
  const Eigen::VectorXd va = a.normal_vec(64);
  const Eigen::VectorXd vb = b.normal_vec(64);
  CHECK(va == vb);
  CHECK(va != c.normal_vec(64));

  RngStream d(99, 0), e(99, 0);
  for (int i = 0; i < 100; ++i) CHECK(d.inverse_gaussian(1.5, 2.0) == e.inverse_gaussian(1.5, 2.0));
  for (int i = 0; i < 100; ++i) CHECK(d.gamma(0.5, 2.0) == e.gamma(0.5, 2.0));
}

TEST_CASE("normal_vec rejects n = 0") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(rng.normal_vec(0), std::invalid_argument);
}

TEST_CASE("normal moments at 1e6 draws") {
  RngStream rng(7, 0);
  const Eigen::VectorXd z = rng.normal_vec(1000000);
  CHECK(std::abs(z.mean()) <= 0.004);
  const double var = (z.array() - z.mean()).square().mean();
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
}

TEST_CASE("normal skewness and kurtosis at 1e7 draws") {
  RngStream rng(11, 0);
  const Eigen::Index n = 10000000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = rng.normal();
    s1 += z;
    s2 += z * z;
    s3 += z * z * z;
    s4 += z * z * z * z;
  }
  const double dn = static_cast<double>(n);
  const double m = s1 / dn;
  const double var = s2 / dn - m * m;
  const double skew = (s3 / dn - 3 * m * var - m * m * m) / std::pow(var, 1.5);
  const double kurt = s4 / dn / (var * var) - 3.0;
  CHECK(std::abs(skew) <= 0.01);
  CHECK(std::abs(kurt) <= 0.02);
}

TEST_CASE("inverse gaussian mean, large shape") {
  RngStream rng(21, 0);
  double acc = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += rng.inverse_gaussian(2.0, 1e8);
  CHECK(acc / n == doctest::Approx(2.0).epsilon(0.005));
}

TEST_CASE("inverse gaussian variance mu^3/shape") {
  RngStream rng(22, 0);
  const int n = 1000000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.inverse_gaussian(1.0, 1.0);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(var - 1.0) <= 0.05);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("inverse gaussian matches its density (KS vs quadrature CDF)") {
  const double mu = 1.3, shape = 2.1;
  auto density = [&](double x) {
    if (x <= 0.0) return 0.0;
    return std::sqrt(shape / (2.0 * M_PI * x * x * x)) *
           std::exp(-shape * (x - mu) * (x - mu) / (2.0 * mu * mu * x));
  };
  RngStream rng(23, 0);
  const int n = 100000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = rng.inverse_gaussian(mu, shape);
  std::sort(draws.begin(), draws.end());
  // empirical CDF vs numeric integration of the density
  double sup = 0, mass = 0, prev = 0;
  for (int i = 0; i < n; ++i) {
    mass += integrate_gauss_legendre(density, prev, draws[i], 16, 4);
    prev = draws[i];
    sup = std::max({sup, std::abs(mass - double(i) / n), std::abs(mass - double(i + 1) / n)});
  }
  CHECK(sup <= 0.005);
}

TEST_CASE("gamma sampler moments") {
  RngStream rng(31, 0);
  const int n = 1000000;
  double acc = 0;
  for (int i = 0; i < n; ++i) acc += rng.gamma(1.0, 1.0);
  CHECK(acc / n == doctest::Approx(1.0).epsilon(0.01));
  acc = 0;
  for (int i = 0; i < n; ++i) acc += rng.gamma(0.5, 2.0);
  CHECK(std::abs(acc / n - 0.25) <= 0.01);
}

TEST_CASE("parameter validation") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(rng.inverse_gaussian(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.inverse_gaussian(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.gamma(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rng.gamma(1.0, -2.0), std::invalid_argument);
}

TEST_SUITE_END();
