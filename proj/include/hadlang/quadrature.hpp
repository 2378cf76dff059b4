#pragma once

#include <functional>

namespace hadlang {

struct QuadratureConfig {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  // Truncation radius for infinite domains; 0 picks it automatically so the
  // integrand tail is below 1e-14 of the bulk.
  double domain_halfwidth = 0.0;
};

// Adaptive Simpson on [a, b]. Throws on non-convergence (depth exhaustion).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, double rel_tol);

// Composite Gauss-Legendre on [a, b]: `panels` equal panels, `n_nodes` nodes
// each. Nodes and weights are computed once per order by Newton iteration.
double integrate_gauss_legendre(const std::function<double(double)>& f, double a, double b,
                                int n_nodes, int panels);

}  // namespace hadlang
