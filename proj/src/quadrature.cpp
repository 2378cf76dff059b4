#include "hadlang/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace hadlang {

namespace {

struct SimpsonCtx {
  const std::function<double(double)>& f;
  double abs_tol;
  double rel_tol;
};

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_rec(const SimpsonCtx& ctx, double a, double b, double fa, double fm, double fb,
                    double whole, int depth, int force) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = ctx.f(lm);
  const double frm = ctx.f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  const double tol = std::max(ctx.abs_tol, ctx.rel_tol * std::abs(left + right));
  // `force` levels are always subdivided: the acceptance test alone can miss
  // features narrower than the probe spacing of the first few levels.
  if (force <= 0 &&
      (std::abs(delta) <= 15.0 * tol || (b - a) < 1e-14 * (1.0 + std::abs(a))))
    return left + right + delta / 15.0;
  if (depth <= 0) throw std::runtime_error("integrate_adaptive: depth exhausted");
  return adaptive_rec(ctx, a, m, fa, flm, fm, left, depth - 1, force - 1) +
         adaptive_rec(ctx, m, b, fm, frm, fb, right, depth - 1, force - 1);
}

// Legendre nodes on (-1, 1) by Newton iteration from the Chebyshev guess.
struct GaussRule {
  std::vector<double> nodes, weights;
};

GaussRule build_gauss_rule(int n) {
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const GaussRule& gauss_rule(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_rule(n)).first;
  return it->second;
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, double rel_tol) {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
    throw std::invalid_argument("integrate_adaptive: tolerances must be positive");
  if (a == b) return 0.0;
  SimpsonCtx ctx{f, abs_tol, rel_tol};
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(fa, fm, fb, a, b);
  return adaptive_rec(ctx, a, b, fa, fm, fb, whole, 60, 6);
}

double integrate_gauss_legendre(const std::function<double(double)>& f, double a, double b,
                                int n_nodes, int panels) {
  if (n_nodes < 2 || panels < 1)
    throw std::invalid_argument("integrate_gauss_legendre: bad rule parameters");
  const GaussRule& rule = gauss_rule(n_nodes);
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double c = lo + 0.5 * h;
    double acc = 0.0;
    for (int i = 0; i < n_nodes; ++i) acc += rule.weights[i] * f(c + 0.5 * h * rule.nodes[i]);
    total += 0.5 * h * acc;
  }
  return total;
}

}  // namespace hadlang
