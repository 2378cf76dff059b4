#pragma once

#include "hadlang/model.hpp"
#include "hadlang/rng.hpp"

#include <Eigen/Cholesky>

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

namespace hadlang {

// State of the overparameterized chain; every u_i stays strictly positive.
struct SamplerState {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

struct StepConfig {
  double dt = 1e-3;
  std::optional<double> moreau_gamma;  // MYULA only
};

// State of the latent-scale Gibbs chain; eta_i > 0.
struct GibbsState {
  Eigen::VectorXd x;
  Eigen::VectorXd eta;
};

struct ChainRecord {
  Eigen::MatrixXd samples;  // n_samples x d, recorded x (u .* v for Hadamard chains)
  std::optional<double> acceptance_rate;
  std::optional<double> min_u_seen;
  double wall_time_s = 0.0;
};

// Non-finite drift; carries the offending coordinate.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, Eigen::Index index_)
      : std::runtime_error(what), index(index_) {}
  Eigen::Index index;
};

// Step failure inside a chain run; carries the step number.
class ChainError : public std::runtime_error {
 public:
  ChainError(const std::string& what, long step_)
      : std::runtime_error(what), step(step_) {}
  long step;
};

// One step of the implicit-explicit scheme: explicit in the data term and
// noise, implicit in the lambda shrinkage and the 1/(beta u) singularity,
// solved per coordinate by the positive root of a quadratic. Noise vectors
// xi are standard normal (the increment is sqrt(dt) xi).
SamplerState hadamard_step_with_noise(const SamplerState& state, const TargetModel& model,
                                      const StepConfig& cfg, const Eigen::VectorXd& xi1,
                                      const Eigen::VectorXd& xi2);
SamplerState hadamard_step(const SamplerState& state, const TargetModel& model,
                           const StepConfig& cfg, RngStream& rng);

// Exact log transition density of one hadamard_step, normalized over the
// destination (u+, v+) in (0,inf)^d x R^d. The Jacobian term is evaluated at
// the destination u+; the quadratic in v uses the source v.
double hadamard_transition_logdensity(const SamplerState& from, const SamplerState& to,
                                      const TargetModel& model, const StepConfig& cfg);

// Metropolis adjustment of hadamard_step: accept with probability
// min(1, pi(to) q(to,from) / (pi(from) q(from,to))). Returns the (possibly
// unchanged) state and the accept flag.
std::pair<SamplerState, bool> hadamard_mala_step(const SamplerState& state,
                                                 const TargetModel& model, const StepConfig& cfg,
                                                 RngStream& rng);

// Elementwise sign(x) max(|x| - threshold, 0).
Eigen::VectorXd prox_l1(const Eigen::VectorXd& x, double threshold);

// ULA on the Moreau-smoothed potential G + R_gamma,
// grad R_gamma(x) = (x - prox_l1(x, gamma lambda)) / gamma.
Eigen::VectorXd myula_step_with_noise(const Eigen::VectorXd& x, const TargetModel& model,
                                      const StepConfig& cfg, const Eigen::VectorXd& xi);
Eigen::VectorXd myula_step(const Eigen::VectorXd& x, const TargetModel& model,
                           const StepConfig& cfg, RngStream& rng);

// Cached pieces of the Gibbs Gaussian conditional (quadratic data term).
struct GibbsWorkspace {
  Eigen::MatrixXd AtA;
  Eigen::VectorXd Aty;
  static GibbsWorkspace build(const TargetModel& model);
};

// Latent scale draw eta_i | x_i: 1/eta ~ inverse-Gaussian(beta lambda / |x|,
// beta^2 lambda^2) away from zero, and the Gamma(1/2, beta^2 lambda^2 / 2)
// limit inside |x_i| < 1e-12 (1 + ||x||_inf).
double gibbs_draw_eta(double x_i, double x_inf_norm, const TargetModel& model, RngStream& rng);

// One sweep: x | eta from the Gaussian with precision beta A^T A + diag(1/eta)
// and mean solving that system against beta A^T y, then eta | x coordinatewise.
GibbsState gibbs_step(const GibbsState& state, const TargetModel& model,
                      const GibbsWorkspace& ws, RngStream& rng);
GibbsState gibbs_step(const GibbsState& state, const TargetModel& model, RngStream& rng);

// Group variant: u has one radial coordinate per block b_j with singular
// drift p_j/(beta u_j) (p_j = |b_j|); the per-group root solves
// (1 + dt lambda) u^2 - w u - p_j dt / beta = 0. Reduces to hadamard_step for
// singleton blocks.
SamplerState group_hadamard_step_with_noise(const SamplerState& state,
                                            const GroupStructure& groups,
                                            const TargetModel& model, const StepConfig& cfg,
                                            const Eigen::VectorXd& xi1,
                                            const Eigen::VectorXd& xi2);
SamplerState group_hadamard_step(const SamplerState& state, const GroupStructure& groups,
                                 const TargetModel& model, const StepConfig& cfg, RngStream& rng);

// A chain owns its state; run_chain drives it. advance() returns the accept
// flag for Metropolis kernels and nullopt otherwise.
class MarkovChain {
 public:
  virtual ~MarkovChain() = default;
  virtual Eigen::Index dim() const = 0;
  virtual std::optional<bool> advance(RngStream& rng) = 0;
  virtual Eigen::VectorXd x() const = 0;
  // min_i u_i of the current state for chains with a positivity constraint.
  virtual std::optional<double> min_positive() const { return std::nullopt; }
};

SamplerState default_hadamard_init(Eigen::Index d);  // u = 1, v = 0

class HadamardUlaChain : public MarkovChain {
 public:
  HadamardUlaChain(TargetModel model, StepConfig cfg);
  HadamardUlaChain(TargetModel model, StepConfig cfg, SamplerState init);
  Eigen::Index dim() const override { return model_.dim; }
  std::optional<bool> advance(RngStream& rng) override;
  Eigen::VectorXd x() const override { return state_.u.cwiseProduct(state_.v); }
  std::optional<double> min_positive() const override { return state_.u.minCoeff(); }
  const SamplerState& state() const { return state_; }

 private:
  TargetModel model_;
  StepConfig cfg_;
  SamplerState state_;
};

class HadamardMalaChain : public MarkovChain {
 public:
  HadamardMalaChain(TargetModel model, StepConfig cfg);
  HadamardMalaChain(TargetModel model, StepConfig cfg, SamplerState init);
  Eigen::Index dim() const override { return model_.dim; }
  std::optional<bool> advance(RngStream& rng) override;
  Eigen::VectorXd x() const override { return state_.u.cwiseProduct(state_.v); }
  std::optional<double> min_positive() const override { return state_.u.minCoeff(); }

 private:
  TargetModel model_;
  StepConfig cfg_;
  SamplerState state_;
};

class GroupHadamardChain : public MarkovChain {
 public:
  GroupHadamardChain(TargetModel model, GroupStructure groups, StepConfig cfg);
  Eigen::Index dim() const override { return model_.dim; }
  std::optional<bool> advance(RngStream& rng) override;
  Eigen::VectorXd x() const override { return group_product(state_.u, state_.v, groups_); }
  std::optional<double> min_positive() const override { return state_.u.minCoeff(); }
  const SamplerState& state() const { return state_; }

 private:
  TargetModel model_;
  GroupStructure groups_;
  StepConfig cfg_;
  SamplerState state_;
};

class MyulaChain : public MarkovChain {
 public:
  MyulaChain(TargetModel model, StepConfig cfg);  // starts at x = 0
  MyulaChain(TargetModel model, StepConfig cfg, Eigen::VectorXd init);
  Eigen::Index dim() const override { return model_.dim; }
  std::optional<bool> advance(RngStream& rng) override;
  Eigen::VectorXd x() const override { return x_; }

 private:
  TargetModel model_;
  StepConfig cfg_;
  Eigen::VectorXd x_;
};

class GibbsChain : public MarkovChain {
 public:
  explicit GibbsChain(TargetModel model);  // starts at x = 0, eta = 1
  GibbsChain(TargetModel model, GibbsState init);
  Eigen::Index dim() const override { return model_.dim; }
  std::optional<bool> advance(RngStream& rng) override;
  Eigen::VectorXd x() const override { return state_.x; }
  const GibbsState& state() const { return state_; }

 private:
  TargetModel model_;
  GibbsWorkspace ws_;
  GibbsState state_;
};

// Burn-in, then record x after every `thin` steps, n_samples times. With
// n_samples = 0 the record is empty and min_u_seen covers the burn-in only.
// A StepError aborts the run as a ChainError with the step index attached.
ChainRecord run_chain(MarkovChain& chain, long n_burn, long n_samples, long thin, RngStream& rng);

}  // namespace hadlang
