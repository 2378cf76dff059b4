#include "hadlang/samplers.hpp"

#include <chrono>
#include <cmath>

namespace hadlang {

namespace {

void check_state(const SamplerState& state, Eigen::Index d, const char* what) {
  if (state.u.size() != d || state.v.size() != d)
    throw std::invalid_argument(std::string(what) + ": state dimension mismatch");
  if ((state.u.array() <= 0.0).any())
    throw std::domain_error(std::string(what) + ": u must be strictly positive");
}

void check_grad(const Eigen::VectorXd& g, const char* what) {
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i]))
      throw StepError(std::string(what) + ": non-finite drift at coordinate " + std::to_string(i),
                      i);
}

// Positive root of (1 + dt lambda) u^2 - w u - q = 0, q > 0. The conjugate
// form avoids cancellation for w < 0 and keeps the root positive in floating
// point.
inline double positive_root(double w, double q, double one_plus) {
  const double disc = std::sqrt(w * w + 4.0 * q * one_plus);
  return w >= 0.0 ? (w + disc) / (2.0 * one_plus) : (2.0 * q) / (disc - w);
}

}  // namespace

SamplerState hadamard_step_with_noise(const SamplerState& state, const TargetModel& model,
                                      const StepConfig& cfg, const Eigen::VectorXd& xi1,
                                      const Eigen::VectorXd& xi2) {
  const Eigen::Index d = model.dim;
  check_state(state, d, "hadamard_step");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("hadamard_step: dt must be positive");
  if (xi1.size() != d || xi2.size() != d)
    throw std::invalid_argument("hadamard_step: noise dimension mismatch");

  const double dt = cfg.dt;
  const Eigen::VectorXd grad = grad_G(state.u.cwiseProduct(state.v), model);
  check_grad(grad, "hadamard_step");

  const double s = std::sqrt(2.0 * dt / model.beta);
  const Eigen::VectorXd wu = state.u - dt * state.v.cwiseProduct(grad) + s * xi1;
  const Eigen::VectorXd wv = state.v - dt * state.u.cwiseProduct(grad) + s * xi2;

  const double one_plus = 1.0 + dt * model.lambda;
  const double q = dt / model.beta;
  SamplerState next;
  next.u.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) next.u[i] = positive_root(wu[i], q, one_plus);
  next.v = wv / one_plus;
  return next;
}

SamplerState hadamard_step(const SamplerState& state, const TargetModel& model,
                           const StepConfig& cfg, RngStream& rng) {
  const Eigen::VectorXd xi1 = rng.normal_vec(model.dim);
  const Eigen::VectorXd xi2 = rng.normal_vec(model.dim);
  return hadamard_step_with_noise(state, model, cfg, xi1, xi2);
}

double hadamard_transition_logdensity(const SamplerState& from, const SamplerState& to,
                                      const TargetModel& model, const StepConfig& cfg) {
  const Eigen::Index d = model.dim;
  check_state(from, d, "hadamard_transition_logdensity (from)");
  if (to.u.size() != d || to.v.size() != d)
    throw std::invalid_argument("hadamard_transition_logdensity: destination dimension mismatch");
  if ((to.u.array() <= 0.0).any())
    throw std::domain_error("hadamard_transition_logdensity: destination u must be positive");
  if (!(cfg.dt > 0.0))
    throw std::invalid_argument("hadamard_transition_logdensity: dt must be positive");

  const double dt = cfg.dt;
  const double one_plus = 1.0 + dt * model.lambda;
  const Eigen::VectorXd grad = grad_G(from.u.cwiseProduct(from.v), model);
  check_grad(grad, "hadamard_transition_logdensity");

  const Eigen::VectorXd mean_u = from.u - dt * from.v.cwiseProduct(grad);
  const Eigen::VectorXd mean_v = from.v - dt * from.u.cwiseProduct(grad);
  const Eigen::VectorXd ru =
      one_plus * to.u - (dt / model.beta) * to.u.cwiseInverse() - mean_u;
  const Eigen::VectorXd rv = one_plus * to.v - mean_v;

  const double log_jac =
      (one_plus + (dt / model.beta) * to.u.array().square().inverse()).log().sum();
  const double dd = static_cast<double>(d);
  return -model.beta / (4.0 * dt) * (ru.squaredNorm() + rv.squaredNorm()) + log_jac +
         dd * std::log(one_plus) - dd * std::log(4.0 * M_PI * dt / model.beta);
}

std::pair<SamplerState, bool> hadamard_mala_step(const SamplerState& state,
                                                 const TargetModel& model, const StepConfig& cfg,
                                                 RngStream& rng) {
  SamplerState proposal = hadamard_step(state, model, cfg, rng);
  const double log_alpha = pi_log_unnormalized(proposal.u, proposal.v, model) +
                           hadamard_transition_logdensity(proposal, state, model, cfg) -
                           pi_log_unnormalized(state.u, state.v, model) -
                           hadamard_transition_logdensity(state, proposal, model, cfg);
  if (std::log(rng.uniform01()) < log_alpha) return {std::move(proposal), true};
  return {state, false};
}

Eigen::VectorXd prox_l1(const Eigen::VectorXd& x, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("prox_l1: threshold must be nonnegative");
  return x.array().sign() * (x.array().abs() - threshold).max(0.0);
}

Eigen::VectorXd myula_step_with_noise(const Eigen::VectorXd& x, const TargetModel& model,
                                      const StepConfig& cfg, const Eigen::VectorXd& xi) {
  if (!cfg.moreau_gamma) throw std::invalid_argument("myula_step: moreau_gamma is not set");
  const double gamma = *cfg.moreau_gamma;
  if (!(gamma > 0.0)) throw std::invalid_argument("myula_step: moreau_gamma must be positive");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("myula_step: dt must be positive");
  if (x.size() != model.dim || xi.size() != model.dim)
    throw std::invalid_argument("myula_step: dimension mismatch");

  const Eigen::VectorXd grad_data = grad_G(x, model);
  check_grad(grad_data, "myula_step");
  const Eigen::VectorXd grad_env = (x - prox_l1(x, gamma * model.lambda)) / gamma;
  return x - cfg.dt * (grad_data + grad_env) +
         std::sqrt(2.0 * cfg.dt / model.beta) * xi;
}

Eigen::VectorXd myula_step(const Eigen::VectorXd& x, const TargetModel& model,
                           const StepConfig& cfg, RngStream& rng) {
  return myula_step_with_noise(x, model, cfg, rng.normal_vec(model.dim));
}

GibbsWorkspace GibbsWorkspace::build(const TargetModel& model) {
  if (model.data_term.kind != DataTerm::Kind::quadratic)
    throw std::invalid_argument("gibbs: requires a quadratic data term");
  const Eigen::MatrixXd a = to_dense(*model.data_term.op);
  GibbsWorkspace ws;
  ws.AtA = a.transpose() * a;
  ws.Aty = a.transpose() * model.data_term.y;
  return ws;
}

double gibbs_draw_eta(double x_i, double x_inf_norm, const TargetModel& model, RngStream& rng) {
  const double bl = model.beta * model.lambda;
  const double eps0 = 1e-12 * (1.0 + x_inf_norm);
  if (std::abs(x_i) >= eps0) {
    // 1/eta | x ~ IG(beta lambda / |x|, beta^2 lambda^2)
    return 1.0 / rng.inverse_gaussian(bl / std::abs(x_i), bl * bl);
  }
  // |x| -> 0 limit of the conditional
  return rng.gamma(0.5, 0.5 * bl * bl);
}

GibbsState gibbs_step(const GibbsState& state, const TargetModel& model,
                      const GibbsWorkspace& ws, RngStream& rng) {
  const Eigen::Index d = model.dim;
  if (state.eta.size() != d)
    throw std::invalid_argument("gibbs_step: state dimension mismatch");
  if ((state.eta.array() <= 0.0).any())
    throw std::domain_error("gibbs_step: eta must be strictly positive");

  // x | eta ~ N(m, P^{-1}) with P = beta A^T A + diag(1/eta), P m = beta A^T y.
  Eigen::MatrixXd prec = model.beta * ws.AtA;
  prec.diagonal() += state.eta.cwiseInverse();
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gibbs_step: precision factorization failed");
  GibbsState next;
  next.x = llt.solve(model.beta * ws.Aty);
  next.x += llt.matrixU().solve(rng.normal_vec(d));

  const double x_inf = next.x.lpNorm<Eigen::Infinity>();
  next.eta.resize(d);
  for (Eigen::Index i = 0; i < d; ++i)
    next.eta[i] = gibbs_draw_eta(next.x[i], x_inf, model, rng);
  return next;
}

GibbsState gibbs_step(const GibbsState& state, const TargetModel& model, RngStream& rng) {
  return gibbs_step(state, model, GibbsWorkspace::build(model), rng);
}

SamplerState group_hadamard_step_with_noise(const SamplerState& state,
                                            const GroupStructure& groups,
                                            const TargetModel& model, const StepConfig& cfg,
                                            const Eigen::VectorXd& xi1,
                                            const Eigen::VectorXd& xi2) {
  const Eigen::Index k = groups.n_groups();
  const Eigen::Index d = groups.dim;
  if (d != model.dim) throw std::invalid_argument("group_hadamard_step: group/model mismatch");
  if (state.u.size() != k || state.v.size() != d)
    throw std::invalid_argument("group_hadamard_step: state dimension mismatch");
  if ((state.u.array() <= 0.0).any())
    throw std::domain_error("group_hadamard_step: u must be strictly positive");
  if (xi1.size() != k || xi2.size() != d)
    throw std::invalid_argument("group_hadamard_step: noise dimension mismatch");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("group_hadamard_step: dt must be positive");

  const double dt = cfg.dt;
  const Eigen::VectorXd grad = grad_G(group_product(state.u, state.v, groups), model);
  check_grad(grad, "group_hadamard_step");

  const double s = std::sqrt(2.0 * dt / model.beta);
  const double one_plus = 1.0 + dt * model.lambda;
  SamplerState next;
  next.u.resize(k);
  next.v.resize(d);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& block = groups.blocks[static_cast<std::size_t>(j)];
    double drift = 0.0;
    for (Eigen::Index i : block) drift += state.v[i] * grad[i];
    const double wu = state.u[j] - dt * drift + s * xi1[j];
    const double q = static_cast<double>(block.size()) * dt / model.beta;
    next.u[j] = positive_root(wu, q, one_plus);
    for (Eigen::Index i : block)
      next.v[i] = (state.v[i] - dt * state.u[j] * grad[i] + s * xi2[i]) / one_plus;
  }
  return next;
}

SamplerState group_hadamard_step(const SamplerState& state, const GroupStructure& groups,
                                 const TargetModel& model, const StepConfig& cfg,
                                 RngStream& rng) {
  const Eigen::VectorXd xi1 = rng.normal_vec(groups.n_groups());
  const Eigen::VectorXd xi2 = rng.normal_vec(groups.dim);
  return group_hadamard_step_with_noise(state, groups, model, cfg, xi1, xi2);
}

SamplerState default_hadamard_init(Eigen::Index d) {
  return {Eigen::VectorXd::Ones(d), Eigen::VectorXd::Zero(d)};
}

HadamardUlaChain::HadamardUlaChain(TargetModel model, StepConfig cfg)
    : HadamardUlaChain(model, cfg, default_hadamard_init(model.dim)) {}

HadamardUlaChain::HadamardUlaChain(TargetModel model, StepConfig cfg, SamplerState init)
    : model_(std::move(model)), cfg_(cfg), state_(std::move(init)) {
  check_state(state_, model_.dim, "HadamardUlaChain");
}

std::optional<bool> HadamardUlaChain::advance(RngStream& rng) {
  state_ = hadamard_step(state_, model_, cfg_, rng);
  return std::nullopt;
}

HadamardMalaChain::HadamardMalaChain(TargetModel model, StepConfig cfg)
    : HadamardMalaChain(model, cfg, default_hadamard_init(model.dim)) {}

HadamardMalaChain::HadamardMalaChain(TargetModel model, StepConfig cfg, SamplerState init)
    : model_(std::move(model)), cfg_(cfg), state_(std::move(init)) {
  check_state(state_, model_.dim, "HadamardMalaChain");
}

std::optional<bool> HadamardMalaChain::advance(RngStream& rng) {
  auto [next, accepted] = hadamard_mala_step(state_, model_, cfg_, rng);
  state_ = std::move(next);
  return accepted;
}

GroupHadamardChain::GroupHadamardChain(TargetModel model, GroupStructure groups, StepConfig cfg)
    : model_(std::move(model)),
      groups_(std::move(groups)),
      cfg_(cfg),
      state_{Eigen::VectorXd::Ones(groups_.n_groups()), Eigen::VectorXd::Zero(groups_.dim)} {}

std::optional<bool> GroupHadamardChain::advance(RngStream& rng) {
  state_ = group_hadamard_step(state_, groups_, model_, cfg_, rng);
  return std::nullopt;
}

MyulaChain::MyulaChain(TargetModel model, StepConfig cfg)
    : MyulaChain(model, cfg, Eigen::VectorXd::Zero(model.dim)) {}

MyulaChain::MyulaChain(TargetModel model, StepConfig cfg, Eigen::VectorXd init)
    : model_(std::move(model)), cfg_(cfg), x_(std::move(init)) {
  if (!cfg_.moreau_gamma) throw std::invalid_argument("MyulaChain: moreau_gamma is not set");
  if (x_.size() != model_.dim) throw std::invalid_argument("MyulaChain: init dimension mismatch");
}

std::optional<bool> MyulaChain::advance(RngStream& rng) {
  x_ = myula_step(x_, model_, cfg_, rng);
  return std::nullopt;
}

GibbsChain::GibbsChain(TargetModel model)
    : GibbsChain(model,
                 GibbsState{Eigen::VectorXd::Zero(model.dim), Eigen::VectorXd::Ones(model.dim)}) {}

GibbsChain::GibbsChain(TargetModel model, GibbsState init)
    : model_(std::move(model)), ws_(GibbsWorkspace::build(model_)), state_(std::move(init)) {
  if (state_.x.size() != model_.dim || state_.eta.size() != model_.dim)
    throw std::invalid_argument("GibbsChain: init dimension mismatch");
}

std::optional<bool> GibbsChain::advance(RngStream& rng) {
  state_ = gibbs_step(state_, model_, ws_, rng);
  return std::nullopt;
}

ChainRecord run_chain(MarkovChain& chain, long n_burn, long n_samples, long thin,
                      RngStream& rng) {
  if (n_burn < 0 || n_samples < 0) throw std::invalid_argument("run_chain: counts must be >= 0");
  if (thin < 1) throw std::invalid_argument("run_chain: thin must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  ChainRecord rec;
  rec.samples.resize(n_samples, chain.dim());

  std::optional<double> min_u = chain.min_positive();
  long n_accept = 0, n_mh = 0;
  long step_index = 0;

  auto one_step = [&]() {
    std::optional<bool> accepted;
    try {
      accepted = chain.advance(rng);
    } catch (const StepError& e) {
      throw ChainError(std::string(e.what()) + " (step " + std::to_string(step_index) + ")",
                       step_index);
    }
    ++step_index;
    if (accepted) {
      ++n_mh;
      if (*accepted) ++n_accept;
    }
    if (auto mu = chain.min_positive()) {
      if (!(*mu > 0.0))
        throw ChainError("run_chain: positivity lost at step " + std::to_string(step_index - 1),
                         step_index - 1);
      min_u = min_u ? std::min(*min_u, *mu) : mu;
    }
  };

  for (long k = 0; k < n_burn; ++k) one_step();
  for (long s = 0; s < n_samples; ++s) {
    for (long t = 0; t < thin; ++t) one_step();
    rec.samples.row(s) = chain.x();
  }

  if (n_mh > 0) rec.acceptance_rate = static_cast<double>(n_accept) / static_cast<double>(n_mh);
  rec.min_u_seen = min_u;
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace hadlang
