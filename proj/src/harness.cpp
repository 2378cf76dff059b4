#include "hadlang/harness.hpp"

#include "hadlang/version.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace hadlang {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- utilities

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

// ------------------------------------------------------------ config basics

const std::vector<std::string> kPresetNames = {"rate_1d",     "mixing_1d", "dim20",
                                               "haar_deconv", "null_g0",   "strong_rate",
                                               "custom"};
const std::vector<std::string> kSamplerNames = {"hadamard", "hadamard_mala", "myula", "gibbs"};

Preset preset_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kPresetNames.size(); ++i)
    if (kPresetNames[i] == s) return static_cast<Preset>(i);
  throw ConfigError("preset: unknown value '" + s + "'");
}

SamplerKind sampler_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kSamplerNames.size(); ++i)
    if (kSamplerNames[i] == s) return static_cast<SamplerKind>(i);
  std::string valid;
  for (const auto& n : kSamplerNames) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("samplers: unknown sampler '" + s + "' (valid: " + valid + ")");
}

std::string gamma_rule_name(GammaRule r) {
  switch (r) {
    case GammaRule::fixed: return "fixed";
    case GammaRule::recipe: return "recipe";
    case GammaRule::sqrt_dt: return "sqrt_dt";
  }
  return "recipe";
}

GammaRule gamma_rule_from_string(const std::string& s, const std::string& key) {
  if (s == "fixed") return GammaRule::fixed;
  if (s == "recipe") return GammaRule::recipe;
  if (s == "sqrt_dt") return GammaRule::sqrt_dt;
  throw ConfigError(key + ": unknown value '" + s + "' (valid: fixed, recipe, sqrt_dt)");
}

class KeyReader {
 public:
  explicit KeyReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    return it->second;
  }

  double num(const std::string& key, double dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(key + ": not a number ('" + it->second + "')");
    }
  }

  long integer(const std::string& key, long dflt) {
    const double v = num(key, static_cast<double>(dflt));
    if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
    return static_cast<long>(v);
  }

  bool boolean(const std::string& key, bool dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError(key + ": expected true or false");
  }

  std::vector<double> list(const std::string& key, std::vector<double> dflt) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    used_.insert(key);
    std::vector<double> out;
    for (const auto& tok : split(it->second, ',')) {
      if (tok.empty()) continue;
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError(key + ": not a number list ('" + it->second + "')");
      }
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) throw ConfigError("unknown key '" + k + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

ExperimentConfig preset_defaults(Preset p) {
  ExperimentConfig c;
  c.preset = p;
  switch (p) {
    case Preset::rate_1d: {
      c.lambda = 2.7;
      c.beta = 1.0;
      c.d = 1;
      c.data_term = "quadratic";
      c.operator_kind = "scalar";
      c.scalar_a = 1.0;
      c.y_values = {3.0};
      c.n_chains = 4;
      c.n_samples = 1000000;
      c.thin = 1;
      c.burn_time = 800.0;
      for (int j = -1; j <= 4; ++j) c.dt_grid.push_back(0.064 * std::pow(2.0, -j));
      SamplerJobSpec had;
      had.kind = SamplerKind::hadamard;
      SamplerJobSpec my;
      my.kind = SamplerKind::myula;
      my.gamma_rule = GammaRule::sqrt_dt;
      c.samplers = {had, my};
      break;
    }
    case Preset::mixing_1d: {
      c.lambda = 2.7;
      c.beta = 1.0;
      c.d = 1;
      c.data_term = "quadratic";
      c.operator_kind = "scalar";
      c.scalar_a = 1.0;
      c.y_values = {3.0};
      c.mixing_chains = 5000;
      c.mixing_iters = 10000;
      SamplerJobSpec had;
      had.kind = SamplerKind::hadamard;
      had.dt = 5e-4;
      c.samplers = {had};
      break;
    }
    case Preset::dim20: {
      c.beta = 1.0;
      c.d = 20;
      c.rows = 40;
      c.data_term = "quadratic";
      c.operator_kind = "dense_gaussian";
      c.lambda_from_data = true;
      c.signal_kind = "k_sparse";
      c.signal_k = 2;
      SamplerJobSpec had;
      had.kind = SamplerKind::hadamard;
      had.n_burn = 10000;
      had.n_samples = 100000;
      had.thin = 1;
      SamplerJobSpec my = had;
      my.kind = SamplerKind::myula;
      SamplerJobSpec gb;
      gb.kind = SamplerKind::gibbs;
      gb.n_burn = 10;
      gb.n_samples = 10000;
      gb.thin = 1;
      c.samplers = {had, my, gb};
      c.n_burn = 10000;
      c.n_samples = 100000;
      break;
    }
    case Preset::haar_deconv: {
      c.lambda = 1.0;
      c.beta = 20.0;
      c.d = 1024;
      c.data_term = "quadratic";
      c.operator_kind = "haar_conv";
      c.kernel_sigma = 2.0;
      c.kernel_radius_sigmas = 4.0;
      c.noise_sigma = 0.01;
      c.signal_kind = "piecewise_constant";
      c.signal_jumps = 10;
      c.n_burn = 1000;
      c.n_samples = 10000;
      c.thin = 1;
      SamplerJobSpec had;
      had.kind = SamplerKind::hadamard;
      had.dt = 0.01;
      SamplerJobSpec my = had;
      my.kind = SamplerKind::myula;
      my.gamma = 0.05;  // the recipe's 1/L would smooth out the jump signal
      my.gamma_rule = GammaRule::fixed;
      c.samplers = {had, my};
      break;
    }
    case Preset::null_g0: {
      c.lambda = 1.0;
      c.beta = 1.0;
      c.d = 4;
      c.data_term = "zero";
      c.n_burn = 100000;
      c.n_samples = 1000000;
      c.thin = 20;
      SamplerJobSpec had;
      had.kind = SamplerKind::hadamard;
      had.dt = 1e-3;
      c.samplers = {had};
      break;
    }
    case Preset::strong_rate: {
      c.d = 1;
      for (int j = 5; j <= 10; ++j) c.dt_grid.push_back(std::pow(2.0, -j));
      c.strong_paths = 400;
      c.strong_refine = 64;
      c.strong_T = 1.0;
      SamplerJobSpec had;
      had.kind = SamplerKind::hadamard;
      c.samplers = {had};
      break;
    }
    case Preset::custom:
      break;
  }
  return c;
}

void validate_config(const ExperimentConfig& c) {
  if (!(c.lambda > 0.0)) throw ConfigError("model.lambda: must be positive");
  if (!(c.beta > 0.0)) throw ConfigError("model.beta: must be positive");
  if (c.d < 1) throw ConfigError("model.d: must be >= 1");
  if (c.n_chains < 1) throw ConfigError("n_chains: must be >= 1");
  if (c.data_term != "zero" && c.data_term != "quadratic")
    throw ConfigError("model.data_term: must be zero or quadratic");
  if (c.operator_kind != "scalar" && c.operator_kind != "dense_gaussian" &&
      c.operator_kind != "haar_conv")
    throw ConfigError("model.operator: must be scalar, dense_gaussian or haar_conv");
  if (c.data_term == "quadratic" && c.y_values.empty()) {
    if (c.signal_kind != "k_sparse" && c.signal_kind != "piecewise_constant")
      throw ConfigError("signal.kind: must be k_sparse or piecewise_constant");
    if (c.signal_kind == "k_sparse" && (c.signal_k < 0 || c.signal_k > c.d))
      throw ConfigError("signal.k: out of range");
    if (c.signal_kind == "piecewise_constant" && (c.signal_jumps < 0 || c.signal_jumps >= c.d))
      throw ConfigError("signal.jumps: out of range");
  }
  if (c.n_burn < 0) throw ConfigError("run.n_burn: must be >= 0");
  if (c.n_samples < 0) throw ConfigError("run.n_samples: must be >= 0");
  if (c.thin < 1) throw ConfigError("run.thin: must be >= 1");
  if (c.preset != Preset::strong_rate && c.samplers.empty())
    throw ConfigError("samplers: list must not be empty");
  for (const auto& s : c.samplers) {
    const std::string name = to_string(s.kind);
    if (s.dt < 0.0) throw ConfigError("sampler." + name + ".dt: must be positive");
    if (s.dt == 0.0 && c.preset == Preset::custom && s.kind != SamplerKind::gibbs &&
        c.data_term == "zero")
      throw ConfigError("sampler." + name + ".dt: required (cannot derive from a zero data term)");
    if (s.gamma < 0.0) throw ConfigError("sampler." + name + ".gamma: must be positive");
    if (s.kind == SamplerKind::gibbs && c.data_term != "quadratic")
      throw ConfigError("sampler.gibbs: requires a quadratic data term");
  }
  if (c.preset == Preset::rate_1d || c.preset == Preset::strong_rate) {
    if (c.dt_grid.empty()) throw ConfigError("rate.dt_grid: must not be empty");
    for (double dt : c.dt_grid)
      if (!(dt > 0.0)) throw ConfigError("rate.dt_grid: entries must be positive");
  }
  if (c.preset == Preset::rate_1d && !(c.burn_time > 0.0))
    throw ConfigError("rate.burn_time: must be positive");
  if (c.preset == Preset::rate_1d && !(c.rate_record_stride >= 0.0))
    throw ConfigError("rate.record_stride_time: must be nonnegative");
  if (c.mixing_chains < 1) throw ConfigError("mixing.chains: must be >= 1");
  if (c.mixing_iters < 10) throw ConfigError("mixing.iters: must be >= 10");
  if (c.strong_paths < 1) throw ConfigError("strong.paths: must be >= 1");
  if (c.strong_refine < 2) throw ConfigError("strong.refine: must be >= 2");
  if (!(c.strong_T > 0.0)) throw ConfigError("strong.T: must be positive");
  if (!(c.max_samples_mb > 0.0)) throw ConfigError("output.max_samples_mb: must be positive");
  if ((c.preset == Preset::rate_1d || c.preset == Preset::mixing_1d) && c.d != 1)
    throw ConfigError("model.d: this preset is one-dimensional");
  if (c.preset == Preset::rate_1d)
    for (const auto& s : c.samplers)
      if (s.kind == SamplerKind::gibbs)
        throw ConfigError("samplers: rate_1d sweeps a step size; gibbs has none");
}

}  // namespace

std::string to_string(Preset p) { return kPresetNames[static_cast<std::size_t>(p)]; }
std::string to_string(SamplerKind k) { return kSamplerNames[static_cast<std::size_t>(k)]; }

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
    kv[key] = value;
  }

  KeyReader r(std::move(kv));
  const Preset preset = preset_from_string(r.str("preset", "custom"));
  ExperimentConfig c = preset_defaults(preset);

  c.seed = static_cast<std::uint64_t>(r.integer("seed", static_cast<long>(c.seed)));
  c.n_chains = static_cast<int>(r.integer("n_chains", c.n_chains));
  c.out_dir = r.str("out", c.out_dir);

  c.lambda = r.num("model.lambda", c.lambda);
  c.beta = r.num("model.beta", c.beta);
  c.d = r.integer("model.d", c.d);
  c.data_term = r.str("model.data_term", c.data_term);
  c.operator_kind = r.str("model.operator", c.operator_kind);
  c.scalar_a = r.num("model.scalar_a", c.scalar_a);
  c.rows = r.integer("model.rows", c.rows);
  c.gauss_variance = r.num("model.gauss_variance", c.gauss_variance);
  c.kernel_sigma = r.num("model.kernel_sigma", c.kernel_sigma);
  c.kernel_radius_sigmas = r.num("model.kernel_radius_sigmas", c.kernel_radius_sigmas);
  c.noise_sigma = r.num("model.noise_sigma", c.noise_sigma);
  c.lambda_from_data = r.boolean("model.lambda_from_data", c.lambda_from_data);
  {
    std::vector<double> dflt = c.y_values;
    c.y_values = r.list("model.y", dflt);
  }
  c.signal_kind = r.str("signal.kind", c.signal_kind);
  c.signal_k = static_cast<int>(r.integer("signal.k", c.signal_k));
  c.signal_jumps = static_cast<int>(r.integer("signal.jumps", c.signal_jumps));

  if (r.has("samplers")) {
    std::vector<SamplerJobSpec> specs;
    for (const auto& name : split(r.str("samplers", ""), ',')) {
      if (name.empty()) continue;
      SamplerJobSpec spec;
      spec.kind = sampler_from_string(name);
      // keep preset defaults for a sampler the preset already configured
      for (const auto& p : c.samplers)
        if (p.kind == spec.kind) spec = p;
      specs.push_back(spec);
    }
    c.samplers = specs;
  }
  for (auto& spec : c.samplers) {
    const std::string base = "sampler." + to_string(spec.kind) + ".";
    spec.dt = r.num(base + "dt", spec.dt);
    if (r.has(base + "dt") && !(spec.dt > 0.0)) throw ConfigError(base + "dt: must be positive");
    spec.gamma = r.num(base + "gamma", spec.gamma);
    if (r.has(base + "gamma")) {
      if (!(spec.gamma > 0.0)) throw ConfigError(base + "gamma: must be positive");
      spec.gamma_rule = GammaRule::fixed;
    }
    spec.gamma_rule =
        gamma_rule_from_string(r.str(base + "gamma_rule", gamma_rule_name(spec.gamma_rule)),
                               base + "gamma_rule");
    spec.n_burn = r.integer(base + "n_burn", spec.n_burn);
    spec.n_samples = r.integer(base + "n_samples", spec.n_samples);
    spec.thin = r.integer(base + "thin", spec.thin);
  }

  c.n_burn = r.integer("run.n_burn", c.n_burn);
  c.n_samples = r.integer("run.n_samples", c.n_samples);
  c.thin = r.integer("run.thin", c.thin);

  c.dt_grid = r.list("rate.dt_grid", c.dt_grid);
  c.burn_time = r.num("rate.burn_time", c.burn_time);
  c.rate_record_stride = r.num("rate.record_stride_time", c.rate_record_stride);
  c.mixing_chains = static_cast<int>(r.integer("mixing.chains", c.mixing_chains));
  c.mixing_iters = r.integer("mixing.iters", c.mixing_iters);
  c.strong_paths = static_cast<int>(r.integer("strong.paths", c.strong_paths));
  c.strong_refine = static_cast<int>(r.integer("strong.refine", c.strong_refine));
  c.strong_T = r.num("strong.T", c.strong_T);
  c.write_samples = r.boolean("output.write_samples", c.write_samples);
  c.max_samples_mb = r.num("output.max_samples_mb", c.max_samples_mb);

  r.reject_unknown();
  validate_config(c);
  return c;
}

ExperimentConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config(const ExperimentConfig& c) {
  std::map<std::string, std::string> kv;
  kv["preset"] = to_string(c.preset);
  kv["seed"] = std::to_string(c.seed);
  kv["n_chains"] = std::to_string(c.n_chains);
  // the output directory is not part of the experiment's identity
  kv["model.lambda"] = fmt_double(c.lambda);
  kv["model.beta"] = fmt_double(c.beta);
  kv["model.d"] = std::to_string(c.d);
  kv["model.data_term"] = c.data_term;
  kv["model.operator"] = c.operator_kind;
  kv["model.scalar_a"] = fmt_double(c.scalar_a);
  kv["model.rows"] = std::to_string(c.rows);
  kv["model.gauss_variance"] = fmt_double(c.gauss_variance);
  kv["model.kernel_sigma"] = fmt_double(c.kernel_sigma);
  kv["model.kernel_radius_sigmas"] = fmt_double(c.kernel_radius_sigmas);
  kv["model.noise_sigma"] = fmt_double(c.noise_sigma);
  kv["model.lambda_from_data"] = c.lambda_from_data ? "true" : "false";
  kv["model.y"] = fmt_list(c.y_values);
  kv["signal.kind"] = c.signal_kind;
  kv["signal.k"] = std::to_string(c.signal_k);
  kv["signal.jumps"] = std::to_string(c.signal_jumps);
  std::string names;
  for (const auto& s : c.samplers) names += (names.empty() ? "" : ",") + to_string(s.kind);
  kv["samplers"] = names;
  for (const auto& s : c.samplers) {
    const std::string base = "sampler." + to_string(s.kind) + ".";
    kv[base + "dt"] = fmt_double(s.dt);
    kv[base + "gamma"] = fmt_double(s.gamma);
    kv[base + "gamma_rule"] = gamma_rule_name(s.gamma_rule);
    kv[base + "n_burn"] = std::to_string(s.n_burn);
    kv[base + "n_samples"] = std::to_string(s.n_samples);
    kv[base + "thin"] = std::to_string(s.thin);
  }
  kv["run.n_burn"] = std::to_string(c.n_burn);
  kv["run.n_samples"] = std::to_string(c.n_samples);
  kv["run.thin"] = std::to_string(c.thin);
  kv["rate.dt_grid"] = fmt_list(c.dt_grid);
  kv["rate.burn_time"] = fmt_double(c.burn_time);
  kv["rate.record_stride_time"] = fmt_double(c.rate_record_stride);
  kv["mixing.chains"] = std::to_string(c.mixing_chains);
  kv["mixing.iters"] = std::to_string(c.mixing_iters);
  kv["strong.paths"] = std::to_string(c.strong_paths);
  kv["strong.refine"] = std::to_string(c.strong_refine);
  kv["strong.T"] = fmt_double(c.strong_T);
  kv["output.write_samples"] = c.write_samples ? "true" : "false";
  kv["output.max_samples_mb"] = fmt_double(c.max_samples_mb);

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a64(canonical_config(c)); }

fs::path resolve_out_dir(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SAMPLER_OUT"); env && *env) return fs::path(env);
  return fs::path(cfg.out_dir);
}

SignalInfo synthesize_signal(const std::string& kind, int k_or_jumps, Eigen::Index d,
                             RngStream& rng) {
  if (d < 1) throw std::invalid_argument("synthesize_signal: d must be >= 1");
  SignalInfo info;
  info.x = Eigen::VectorXd::Zero(d);
  if (kind == "k_sparse") {
    const int k = k_or_jumps;
    if (k < 0 || k > d) throw std::invalid_argument("synthesize_signal: k out of range");
    // partial Fisher-Yates over 0..d-1
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int j = 0; j < k; ++j) {
      const auto pick =
          j + static_cast<Eigen::Index>(rng.uniform01() * static_cast<double>(d - j));
      std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick)]);
      info.positions.push_back(idx[static_cast<std::size_t>(j)]);
    }
    std::sort(info.positions.begin(), info.positions.end());
    for (Eigen::Index p : info.positions) info.x[p] = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  } else if (kind == "piecewise_constant") {
    const int jumps = k_or_jumps;
    if (jumps < 0 || jumps >= d) throw std::invalid_argument("synthesize_signal: jumps out of range");
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(d - 1));
    for (Eigen::Index i = 0; i < d - 1; ++i) pos[static_cast<std::size_t>(i)] = i + 1;
    for (int j = 0; j < jumps; ++j) {
      const auto pick =
          j + static_cast<Eigen::Index>(rng.uniform01() * static_cast<double>(d - 1 - j));
      std::swap(pos[static_cast<std::size_t>(j)], pos[static_cast<std::size_t>(pick)]);
      info.positions.push_back(pos[static_cast<std::size_t>(j)]);
    }
    std::sort(info.positions.begin(), info.positions.end());
    // alternating signs keep every jump visible after blurring
    double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    double level = sign * (0.5 + rng.uniform01());
    std::size_t next = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (next < info.positions.size() && i == info.positions[next]) {
        sign = -sign;
        level = sign * (0.5 + rng.uniform01());
        ++next;
      }
      info.x[i] = level;
    }
  } else {
    throw std::invalid_argument("synthesize_signal: unknown kind '" + kind + "'");
  }
  return info;
}

namespace {

// --------------------------------------------------------------- job runner

void run_parallel(std::size_t n_jobs, int workers, const std::function<void(std::size_t)>& work) {
  workers = std::max(1, workers);
  if (workers == 1 || n_jobs <= 1) {
    for (std::size_t j = 0; j < n_jobs; ++j) work(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mtx;
  const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n_jobs));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t j = next.fetch_add(1);
        if (j >= n_jobs) return;
        try {
          work(j);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mtx);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------- the model

struct BuiltModel {
  TargetModel model;
  SignalInfo signal;  // empty when y is explicit
  json meta;
};

BuiltModel build_model(const ExperimentConfig& c, RngStream& rng) {
  json meta;
  if (c.data_term == "zero") {
    TargetModel m(c.lambda, c.beta, DataTerm::zero(), c.d);
    meta["lambda"] = m.lambda;
    meta["beta"] = m.beta;
    meta["d"] = static_cast<long>(m.dim);
    meta["data_term"] = "zero";
    return BuiltModel{std::move(m), SignalInfo{}, std::move(meta)};
  }

  LinOpPtr a;
  if (c.operator_kind == "scalar") {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = c.scalar_a;
    a = dense_operator(m);
  } else if (c.operator_kind == "dense_gaussian") {
    if (c.rows < 1) throw ConfigError("model.rows: required for dense_gaussian");
    const double var =
        c.gauss_variance > 0.0 ? c.gauss_variance : 1.0 / (16.0 * static_cast<double>(c.rows));
    const double sd = std::sqrt(var);
    Eigen::MatrixXd m(c.rows, c.d);
    for (Eigen::Index i = 0; i < c.rows; ++i)
      for (Eigen::Index j = 0; j < c.d; ++j) m(i, j) = sd * rng.normal();
    a = dense_operator(m);
    meta["gauss_variance"] = var;
  } else {  // haar_conv: A = U W^T
    const int radius = static_cast<int>(std::ceil(c.kernel_radius_sigmas * c.kernel_sigma));
    const Eigen::VectorXd kernel = gaussian_kernel(c.kernel_sigma, radius);
    a = compose(convolution_operator(kernel, c.d), haar_operator(c.d, /*forward=*/false));
    meta["kernel_sigma"] = c.kernel_sigma;
    meta["kernel_taps"] = static_cast<long>(kernel.size());
  }

  SignalInfo signal;
  Eigen::VectorXd y;
  if (!c.y_values.empty()) {
    y = Eigen::Map<const Eigen::VectorXd>(c.y_values.data(),
                                          static_cast<Eigen::Index>(c.y_values.size()));
    if (y.size() != a->rows()) throw ConfigError("model.y: length must equal operator rows");
  } else {
    if (c.operator_kind == "haar_conv") {
      // ground truth lives in signal space; the chain variable is its
      // coefficient vector. Jump positions are the change points of the
      // periodized signal, which is what the circular operator sees.
      SignalInfo pixel = synthesize_signal(c.signal_kind, c.signal_jumps, c.d, rng);
      signal.positions.clear();
      for (Eigen::Index i = 0; i < c.d; ++i)
        if (pixel.x[i] != pixel.x[(i + c.d - 1) % c.d]) signal.positions.push_back(i);
      signal.x = haar_forward(pixel.x);
      meta["signal_kind"] = c.signal_kind;
    } else {
      signal = synthesize_signal(c.signal_kind, c.signal_k, c.d, rng);
      meta["signal_kind"] = c.signal_kind;
    }
    y = a->apply(signal.x);
    if (c.noise_sigma > 0.0)
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += c.noise_sigma * rng.normal();
  }

  double lambda = c.lambda;
  if (c.lambda_from_data) lambda = 0.5 * a->apply_adjoint(y).lpNorm<Eigen::Infinity>();

  DataTerm term = DataTerm::quadratic(a, y);
  TargetModel m(lambda, c.beta, std::move(term));
  meta["lambda"] = m.lambda;
  meta["beta"] = m.beta;
  meta["d"] = static_cast<long>(m.dim);
  meta["data_term"] = "quadratic";
  meta["operator"] = c.operator_kind;
  meta["lipschitz_L"] = m.data_term.lipschitz_L;
  if (!signal.positions.empty()) {
    meta["signal_positions"] = signal.positions;
  }
  return BuiltModel{std::move(m), std::move(signal), std::move(meta)};
}

struct ResolvedSampler {
  SamplerJobSpec spec;
  double dt = 0.0;
  double gamma = 0.0;  // myula only
  long n_burn = 0, n_samples = 0, thin = 1;
};

double recipe_gamma(double L) { return L > 0.0 ? 1.0 / L : 1.0; }

ResolvedSampler resolve_sampler(const SamplerJobSpec& spec, const ExperimentConfig& c,
                                const TargetModel& model) {
  ResolvedSampler r;
  r.spec = spec;
  r.n_burn = spec.n_burn >= 0 ? spec.n_burn : c.n_burn;
  r.n_samples = spec.n_samples >= 0 ? spec.n_samples : c.n_samples;
  r.thin = spec.thin >= 1 ? spec.thin : c.thin;

  const double L = model.data_term.lipschitz_L;
  if (spec.kind == SamplerKind::myula) {
    switch (spec.gamma_rule) {
      case GammaRule::fixed:
        if (!(spec.gamma > 0.0))
          throw ConfigError("sampler.myula.gamma: required for gamma_rule = fixed");
        r.gamma = spec.gamma;
        break;
      case GammaRule::recipe:
        r.gamma = spec.gamma > 0.0 ? spec.gamma : recipe_gamma(L);
        break;
      case GammaRule::sqrt_dt:
        if (!(spec.dt > 0.0))
          throw ConfigError("sampler.myula.dt: required for gamma_rule = sqrt_dt");
        r.gamma = std::sqrt(spec.dt);
        break;
    }
    r.dt = spec.dt > 0.0 ? spec.dt : r.gamma / (5.0 * (r.gamma * L + 1.0));
  } else {
    r.dt = spec.dt;
    if (r.dt == 0.0 && spec.kind != SamplerKind::gibbs) {
      if (!(L > 0.0))
        throw ConfigError("sampler." + to_string(spec.kind) + ".dt: required for this model");
      // the overparameterized drift feels the data term through u, whose
      // stationary scale is 1/sqrt(beta lambda); both limits are needed
      r.dt = std::min(model.beta * model.lambda / (2.0 * L), 1.0 / (10.0 * L));
    }
  }
  return r;
}

std::unique_ptr<MarkovChain> make_chain(const ResolvedSampler& rs, const TargetModel& model) {
  StepConfig cfg;
  cfg.dt = rs.dt;
  switch (rs.spec.kind) {
    case SamplerKind::hadamard:
      return std::make_unique<HadamardUlaChain>(model, cfg);
    case SamplerKind::hadamard_mala:
      return std::make_unique<HadamardMalaChain>(model, cfg);
    case SamplerKind::myula:
      cfg.moreau_gamma = rs.gamma;
      return std::make_unique<MyulaChain>(model, cfg);
    case SamplerKind::gibbs:
      return std::make_unique<GibbsChain>(model);
  }
  throw std::logic_error("make_chain: unreachable");
}

// ------------------------------------------------------------- file writing

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string csv_preamble(const ExperimentConfig& cfg) {
  return "# config_hash=" + hex64(config_hash(cfg)) + " version=" HADLANG_VERSION "\n";
}

void write_csv(const fs::path& path, const ExperimentConfig& cfg,
               const std::vector<std::string>& header,
               const std::function<bool(std::size_t, std::string&)>& row) {
  std::string text = csv_preamble(cfg);
  for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
  text += "\n";
  std::string line;
  for (std::size_t i = 0; row(i, line); ++i) text += line + "\n";
  write_text(path, text);
}

json stats_to_json(const SummaryStats& s) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  json j;
  j["mean"] = vec(s.mean);
  j["variance"] = vec(s.variance);
  j["q05"] = vec(s.q05);
  j["q95"] = vec(s.q95);
  j["ess"] = vec(s.ess);
  j["stderr_mean"] = vec(s.stderr_mean);
  return j;
}

json job_to_json(const JobResult& r) {
  json j;
  j["sampler"] = r.sampler;
  j["chain"] = r.chain_id;
  if (r.error.empty()) {
    j["stats"] = stats_to_json(r.stats);
    if (r.acceptance_rate) j["acceptance_rate"] = *r.acceptance_rate;
    if (r.min_u_seen) j["min_u_seen"] = *r.min_u_seen;
  }
  j["wall_time_s"] = r.wall_time_s;
  j["error"] = r.error;
  return j;
}

// -------------------------------------------------------------- CDF helpers

double laplace_cdf(double x, double rate) {
  return x < 0.0 ? 0.5 * std::exp(rate * x) : 1.0 - 0.5 * std::exp(-rate * x);
}
double rayleigh_cdf(double r, double beta_lambda) {
  return r <= 0.0 ? 0.0 : 1.0 - std::exp(-0.5 * beta_lambda * r * r);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, int workers) {
  validate_config(cfg);
  ExperimentReport report;
  report.cfg = cfg;
  report.out_dir = resolve_out_dir(cfg);
  fs::create_directories(report.out_dir);

  RngStream design_rng(cfg.seed, 0);  // stream 0 is reserved for synthesis
  json summary;
  summary["version"] = HADLANG_VERSION;
  summary["config_hash"] = hex64(config_hash(cfg));
  {
    json jc;
    std::stringstream ss(canonical_config(cfg));
    std::string line;
    while (std::getline(ss, line)) {
      const auto eq = line.find('=');
      jc[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    summary["config"] = jc;
  }

  // initial states are fixed conventions, recorded for provenance
  summary["init"] = {{"hadamard", "u = ones, v = zeros"},
                     {"hadamard_mala", "u = ones, v = zeros"},
                     {"myula", "x = zeros"},
                     {"gibbs", "x = zeros, eta = ones"}};

  const bool needs_model = cfg.preset != Preset::strong_rate;
  std::optional<BuiltModel> built;
  if (needs_model) {
    built.emplace(build_model(cfg, design_rng));
    summary["model"] = built->meta;
  }

  // ---------------------------------------------------------- chain presets
  auto run_chain_jobs = [&](std::vector<ChainRecord>& records) {
    const auto& model = built->model;
    std::vector<ResolvedSampler> resolved;
    for (const auto& s : cfg.samplers) resolved.push_back(resolve_sampler(s, cfg, model));

    const std::size_t n_jobs = resolved.size() * static_cast<std::size_t>(cfg.n_chains);
    records.resize(n_jobs);
    report.jobs.resize(n_jobs);
    run_parallel(n_jobs, workers, [&](std::size_t j) {
      const std::size_t si = j / static_cast<std::size_t>(cfg.n_chains);
      const int chain = static_cast<int>(j % static_cast<std::size_t>(cfg.n_chains));
      const ResolvedSampler& rs = resolved[si];
      JobResult res;
      res.sampler = to_string(rs.spec.kind);
      res.chain_id = chain;
      try {
        RngStream rng(cfg.seed, static_cast<std::uint32_t>(1 + j));
        auto ch = make_chain(rs, model);
        ChainRecord rec = run_chain(*ch, rs.n_burn, rs.n_samples, rs.thin, rng);
        res.acceptance_rate = rec.acceptance_rate;
        res.min_u_seen = rec.min_u_seen;
        res.wall_time_s = rec.wall_time_s;
        if (rec.samples.rows() > 0) res.stats = moments_and_quantiles(rec.samples);
        records[j] = std::move(rec);
      } catch (const std::exception& e) {
        res.error = e.what();
        report.any_failed = true;
      }
      report.jobs[j] = std::move(res);
    });

    // optional per-chain sample dumps, size gated
    if (cfg.write_samples) {
      for (std::size_t j = 0; j < n_jobs; ++j) {
        const auto& rec = records[j];
        if (!report.jobs[j].error.empty() || rec.samples.rows() == 0) continue;
        const double mb = static_cast<double>(rec.samples.rows()) *
                          static_cast<double>(rec.samples.cols()) * 25.0 / 1.0e6;
        if (mb > cfg.max_samples_mb) {
          summary["notes"].push_back("samples for " + report.jobs[j].sampler + " chain " +
                                     std::to_string(report.jobs[j].chain_id) +
                                     " exceed output.max_samples_mb; not written");
          continue;
        }
        std::vector<std::string> header;
        for (Eigen::Index k = 0; k < rec.samples.cols(); ++k)
          header.push_back("x" + std::to_string(k));
        write_csv(report.out_dir / ("samples_" + report.jobs[j].sampler + "_chain" +
                                    std::to_string(report.jobs[j].chain_id) + ".csv"),
                  cfg, header, [&](std::size_t i, std::string& line) {
                    if (i >= static_cast<std::size_t>(rec.samples.rows())) return false;
                    line.clear();
                    for (Eigen::Index k = 0; k < rec.samples.cols(); ++k)
                      line += (k ? "," : "") +
                              fmt_double(rec.samples(static_cast<Eigen::Index>(i), k));
                    return true;
                  });
      }
    }
  };

  if (cfg.preset == Preset::null_g0 || cfg.preset == Preset::dim20 ||
      cfg.preset == Preset::haar_deconv || cfg.preset == Preset::custom) {
    std::vector<ChainRecord> records;
    run_chain_jobs(records);

    if (cfg.preset == Preset::null_g0 && !report.any_failed &&
        cfg.samplers.at(0).kind == SamplerKind::hadamard) {
      // marginal KS against the closed-form stationary laws; u and v are
      // re-recorded along a dedicated replay of chain 0's stream
      const auto& model = built->model;
      const ResolvedSampler rs = resolve_sampler(cfg.samplers.at(0), cfg, model);
      RngStream rng(cfg.seed, 1);
      SamplerState st = default_hadamard_init(model.dim);
      StepConfig sc;
      sc.dt = rs.dt;
      for (long k = 0; k < rs.n_burn; ++k) st = hadamard_step(st, model, sc, rng);
      Eigen::MatrixXd us(rs.n_samples, model.dim), vs(rs.n_samples, model.dim);
      for (long s = 0; s < rs.n_samples; ++s) {
        for (long t = 0; t < rs.thin; ++t) st = hadamard_step(st, model, sc, rng);
        us.row(s) = st.u;
        vs.row(s) = st.v;
      }
      const double bl = model.beta * model.lambda;
      json ks;
      for (Eigen::Index j = 0; j < model.dim; ++j) {
        const Eigen::VectorXd xcol =
            records.at(0).samples.col(j);
        ks["x"].push_back(ks_statistic(xcol, [bl](double t) { return laplace_cdf(t, bl); }));
        ks["u"].push_back(
            ks_statistic(us.col(j), [bl](double t) { return rayleigh_cdf(t, bl); }));
        const double sd = 1.0 / std::sqrt(bl);
        ks["v"].push_back(
            ks_statistic(vs.col(j), [sd](double t) { return normal_cdf(t / sd); }));
      }
      summary["analysis"]["null_g0"]["ks"] = ks;
    }

    if (cfg.preset == Preset::dim20 && !report.any_failed) {
      json dim;
      std::vector<std::array<std::string, 3>> rows;
      for (std::size_t j = 0; j < report.jobs.size(); ++j) {
        const auto& res = report.jobs[j];
        if (res.chain_id != 0) continue;
        dim[res.sampler]["min_ess"] = res.stats.ess.minCoeff();
        for (Eigen::Index k = 0; k < res.stats.ess.size(); ++k)
          rows.push_back({res.sampler, std::to_string(k), fmt_double(res.stats.ess[k])});
      }
      summary["analysis"]["dim20"] = dim;
      write_csv(report.out_dir / "dim20_ess.csv", cfg, {"sampler", "dim", "ess"},
                [&](std::size_t i, std::string& line) {
                  if (i >= rows.size()) return false;
                  line = rows[i][0] + "," + rows[i][1] + "," + rows[i][2];
                  return true;
                });
    }

    if (cfg.preset == Preset::haar_deconv && !report.any_failed) {
      json haar;
      haar["jump_positions"] = built->signal.positions;
      std::vector<std::pair<std::string, Eigen::VectorXd>> gaps;
      for (std::size_t j = 0; j < report.jobs.size(); ++j) {
        const auto& res = report.jobs[j];
        if (res.chain_id != 0 || records[j].samples.rows() == 0) continue;
        const Eigen::MatrixXd& coef = records[j].samples;
        Eigen::MatrixXd pix(coef.rows(), coef.cols());
        for (Eigen::Index r = 0; r < coef.rows(); ++r)
          pix.row(r) = haar_inverse(coef.row(r).transpose());
        Eigen::VectorXd gap(pix.cols());
        for (Eigen::Index k = 0; k < pix.cols(); ++k)
          gap[k] = quantile_type7(pix.col(k), 0.95) - quantile_type7(pix.col(k), 0.05);
        // top-10 quantile-gap pixels
        std::vector<Eigen::Index> order(static_cast<std::size_t>(gap.size()));
        for (Eigen::Index k = 0; k < gap.size(); ++k) order[static_cast<std::size_t>(k)] = k;
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index a, Eigen::Index b) { return gap[a] > gap[b]; });
        std::vector<long> top;
        for (int k = 0; k < 10 && k < static_cast<int>(order.size()); ++k)
          top.push_back(static_cast<long>(order[static_cast<std::size_t>(k)]));
        int hits = 0;
        for (long t : top)
          for (Eigen::Index p : built->signal.positions)
            if (std::abs(t - static_cast<long>(p)) <= 8) {
              ++hits;
              break;
            }
        haar[res.sampler]["top_gap_indices"] = top;
        haar[res.sampler]["top10_within_8_of_jump"] = hits;
        gaps.emplace_back(res.sampler, std::move(gap));
      }
      summary["analysis"]["haar_deconv"] = haar;
      if (!gaps.empty()) {
        std::vector<std::string> header = {"pixel"};
        for (const auto& g : gaps) header.push_back("gap_" + g.first);
        write_csv(report.out_dir / "haar_quantile_gap.csv", cfg, header,
                  [&](std::size_t i, std::string& line) {
                    if (i >= static_cast<std::size_t>(gaps[0].second.size())) return false;
                    line = std::to_string(i);
                    for (const auto& g : gaps)
                      line += "," + fmt_double(g.second[static_cast<Eigen::Index>(i)]);
                    return true;
                  });
      }
    }
  } else if (cfg.preset == Preset::rate_1d) {
    const auto& model = built->model;
    QuadratureConfig quad;
    auto phi1 = [](double x) { return x; };
    auto phi2 = [](double x) { return x * x; };
    const double oracle_x = quadrature_expectation_1d(phi1, model, quad);
    const double oracle_x2 = quadrature_expectation_1d(phi2, model, quad);
    const double oracle_x_gl =
        quadrature_expectation_1d(phi1, model, quad, QuadRule::gauss_legendre);
    const double oracle_x2_gl =
        quadrature_expectation_1d(phi2, model, quad, QuadRule::gauss_legendre);

    struct RateCell {
      double mean_x = 0, mean_x2 = 0, se_x = 0, se_x2 = 0, min_u = 0;
      std::string error;
    };
    const std::size_t n_dt = cfg.dt_grid.size();
    const std::size_t n_samplers = cfg.samplers.size();
    const auto n_chains = static_cast<std::size_t>(cfg.n_chains);
    std::vector<RateCell> cells(n_samplers * n_dt * n_chains);

    run_parallel(cells.size(), workers, [&](std::size_t j) {
      const std::size_t si = j / (n_dt * n_chains);
      const std::size_t di = (j / n_chains) % n_dt;
      RateCell& cell = cells[j];
      try {
        SamplerJobSpec spec = cfg.samplers[si];
        spec.dt = cfg.dt_grid[di];
        const ResolvedSampler rs = resolve_sampler(spec, cfg, model);
        const long burn = static_cast<long>(std::ceil(cfg.burn_time / rs.dt));
        // record roughly every record_stride_time of model time so the
        // recorded series is close to uncorrelated at every dt
        const long thin = std::max<long>(1, std::lround(cfg.rate_record_stride / rs.dt));
        RngStream rng(cfg.seed, static_cast<std::uint32_t>(1 + j));
        auto ch = make_chain(rs, model);
        Eigen::VectorXd xs(cfg.n_samples);
        for (long k = 0; k < burn; ++k) ch->advance(rng);
        double min_u = std::numeric_limits<double>::infinity();
        for (long s = 0; s < cfg.n_samples; ++s) {
          for (long t = 0; t < thin; ++t) ch->advance(rng);
          xs[s] = ch->x()[0];
          if (auto mu = ch->min_positive()) min_u = std::min(min_u, *mu);
        }
        const Eigen::VectorXd x2 = xs.array().square();
        cell.mean_x = xs.mean();
        cell.mean_x2 = x2.mean();
        const double var_x = (xs.array() - xs.mean()).square().sum() /
                             std::max(1.0, static_cast<double>(cfg.n_samples) - 1.0);
        const double var_x2 = (x2.array() - x2.mean()).square().sum() /
                              std::max(1.0, static_cast<double>(cfg.n_samples) - 1.0);
        cell.se_x = std::sqrt(var_x / ess(xs));
        cell.se_x2 = std::sqrt(var_x2 / ess(x2));
        cell.min_u = min_u;
      } catch (const std::exception& e) {
        cell.error = e.what();
        report.any_failed = true;
      }
    });

    json rate;
    rate["oracle_x"] = oracle_x;
    rate["oracle_x2"] = oracle_x2;
    rate["oracle_x_cross"] = oracle_x_gl;
    rate["oracle_x2_cross"] = oracle_x2_gl;
    std::vector<std::string> lines;
    for (std::size_t si = 0; si < n_samplers; ++si) {
      for (std::size_t di = 0; di < n_dt; ++di) {
        double mx = 0, mx2 = 0, se_x = 0, se_x2 = 0;
        double min_u = std::numeric_limits<double>::infinity();
        std::string err;
        for (std::size_t c = 0; c < n_chains; ++c) {
          const RateCell& cell = cells[(si * n_dt + di) * n_chains + c];
          if (!cell.error.empty()) err = cell.error;
          mx += cell.mean_x;
          mx2 += cell.mean_x2;
          se_x += cell.se_x * cell.se_x;
          se_x2 += cell.se_x2 * cell.se_x2;
          min_u = std::min(min_u, cell.min_u);
        }
        const auto nc = static_cast<double>(n_chains);
        mx /= nc;
        mx2 /= nc;
        se_x = std::sqrt(se_x) / nc;
        se_x2 = std::sqrt(se_x2) / nc;

        SamplerJobSpec spec = cfg.samplers[si];
        spec.dt = cfg.dt_grid[di];
        const ResolvedSampler rs = resolve_sampler(spec, cfg, model);
        json row;
        row["sampler"] = to_string(spec.kind);
        row["dt"] = rs.dt;
        row["thin"] = std::max<long>(1, std::lround(cfg.rate_record_stride / rs.dt));
        if (spec.kind == SamplerKind::myula) row["gamma"] = rs.gamma;
        row["mean_x"] = mx;
        row["mean_x2"] = mx2;
        row["se_x"] = se_x;
        row["se_x2"] = se_x2;
        row["abs_err_x"] = std::abs(mx - oracle_x);
        row["abs_err_x2"] = std::abs(mx2 - oracle_x2);
        if (std::isfinite(min_u)) row["min_u_seen"] = min_u;
        if (!err.empty()) row["error"] = err;
        rate["rows"].push_back(row);
        lines.push_back(to_string(spec.kind) + "," + fmt_double(rs.dt) + "," + fmt_double(mx2) +
                        "," + fmt_double(std::abs(mx2 - oracle_x2)) + "," + fmt_double(se_x2) +
                        "," + fmt_double(mx) + "," + fmt_double(std::abs(mx - oracle_x)) + "," +
                        fmt_double(se_x));
      }
    }
    summary["analysis"]["rate_1d"] = rate;
    write_csv(report.out_dir / "rate_1d.csv", cfg,
              {"sampler", "dt", "mean_x2", "abs_err_x2", "se_x2", "mean_x", "abs_err_x", "se_x"},
              [&](std::size_t i, std::string& line) {
                if (i >= lines.size()) return false;
                line = lines[i];
                return true;
              });
  } else if (cfg.preset == Preset::mixing_1d) {
    const auto& model = built->model;
    const ResolvedSampler rs = resolve_sampler(cfg.samplers.at(0), cfg, model);
    const long iters = cfg.mixing_iters;
    const int chains = cfg.mixing_chains;

    // fixed blocks of chains keep the float reduction order independent of
    // the worker count
    const int n_blocks = std::min(64, chains);
    std::vector<Eigen::VectorXd> block_sum(static_cast<std::size_t>(n_blocks));
    std::vector<double> block_min_u(static_cast<std::size_t>(n_blocks),
                                    std::numeric_limits<double>::infinity());
    run_parallel(static_cast<std::size_t>(n_blocks), workers, [&](std::size_t b) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(iters);
      const int lo = static_cast<int>(b) * chains / n_blocks;
      const int hi = static_cast<int>(b + 1) * chains / n_blocks;
      StepConfig sc;
      sc.dt = rs.dt;
      double min_u = std::numeric_limits<double>::infinity();
      for (int c = lo; c < hi; ++c) {
        RngStream rng(cfg.seed, static_cast<std::uint32_t>(1 + c));
        SamplerState st = default_hadamard_init(model.dim);
        for (long k = 0; k < iters; ++k) {
          st = hadamard_step(st, model, sc, rng);
          const double x = st.u[0] * st.v[0];
          acc[k] += x * x;
          min_u = std::min(min_u, st.u[0]);
        }
      }
      block_sum[b] = std::move(acc);
      block_min_u[b] = min_u;
    });
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(iters);
    double min_u_all = std::numeric_limits<double>::infinity();
    for (const auto& bsum : block_sum) mean += bsum;
    for (double m : block_min_u) min_u_all = std::min(min_u_all, m);
    mean /= static_cast<double>(chains);

    const long tail = std::max<long>(1, iters / 10);
    const double long_run = mean.tail(tail).mean();
    Eigen::VectorXd err = (mean.array() - long_run).abs();

    json mix;
    mix["long_run"] = long_run;
    mix["dt"] = rs.dt;
    mix["chains"] = chains;
    mix["min_u_seen"] = min_u_all;
    summary["analysis"]["mixing_1d"] = mix;
    write_csv(report.out_dir / "mixing_1d.csv", cfg, {"iteration", "abs_running_mean_error"},
              [&](std::size_t i, std::string& line) {
                if (i >= static_cast<std::size_t>(iters)) return false;
                line = std::to_string(i) + "," + fmt_double(err[static_cast<Eigen::Index>(i)]);
                return true;
              });
    summary["analysis"]["mixing_1d"]["errors"] =
        std::vector<double>(err.data(), err.data() + err.size());
  } else if (cfg.preset == Preset::strong_rate) {
    // two reference models: the prior-only chain and the 1D quadratic model
    std::vector<std::pair<std::string, TargetModel>> models;
    models.emplace_back("g0", TargetModel(1.0, 1.0, DataTerm::zero(), 1));
    {
      Eigen::MatrixXd a(1, 1);
      a(0, 0) = 1.0;
      Eigen::VectorXd y(1);
      y[0] = 3.0;
      models.emplace_back("quadratic",
                          TargetModel(2.7, 1.0, DataTerm::quadratic(dense_operator(a), y)));
    }

    struct StrongRow {
      std::string model;
      double dt = 0, mean_sup = 0;
      double min_u = std::numeric_limits<double>::infinity();
    };
    const std::size_t n_jobs = models.size() * cfg.dt_grid.size();
    std::vector<StrongRow> rows(n_jobs);
    run_parallel(n_jobs, workers, [&](std::size_t j) {
      const std::size_t mi = j / cfg.dt_grid.size();
      const std::size_t di = j % cfg.dt_grid.size();
      const TargetModel& model = models[mi].second;
      const double dt = cfg.dt_grid[di];
      const int refine = cfg.strong_refine;
      const double dt_f = dt / refine;
      const long n_coarse = std::lround(cfg.strong_T / dt);
      RngStream rng(cfg.seed, static_cast<std::uint32_t>(1 + j));
      StepConfig coarse_cfg, fine_cfg;
      coarse_cfg.dt = dt;
      fine_cfg.dt = dt_f;
      double total_sup = 0.0;
      Eigen::VectorXd xi1(1), xi2(1), acc1(1), acc2(1);
      for (int p = 0; p < cfg.strong_paths; ++p) {
        SamplerState coarse = default_hadamard_init(1);
        SamplerState fine = coarse;
        double sup = 0.0;
        double min_u = std::numeric_limits<double>::infinity();
        for (long k = 0; k < n_coarse; ++k) {
          acc1.setZero();
          acc2.setZero();
          for (int f = 0; f < refine; ++f) {
            xi1[0] = rng.normal();
            xi2[0] = rng.normal();
            fine = hadamard_step_with_noise(fine, model, fine_cfg, xi1, xi2);
            acc1 += std::sqrt(dt_f) * xi1;  // accumulate the Brownian increment
            acc2 += std::sqrt(dt_f) * xi2;
          }
          coarse = hadamard_step_with_noise(coarse, model, coarse_cfg, acc1 / std::sqrt(dt),
                                            acc2 / std::sqrt(dt));
          const double e = std::hypot(coarse.u[0] - fine.u[0], coarse.v[0] - fine.v[0]);
          sup = std::max(sup, e);
          min_u = std::min({min_u, coarse.u[0], fine.u[0]});
        }
        total_sup += sup;
        rows[j].min_u = std::min(rows[j].min_u, min_u);
      }
      rows[j].model = models[mi].first;
      rows[j].dt = dt;
      rows[j].mean_sup = total_sup / cfg.strong_paths;
    });

    json strong;
    for (const auto& row : rows) {
      json r;
      r["model"] = row.model;
      r["dt"] = row.dt;
      r["mean_sup_error"] = row.mean_sup;
      r["min_u_seen"] = row.min_u;
      strong["rows"].push_back(r);
    }
    summary["analysis"]["strong_rate"] = strong;
    write_csv(report.out_dir / "strong_rate.csv", cfg, {"model", "dt", "mean_sup_error"},
              [&](std::size_t i, std::string& line) {
                if (i >= rows.size()) return false;
                line = rows[i].model + "," + fmt_double(rows[i].dt) + "," +
                       fmt_double(rows[i].mean_sup);
                return true;
              });
  }

  for (const auto& jr : report.jobs) summary["jobs"].push_back(job_to_json(jr));
  report.summary = std::move(summary);
  write_text(report.out_dir / "summary.json", report.summary.dump(2) + "\n");
  write_text(report.out_dir / "config.txt", csv_preamble(cfg) + canonical_config(cfg));
  return report;
}

}  // namespace hadlang
