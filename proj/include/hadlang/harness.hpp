#pragma once

#include "hadlang/diagnostics.hpp"
#include "hadlang/samplers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hadlang {

enum class Preset { rate_1d, mixing_1d, dim20, haar_deconv, null_g0, strong_rate, custom };
enum class SamplerKind { hadamard, hadamard_mala, myula, gibbs };

std::string to_string(Preset p);
std::string to_string(SamplerKind k);

// How MYULA's gamma is chosen when not given explicitly. `recipe` is
// gamma = 1/L with dt = gamma/(5 (gamma L + 1)); `sqrt_dt` couples
// gamma = sqrt(dt) (used by the rate sweep so the smoothing and
// discretization errors shrink at the same order).
enum class GammaRule { fixed, recipe, sqrt_dt };

struct SamplerJobSpec {
  SamplerKind kind = SamplerKind::hadamard;
  double dt = 0.0;  // 0 = derive from the model (1/(10 L))
  double gamma = 0.0;
  GammaRule gamma_rule = GammaRule::recipe;
  long n_burn = -1;  // -1 = use run.* defaults
  long n_samples = -1;
  long thin = -1;
};

struct ExperimentConfig {
  Preset preset = Preset::custom;
  std::uint64_t seed = 1;
  int n_chains = 1;
  std::string out_dir = "out";

  // model
  double lambda = 1.0;
  double beta = 1.0;
  Eigen::Index d = 1;
  std::string data_term = "zero";        // zero | quadratic
  std::string operator_kind = "scalar";  // scalar | dense_gaussian | haar_conv
  double scalar_a = 1.0;
  Eigen::Index rows = 0;
  double gauss_variance = 0.0;  // 0 = 1/(16 rows)
  double kernel_sigma = 2.0;
  double kernel_radius_sigmas = 4.0;
  double noise_sigma = 0.0;
  bool lambda_from_data = false;  // lambda = ||A^T y||_inf / 2
  std::vector<double> y_values;   // explicit y; empty = synthesize
  std::string signal_kind = "k_sparse";  // k_sparse | piecewise_constant
  int signal_k = 2;
  int signal_jumps = 10;

  std::vector<SamplerJobSpec> samplers;
  long n_burn = 0;
  long n_samples = 1000;
  long thin = 1;

  // rate_1d
  std::vector<double> dt_grid;
  double burn_time = 800.0;        // model-time burn-in; steps = ceil(T / dt)
  double rate_record_stride = 0.5; // model time between recorded samples

  // mixing_1d
  int mixing_chains = 5000;
  long mixing_iters = 10000;

  // strong_rate
  int strong_paths = 400;
  int strong_refine = 64;
  double strong_T = 1.0;

  bool write_samples = false;
  double max_samples_mb = 256.0;
};

// Strict parser for the flat key = value config format ('#' comments).
// Unknown keys, unknown sampler names, and out-of-range values are errors
// naming the offending field. Preset defaults are filled in, so the result
// is fully resolved.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sorted key = value rendering of the fully resolved config; this exact text
// is hashed (FNV-1a 64) and embedded in every output file.
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Output directory after the SAMPLER_OUT environment override.
std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg);

struct SignalInfo {
  Eigen::VectorXd x;
  std::vector<Eigen::Index> positions;  // support (k_sparse) or jump starts
};
SignalInfo synthesize_signal(const std::string& kind, int k_or_jumps, Eigen::Index d,
                             RngStream& rng);

struct JobResult {
  std::string sampler;
  int chain_id = 0;
  SummaryStats stats;
  std::optional<double> acceptance_rate;
  std::optional<double> min_u_seen;
  double wall_time_s = 0.0;
  std::string error;  // nonempty when the job failed
};

struct ExperimentReport {
  ExperimentConfig cfg;
  std::vector<JobResult> jobs;
  nlohmann::json summary;  // exact content of summary.json
  bool any_failed = false;
  std::filesystem::path out_dir;
};

// Runs all (sampler x chain) jobs of the preset on `workers` threads, writes
// summary.json plus the preset's CSVs, and returns the in-memory report.
// Aggregation order is fixed by job index, so results are byte-identical for
// any worker count.
ExperimentReport run_experiment(const ExperimentConfig& cfg, int workers = 1);

}  // namespace hadlang
