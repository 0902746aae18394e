#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "optimarl/dynamics.hpp"
#include "optimarl/envs.hpp"
#include "optimarl/hysteretic.hpp"
#include "optimarl/learners.hpp"

namespace optimarl {

// Bad or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AlgoKind { kOptiMappo, kOptiMaa2c, kHysteretic, kDynamics };

// env.kind: climbing | penalty | matrix | pushbox | quadratics. The first three
// all build a MatrixGameSpec; penalty_k only matters for "penalty".
struct ExperimentConfig {
  AlgoKind algorithm = AlgoKind::kOptiMappo;
  std::string env_kind = "climbing";
  double penalty_k = -100.0;
  EnvSpec env = climbing_game();
  PPOConfig ppo = default_ppo_config("matrix");
  HystQConfig hyst;
  DynamicsConfig dynamics;
  std::vector<std::uint64_t> seeds{0};
  int iterations = 200;  // PPO/A2C iterations, or episodes for hysteretic_q
  int eval_every = 10;
  int eval_episodes = 10;
  std::string output_dir = "runs/default";

  bool operator==(const ExperimentConfig&) const = default;
};

std::string to_string(AlgoKind kind);
AlgoKind parse_algorithm(const std::string& name);

// Kind string understood by make_env ("matrix", "pushbox", "quadratics").
std::string env_family(const ExperimentConfig& cfg);

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);
std::string emit_config(const ExperimentConfig& cfg);

// output_dir, resolved against OPTIMARL_OUTPUT_ROOT when that is set and the
// path is relative.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

struct SeedSummary {
  std::uint64_t seed = 0;
  double final_mean_return = 0.0;  // training episodes of the last iteration
  double max_eval_return = 0.0;    // best greedy evaluation seen during the run
  double final_greedy_return = 0.0;
  double greedy_per_step = 0.0;
  bool success = false;  // final greedy return within 1e-6 of the env optimum
  std::string error;     // non-empty when the seed crashed
};

struct RunSummary {
  std::string algorithm;
  std::string env_kind;
  std::string task;    // row label, e.g. "Climbing" or "Penalty k=-100"
  std::string column;  // column label, e.g. "OptiMAPPO" or "MAPPO"
  double optimal_return = 0.0;
  std::vector<SeedSummary> seeds;
  double mean = 0.0;  // over final greedy returns of seeds without errors
  double std = 0.0;
  double success_fraction = 0.0;

  bool ok() const;
};

// Fills the aggregate fields from the per-seed entries.
void aggregate(RunSummary& summary);

std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& text);

// Runs every seed, writing <out>/seed_<n>/{metrics.csv,eval.csv,...},
// <out>/config.ini and <out>/summary.json. Seed failures are recorded in the
// summary (with the seed index) rather than thrown.
RunSummary run(const ExperimentConfig& cfg);

// Greedy evaluation of a saved policy checkpoint under `cfg`.
EvalResult evaluate_checkpoint(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint);

struct SummaryTable {
  std::string text;
  std::string csv;
  std::vector<std::string> errors;  // one entry per unreadable directory
};

// Rows are tasks, columns are algorithm labels; cells hold the mean final
// greedy return. Empty input throws std::invalid_argument.
SummaryTable summarize(const std::vector<std::filesystem::path>& run_dirs);

}  // namespace optimarl
