#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "optimarl/advantage.hpp"
#include "optimarl/approx.hpp"
#include "optimarl/envs.hpp"

namespace optimarl {

enum class Algorithm { kPpo, kA2c };

// kNone bypasses the Leaky-ReLU entirely and is the reference MAPPO/MAA2C path.
enum class Shaping { kNone, kLeakyRelu };

struct PPOConfig {
  double clip_eps = 0.2;
  double eta = 0.0;
  Shaping shaping = Shaping::kLeakyRelu;
  ScaleMode scale_mode = ScaleMode::kNone;
  double policy_lr = 3e-4;
  double critic_lr = 1e-3;
  int rollout_threads = 8;
  int steps_per_thread = 100;
  int ppo_epochs = 5;
  int num_minibatch = 2;
  double entropy_coef = 0.01;
  double max_grad_norm = 10.0;
  double gamma = 0.99;
  double lam = 0.95;
  std::vector<int> hidden_sizes{64, 64};
  double log_std_init = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const PPOConfig&) const = default;
};

// Matrix games: 25 steps per thread, one minibatch, TD(0) advantages (lam = 0).
PPOConfig default_ppo_config(std::string_view env_kind);

void validate(const PPOConfig& cfg);

// Samples are ordered thread-major: index = thread * steps_per_thread + t.
// All agents observe the same state, so states are stored once.
struct RolloutBatch {
  int num_agents = 0;
  int threads = 0;
  int steps_per_thread = 0;
  bool discrete = true;
  Eigen::MatrixXd states;
  std::vector<std::vector<int>> discrete_actions;   // [agent][sample]
  std::vector<Eigen::MatrixXd> continuous_actions;  // [agent] samples x dim, unclamped
  std::vector<std::vector<double>> log_probs;       // [agent][sample], behavior policy
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<Flag> dones;
  std::vector<double> bootstrap_values;  // V(s) after the last step of each thread
  std::vector<double> episode_returns;   // episodes that finished during collection

  std::size_t size() const { return rewards.size(); }
};

struct AgentParams {
  ParamSet policy;
  OptState policy_opt;
  Eigen::VectorXd log_std;  // empty for categorical policies
  OptState log_std_opt;
};

struct TrainerState {
  std::vector<AgentParams> agents;
  ParamSet critic;
  OptState critic_opt;
  std::int64_t iteration = 0;
  std::vector<Rng> worker_rngs;
  Rng update_rng;
};

struct IterationMetrics {
  std::int64_t iteration = 0;
  std::int64_t env_steps = 0;
  double mean_return = 0.0;
  double max_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  std::vector<double> entropy;  // per agent
  double frac_adv_clipped = 0.0;
  double mean_raw_adv = 0.0;
};

struct PolicyMinibatch {
  bool discrete = true;
  Eigen::MatrixXd states;
  std::vector<int> discrete_actions;
  Eigen::MatrixXd continuous_actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;  // already shaped
};

struct PolicyLoss {
  double loss = 0.0;       // minimized quantity, entropy bonus included
  double surrogate = 0.0;  // mean per-sample objective before entropy
  double entropy = 0.0;
  std::vector<double> objectives;  // per-sample surrogate values
  std::vector<double> ratios;
  ParamSet grad;
  Eigen::VectorXd log_std_grad;
};

// -mean(min(r A, clip(r, 1 - eps, 1 + eps) A)) - entropy_coef * mean(H).
PolicyLoss ppo_policy_loss(const ParamSet& policy, const Eigen::VectorXd& log_std, const PolicyMinibatch& mb,
                           double clip_eps, double entropy_coef);

// -mean(A log pi(a|s)) - entropy_coef * mean(H).
PolicyLoss a2c_policy_loss(const ParamSet& policy, const Eigen::VectorXd& log_std, const PolicyMinibatch& mb,
                           double entropy_coef);

struct CriticLoss {
  double loss = 0.0;
  ParamSet grad;
};

// 0.5 * mean((V(s) - target)^2).
CriticLoss critic_loss(const ParamSet& critic, const Eigen::MatrixXd& states, std::span<const double> targets);

struct EvalResult {
  double mean_return = 0.0;
  double max_return = 0.0;
};

class Trainer {
 public:
  Trainer(const Environment& prototype, PPOConfig cfg, Algorithm algorithm = Algorithm::kPpo);

  RolloutBatch collect_rollout();

  // Advantage estimation for every thread segment of the batch.
  AdvantageBatch advantages(const RolloutBatch& batch) const;

  // Clipped-surrogate epochs over shuffled minibatches.
  IterationMetrics ppo_update(const RolloutBatch& batch);
  // Single full-batch policy-gradient step.
  IterationMetrics a2c_update(const RolloutBatch& batch);

  IterationMetrics train_iteration();

  // Per-agent actions for one observation.
  JointAction act(const Eigen::VectorXd& obs, Rng& rng, bool greedy) const;

  EvalResult evaluate(Environment& env, int episodes, bool greedy, std::uint64_t seed = 0) const;

  const PPOConfig& config() const { return cfg_; }
  Algorithm algorithm() const { return algorithm_; }
  TrainerState& state() { return state_; }
  const TrainerState& state() const { return state_; }
  std::int64_t env_steps() const { return env_steps_; }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  IterationMetrics finish_metrics(const RolloutBatch& batch, const AdvantageBatch& adv) const;
  PolicyMinibatch policy_minibatch(const RolloutBatch& batch, int agent, std::span<const Eigen::Index> idx,
                                   const std::vector<double>& shaped) const;
  void apply_policy_step(int agent, PolicyLoss& loss);
  void apply_critic_step(CriticLoss& loss);

  PPOConfig cfg_;
  Algorithm algorithm_;
  ActionSpace space_;
  int num_agents_ = 0;
  int obs_dim_ = 0;
  std::vector<std::unique_ptr<Environment>> envs_;
  std::vector<Eigen::VectorXd> obs_;
  std::vector<double> running_return_;
  std::int64_t env_steps_ = 0;
  TrainerState state_;
};

}  // namespace optimarl
