#pragma once

#include <map>
#include <random>
#include <string>

#include "oracles.hpp"
#include "optimarl/learners.hpp"

namespace checks {

using namespace optimarl;

// Random minibatch whose behavior log-probs sit a random offset away from the
// current policy so ratios land on both sides of the clip range.
inline PolicyMinibatch random_minibatch(const ParamSet& policy, const Eigen::VectorXd& log_std, bool discrete,
                                        int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  PolicyMinibatch mb;
  mb.discrete = discrete;
  const int in = policy.layer_sizes.front();
  const int out = policy.layer_sizes.back();
  mb.states.resize(n, in);
  for (Eigen::Index i = 0; i < mb.states.size(); ++i) mb.states.data()[i] = g(rng);
  const Eigen::MatrixXd o = forward(policy, mb.states);
  std::uniform_int_distribution<int> pick(0, out - 1);
  if (!discrete) mb.continuous_actions.resize(n, out);
  for (int i = 0; i < n; ++i) {
    double logp = 0.0;
    if (discrete) {
      mb.discrete_actions.push_back(pick(rng));
      logp = log_softmax(o.row(i).transpose())[mb.discrete_actions.back()];
    } else {
      for (int d = 0; d < out; ++d) mb.continuous_actions(i, d) = o(i, d) + std::exp(log_std[d]) * g(rng);
      logp = gaussian_log_prob(o.row(i).transpose(), log_std, mb.continuous_actions.row(i).transpose());
    }
    mb.old_log_probs.push_back(logp + 0.4 * g(rng));
    mb.advantages.push_back(g(rng));
  }
  return mb;
}

// Max relative finite-difference error of the analytic policy-loss gradient,
// over network parameters and (for Gaussian policies) log_std, 20 probes each.
inline double policy_grad_error(bool ppo, bool discrete, unsigned seed) {
  const int out = discrete ? 3 : 2;
  const ParamSet policy = mlp_init({4, 16, 16, out}, seed, 1.0);
  Eigen::VectorXd log_std = discrete ? Eigen::VectorXd() : Eigen::VectorXd::Constant(out, -0.3);
  if (!discrete) log_std[1] = 0.2;
  const PolicyMinibatch mb = random_minibatch(policy, log_std, discrete, 12, seed + 1);
  const double clip = 0.2, ent = 0.05;
  auto eval = [&](const ParamSet& p, const Eigen::VectorXd& ls) {
    return ppo ? ppo_policy_loss(p, ls, mb, clip, ent) : a2c_policy_loss(p, ls, mb, ent);
  };
  const PolicyLoss base = eval(policy, log_std);
  double worst = oracle::central_diff_error(
      policy.flatten(),
      [&](const Eigen::VectorXd& flat) {
        ParamSet p = policy;
        p.assign_flat(flat);
        return eval(p, log_std).loss;
      },
      base.grad.flatten(), 20, seed + 2);
  if (!discrete) {
    worst = std::max(worst, oracle::central_diff_error(
                                log_std, [&](const Eigen::VectorXd& ls) { return eval(policy, ls).loss; },
                                base.log_std_grad, 20, seed + 3));
  }
  return worst;
}

inline double critic_grad_error(unsigned seed) {
  const ParamSet critic = mlp_init({4, 16, 16, 1}, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd states(10, 4);
  for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = g(rng);
  std::vector<double> targets;
  for (int i = 0; i < 10; ++i) targets.push_back(3.0 * g(rng));
  const CriticLoss base = critic_loss(critic, states, targets);
  return oracle::central_diff_error(
      critic.flatten(),
      [&](const Eigen::VectorXd& flat) {
        ParamSet p = critic;
        p.assign_flat(flat);
        return critic_loss(p, states, targets).loss;
      },
      base.grad.flatten(), 20, seed + 5);
}

inline std::map<std::string, double> all_loss_grad_errors(unsigned seed) {
  return {{"ppo categorical", policy_grad_error(true, true, seed)},
          {"ppo gaussian", policy_grad_error(true, false, seed)},
          {"a2c categorical", policy_grad_error(false, true, seed)},
          {"a2c gaussian", policy_grad_error(false, false, seed)},
          {"critic", critic_grad_error(seed)}};
}

inline bool same_params(const TrainerState& a, const TrainerState& b) {
  if (a.agents.size() != b.agents.size() || !(a.critic == b.critic)) return false;
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    if (!(a.agents[i].policy == b.agents[i].policy)) return false;
    if (a.agents[i].log_std.size() != b.agents[i].log_std.size()) return false;
    if (a.agents[i].log_std != b.agents[i].log_std) return false;
  }
  return true;
}

// Trains the Leaky-ReLU path at eta = 1 and the unshaped path side by side
// and reports whether parameters stay bit-identical for every iteration.
inline bool eta_one_matches_unshaped(const Environment& env, PPOConfig cfg, int iterations,
                                     Algorithm algo = Algorithm::kPpo) {
  cfg.eta = 1.0;
  cfg.shaping = Shaping::kLeakyRelu;
  PPOConfig plain = cfg;
  plain.shaping = Shaping::kNone;
  Trainer a(env, cfg, algo), b(env, plain, algo);
  if (!same_params(a.state(), b.state())) return false;
  for (int i = 0; i < iterations; ++i) {
    a.train_iteration();
    b.train_iteration();
    if (!same_params(a.state(), b.state())) return false;
  }
  return true;
}

}  // namespace checks
