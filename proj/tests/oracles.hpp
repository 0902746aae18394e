#pragma once

// Independent reference computations used by the unit tests and the
// acceptance runner. Nothing here calls the code it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "optimarl/envs.hpp"

namespace oracle {

// A_t = sum_{l >= 0} (gamma lam)^l delta_{t+l}, truncated after the first done.
inline std::vector<double> brute_force_gae(const std::vector<double>& deltas, double gamma, double lam,
                                           const std::vector<std::uint8_t>& dones) {
  const std::size_t n = deltas.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (std::size_t l = 0; t + l < n; ++l) {
      sum += std::pow(gamma * lam, static_cast<double>(l)) * deltas[t + l];
      if (dones[t + l]) break;
    }
    out[t] = sum;
  }
  return out;
}

inline std::vector<double> returns_to_go(const std::vector<double>& rewards, double gamma) {
  std::vector<double> out(rewards.size(), 0.0);
  for (std::size_t t = 0; t < rewards.size(); ++t)
    for (std::size_t k = t; k < rewards.size(); ++k)
      out[t] += std::pow(gamma, static_cast<double>(k - t)) * rewards[k];
  return out;
}

// Max relative error between `analytic` and central differences of f on
// `probes` random coordinates of x. Denominator floor 1e-6.
inline double central_diff_error(const Eigen::VectorXd& x, const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& analytic, int probes, unsigned seed, double h = 1e-5) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, x.size() - 1);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const Eigen::Index i = pick(rng);
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    const double numeric = (f(hi) - f(lo)) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

// Best total reward over every deterministic open-loop joint action sequence
// of full horizon length. Sequences reaching the same simulator state at the
// same step are merged (keeping the best reward so far), which does not
// change the maximum because the environment is deterministic.
inline double open_loop_optimum(const optimarl::Environment& prototype) {
  struct Node {
    std::unique_ptr<optimarl::Environment> env;
    double reward = 0.0;
  };
  const int n = prototype.action_space().size;
  std::map<int, Node> frontier;
  {
    auto env = prototype.clone();
    env->reset();
    const int key = *env->state_index();
    frontier.emplace(key, Node{std::move(env), 0.0});
  }
  double best = -1e300;
  for (int t = 0; t < prototype.episode_length(); ++t) {
    std::map<int, Node> next;
    for (auto& [key, node] : frontier) {
      for (int a0 = 0; a0 < n; ++a0) {
        for (int a1 = 0; a1 < n; ++a1) {
          auto env = node.env->clone();
          const double r = node.reward + env->step(optimarl::JointAction::of({a0, a1})).reward;
          if (env->done()) {
            best = std::max(best, r);
            continue;
          }
          const int s = *env->state_index();
          auto it = next.find(s);
          if (it == next.end()) {
            next.emplace(s, Node{std::move(env), r});
          } else if (r > it->second.reward) {
            it->second = Node{std::move(env), r};
          }
        }
      }
    }
    frontier = std::move(next);
  }
  return best;
}

}  // namespace oracle
