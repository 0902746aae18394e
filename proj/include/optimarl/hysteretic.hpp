#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "optimarl/approx.hpp"
#include "optimarl/envs.hpp"

namespace optimarl {

// Linear decay from start to end over decay_steps environment steps.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.01;
  std::int64_t decay_steps = 400000;

  double at(std::int64_t step) const;
  bool operator==(const EpsilonSchedule&) const = default;
};

struct HystQConfig {
  double alpha_pos = 0.1;
  // Negative TD errors use alpha_pos * alpha_neg_ratio; 1 is plain Q-learning.
  double alpha_neg_ratio = 0.01;
  double gamma = 0.9;
  EpsilonSchedule epsilon;
  int episodes = 20000;
  int eval_every = 500;
  std::uint64_t seed = 0;

  bool operator==(const HystQConfig&) const = default;
};

void validate(const HystQConfig& cfg);

// Rows are states, columns the agent's own actions.
using QTable = Eigen::MatrixXd;

struct TabularStep {
  int state = 0;
  std::vector<int> actions;  // one per agent
  double reward = 0.0;
  int next_state = 0;
  bool done = false;
};

// Single-table hysteretic update; returns the TD error that was applied.
double hq_update(QTable& table, int state, int action, double reward, int next_state, bool done,
                 const HystQConfig& cfg);

// Independent learners: every agent updates its own table with its own action
// and the shared reward.
void hq_update(std::vector<QTable>& tables, const TabularStep& step, const HystQConfig& cfg);

// Ties go to the lowest index.
int greedy_action(const QTable& table, int state);
int eps_greedy(const QTable& table, int state, double epsilon, Rng& rng);

struct HystCurvePoint {
  int episode = 0;
  std::int64_t env_steps = 0;
  double greedy_return = 0.0;
  double mean_q = 0.0;
};

struct HystQResult {
  std::vector<QTable> tables;
  std::vector<HystCurvePoint> curve;
};

double greedy_episode_return(Environment& env, const std::vector<QTable>& tables);
double mean_q_value(const std::vector<QTable>& tables);

HystQResult hq_train(Environment& env, const HystQConfig& cfg);

// Whitespace-separated grid, one state per line.
void dump_qtable(std::ostream& os, const QTable& table);

}  // namespace optimarl
