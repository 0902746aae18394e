#pragma once

#include <array>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "optimarl/envs.hpp"

namespace optimarl {

// Sample-free softmax policy iteration on a two-player common-payoff matrix
// game. Each step both agents replace their distribution with
// softmax(Q / temperature) computed from the other agent's current marginal.

enum class OptimisticBaseline {
  // Clip the payoff itself at zero. The plain recurrence has no baseline
  // (softmax is shift invariant), so zero is the reference point.
  kZero,
  // Clip payoff minus the current joint expected payoff.
  kJointValue,
};

struct DynamicsConfig {
  double temperature = 2.0;
  int steps = 10;
  bool optimistic = false;
  OptimisticBaseline baseline = OptimisticBaseline::kZero;

  bool operator==(const DynamicsConfig&) const = default;
};

struct DynamicsState {
  std::array<Eigen::VectorXd, 2> policies;
  int step = 0;
};

Eigen::MatrixXd payoff_matrix(const Payoff& payoff);

// Payoff seen by `agent`: rows index its own actions.
Eigen::MatrixXd agent_view(const Eigen::MatrixXd& payoff, int agent);

// Q_i = sum_j other(j) R(i, j), R from the agent's own view.
Eigen::VectorXd expected_q(const Eigen::MatrixXd& own_view, const Eigen::VectorXd& other);

// Q_i = b + sum_j other(j) max(R(i, j) - b, 0) with b from `baseline`.
Eigen::VectorXd optimistic_expected_q(const Eigen::MatrixXd& own_view, const Eigen::VectorXd& own,
                                      const Eigen::VectorXd& other,
                                      OptimisticBaseline baseline = OptimisticBaseline::kZero);

DynamicsState uniform_state(int rows, int cols);

DynamicsState softmax_step(const DynamicsState& state, const Eigen::MatrixXd& payoff,
                           const DynamicsConfig& cfg);

// Returns cfg.steps + 1 states, starting from the uniform distributions.
std::vector<DynamicsState> run_dynamics(const Eigen::MatrixXd& payoff, const DynamicsConfig& cfg);

// Payoff of the joint argmax action (ties resolved to the lowest index).
double greedy_joint_payoff(const DynamicsState& state, const Eigen::MatrixXd& payoff);

// Columns: step,agent,action,probability.
void write_trajectory_csv(std::ostream& os, const std::vector<DynamicsState>& trajectory);

}  // namespace optimarl
