#pragma once

#include <vector>

#include <Eigen/Dense>

#include "optimarl/envs.hpp"

namespace optimarl {

// Small MMDP given by explicit tables over joint actions. Joint action index
// is row-major over agents (agent 0 most significant). Transition rows may sum
// to less than one; the missing mass terminates the episode.
struct TabularMdp {
  int num_states = 0;
  std::vector<int> agent_actions;
  Eigen::MatrixXd reward;                   // states x joint actions
  std::vector<Eigen::MatrixXd> transition;  // [state] joint actions x next states
  Eigen::VectorXd initial;                  // start distribution
  double gamma = 0.9;

  int joint_actions() const;
  std::vector<int> decode(int joint) const;
};

// policy[agent][state] is a distribution over that agent's own actions.
using TabularPolicy = std::vector<std::vector<Eigen::VectorXd>>;

struct ExactValues {
  Eigen::MatrixXd q;        // states x joint actions
  Eigen::VectorXd v;        // sum_a pi(a|s) q(s, a)
  Eigen::MatrixXd advantage;
  Eigen::VectorXd visitation;  // normalized discounted state distribution
};

ExactValues exact_values(const TabularMdp& mdp, const TabularPolicy& policy);

// Policy gradient with clipped advantages for softmax-parameterized tabular
// policies, evaluated by exact enumeration:
//   sum_s d(s) sum_a pi(a|s) max(A(s,a), 0) dlog pi(a|s)/dtheta.
// Entries are ordered [agent][state][own action].
Eigen::VectorXd clipped_policy_gradient(const TabularMdp& mdp, const TabularPolicy& policy);

// Norm of clipped_policy_gradient; rejects MDPs with more than 1e4
// state-joint-action pairs.
double fixed_point_check(const TabularMdp& mdp, const TabularPolicy& policy);

// One-shot version of a matrix game: a single state that terminates after one step.
TabularMdp one_shot_matrix_mdp(const MatrixGameSpec& spec);

// Two states, one agent with actions {stay, switch}. Staying in state 1 pays 1;
// everything else pays 0. The optimal policy switches in state 0 and stays in state 1.
TabularMdp two_state_chain_mdp(double gamma = 0.9);

TabularPolicy deterministic_policy(const TabularMdp& mdp, const std::vector<std::vector<int>>& actions);

// Mix of `policy` (weight 1 - eps) and the uniform policy (weight eps).
TabularPolicy perturb_policy(const TabularPolicy& policy, double eps);

}  // namespace optimarl
