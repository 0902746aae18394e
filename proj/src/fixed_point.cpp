#include "optimarl/fixed_point.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace optimarl {

int TabularMdp::joint_actions() const {
  int n = 1;
  for (int a : agent_actions) n *= a;
  return n;
}

std::vector<int> TabularMdp::decode(int joint) const {
  std::vector<int> out(agent_actions.size());
  for (std::size_t i = agent_actions.size(); i-- > 0;) {
    out[i] = joint % agent_actions[i];
    joint /= agent_actions[i];
  }
  return out;
}

namespace {

void check(const TabularMdp& mdp, const TabularPolicy& policy) {
  const int na = mdp.joint_actions();
  if (static_cast<long long>(mdp.num_states) * na > 10000) {
    throw std::invalid_argument("MDP too large for exact enumeration (more than 1e4 state-action pairs)");
  }
  if (mdp.reward.rows() != mdp.num_states || mdp.reward.cols() != na ||
      static_cast<int>(mdp.transition.size()) != mdp.num_states || mdp.initial.size() != mdp.num_states) {
    throw std::invalid_argument("tabular MDP tables have inconsistent shapes");
  }
  if (policy.size() != mdp.agent_actions.size()) throw std::invalid_argument("policy needs one entry per agent");
  for (std::size_t i = 0; i < policy.size(); ++i) {
    if (static_cast<int>(policy[i].size()) != mdp.num_states) {
      throw std::invalid_argument("policy needs one distribution per state");
    }
    for (const auto& p : policy[i]) {
      if (p.size() != mdp.agent_actions[i]) throw std::invalid_argument("policy distribution has wrong size");
    }
  }
}

double joint_prob(const TabularMdp& mdp, const TabularPolicy& policy, int s, int joint) {
  const auto acts = mdp.decode(joint);
  double p = 1.0;
  for (std::size_t i = 0; i < acts.size(); ++i) p *= policy[i][static_cast<std::size_t>(s)][acts[i]];
  return p;
}

}  // namespace

ExactValues exact_values(const TabularMdp& mdp, const TabularPolicy& policy) {
  check(mdp, policy);
  const int ns = mdp.num_states;
  const int na = mdp.joint_actions();
  Eigen::MatrixXd pi(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) pi(s, a) = joint_prob(mdp, policy, s, a);

  Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(ns, ns);
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    p_pi.row(s) = pi.row(s) * mdp.transition[static_cast<std::size_t>(s)];
    r_pi[s] = pi.row(s).dot(mdp.reward.row(s));
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(ns, ns) - mdp.gamma * p_pi;
  const Eigen::VectorXd v_solve = system.partialPivLu().solve(r_pi);

  ExactValues out;
  out.q.resize(ns, na);
  for (int s = 0; s < ns; ++s) {
    out.q.row(s) = mdp.reward.row(s) + mdp.gamma * (mdp.transition[static_cast<std::size_t>(s)] * v_solve).transpose();
  }
  // V taken as the policy average of Q so that A(s, a) is exactly zero for
  // every action of a deterministic policy.
  out.v.resize(ns);
  for (int s = 0; s < ns; ++s) out.v[s] = pi.row(s).dot(out.q.row(s));
  out.advantage = out.q.colwise() - out.v;

  const Eigen::VectorXd occ = system.transpose().partialPivLu().solve(mdp.initial);
  out.visitation = occ / occ.sum();
  return out;
}

Eigen::VectorXd clipped_policy_gradient(const TabularMdp& mdp, const TabularPolicy& policy) {
  const ExactValues ev = exact_values(mdp, policy);
  const int ns = mdp.num_states;
  const int na = mdp.joint_actions();
  int total = 0;
  for (int a : mdp.agent_actions) total += ns * a;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(total);

  int offset = 0;
  for (std::size_t i = 0; i < mdp.agent_actions.size(); ++i) {
    const int ni = mdp.agent_actions[i];
    for (int s = 0; s < ns; ++s) {
      const Eigen::VectorXd& own = policy[i][static_cast<std::size_t>(s)];
      for (int a = 0; a < na; ++a) {
        const double weight = joint_prob(mdp, policy, s, a) * std::max(ev.advantage(s, a), 0.0);
        if (weight == 0.0) continue;
        const int ai = mdp.decode(a)[i];
        // d log softmax(theta)[ai] / d theta[b] = 1[ai == b] - pi(b)
        for (int b = 0; b < ni; ++b) {
          grad[offset + s * ni + b] += ev.visitation[s] * weight * ((b == ai ? 1.0 : 0.0) - own[b]);
        }
      }
    }
    offset += ns * ni;
  }
  return grad;
}

double fixed_point_check(const TabularMdp& mdp, const TabularPolicy& policy) {
  return clipped_policy_gradient(mdp, policy).norm();
}

TabularMdp one_shot_matrix_mdp(const MatrixGameSpec& spec) {
  validate(spec);
  TabularMdp mdp;
  mdp.num_states = 1;
  mdp.agent_actions = {3, 3};
  mdp.reward.resize(1, 9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) mdp.reward(0, i * 3 + j) = spec.payoff[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  mdp.transition = {Eigen::MatrixXd::Zero(9, 1)};
  mdp.initial = Eigen::VectorXd::Ones(1);
  mdp.gamma = 0.99;
  return mdp;
}

TabularMdp two_state_chain_mdp(double gamma) {
  TabularMdp mdp;
  mdp.num_states = 2;
  mdp.agent_actions = {2};
  mdp.reward = Eigen::MatrixXd::Zero(2, 2);
  mdp.reward(1, 0) = 1.0;
  Eigen::MatrixXd t0 = Eigen::MatrixXd::Zero(2, 2);
  t0(0, 0) = 1.0;  // stay
  t0(1, 1) = 1.0;  // switch to state 1
  Eigen::MatrixXd t1 = Eigen::MatrixXd::Zero(2, 2);
  t1(0, 1) = 1.0;  // stay in state 1
  t1(1, 0) = 1.0;  // switch back
  mdp.transition = {t0, t1};
  mdp.initial = Eigen::Vector2d(1.0, 0.0);
  mdp.gamma = gamma;
  return mdp;
}

TabularPolicy deterministic_policy(const TabularMdp& mdp, const std::vector<std::vector<int>>& actions) {
  if (actions.size() != mdp.agent_actions.size()) throw std::invalid_argument("one action list per agent required");
  TabularPolicy p(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (static_cast<int>(actions[i].size()) != mdp.num_states) {
      throw std::invalid_argument("one action per state required");
    }
    for (int a : actions[i]) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(mdp.agent_actions[i]);
      d[a] = 1.0;
      p[i].push_back(d);
    }
  }
  return p;
}

TabularPolicy perturb_policy(const TabularPolicy& policy, double eps) {
  TabularPolicy out = policy;
  for (auto& agent : out)
    for (auto& d : agent) d = (1.0 - eps) * d + Eigen::VectorXd::Constant(d.size(), eps / static_cast<double>(d.size()));
  return out;
}

}  // namespace optimarl
