#include "optimarl/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>

#include "optimarl/approx.hpp"

namespace optimarl {

namespace {

void require_simplex(const Eigen::VectorXd& p, const char* what) {
  const bool ok = p.size() > 0 && p.allFinite() && p.minCoeff() >= 0.0 && std::abs(p.sum() - 1.0) <= 1e-9;
  if (!ok) throw std::invalid_argument(std::string(what) + " is not a probability distribution");
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

}  // namespace

Eigen::MatrixXd payoff_matrix(const Payoff& payoff) {
  Eigen::MatrixXd m(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = payoff[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Eigen::MatrixXd agent_view(const Eigen::MatrixXd& payoff, int agent) {
  if (agent == 0) return payoff;
  if (agent == 1) return payoff.transpose();
  throw std::out_of_range("matrix games have agents 0 and 1");
}

Eigen::VectorXd expected_q(const Eigen::MatrixXd& own_view, const Eigen::VectorXd& other) {
  require_simplex(other, "other agent marginal");
  if (other.size() != own_view.cols()) throw std::invalid_argument("marginal size does not match payoff");
  return own_view * other;
}

Eigen::VectorXd optimistic_expected_q(const Eigen::MatrixXd& own_view, const Eigen::VectorXd& own,
                                      const Eigen::VectorXd& other, OptimisticBaseline baseline) {
  require_simplex(own, "own marginal");
  require_simplex(other, "other agent marginal");
  if (own.size() != own_view.rows() || other.size() != own_view.cols()) {
    throw std::invalid_argument("marginal size does not match payoff");
  }
  const double b = baseline == OptimisticBaseline::kJointValue ? own.dot(own_view * other) : 0.0;
  const Eigen::MatrixXd clipped = (own_view.array() - b).cwiseMax(0.0).matrix();
  return (clipped * other).array() + b;
}

DynamicsState uniform_state(int rows, int cols) {
  DynamicsState s;
  s.policies[0] = Eigen::VectorXd::Constant(rows, 1.0 / rows);
  s.policies[1] = Eigen::VectorXd::Constant(cols, 1.0 / cols);
  return s;
}

DynamicsState softmax_step(const DynamicsState& state, const Eigen::MatrixXd& payoff,
                           const DynamicsConfig& cfg) {
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  DynamicsState next;
  next.step = state.step + 1;
  for (int agent = 0; agent < 2; ++agent) {
    const Eigen::MatrixXd view = agent_view(payoff, agent);
    const auto& own = state.policies[static_cast<std::size_t>(agent)];
    const auto& other = state.policies[static_cast<std::size_t>(1 - agent)];
    const Eigen::VectorXd q =
        cfg.optimistic ? optimistic_expected_q(view, own, other, cfg.baseline) : expected_q(view, other);
    next.policies[static_cast<std::size_t>(agent)] = softmax(q / cfg.temperature);
  }
  return next;
}

std::vector<DynamicsState> run_dynamics(const Eigen::MatrixXd& payoff, const DynamicsConfig& cfg) {
  if (cfg.steps < 0) throw std::invalid_argument("steps must be nonnegative");
  std::vector<DynamicsState> traj;
  traj.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  traj.push_back(uniform_state(static_cast<int>(payoff.rows()), static_cast<int>(payoff.cols())));
  for (int t = 0; t < cfg.steps; ++t) traj.push_back(softmax_step(traj.back(), payoff, cfg));
  return traj;
}

double greedy_joint_payoff(const DynamicsState& state, const Eigen::MatrixXd& payoff) {
  return payoff(argmax(state.policies[0]), argmax(state.policies[1]));
}

void write_trajectory_csv(std::ostream& os, const std::vector<DynamicsState>& trajectory) {
  os << "step,agent,action,probability\n";
  os << std::setprecision(17);
  for (const auto& s : trajectory) {
    for (int agent = 0; agent < 2; ++agent) {
      const auto& p = s.policies[static_cast<std::size_t>(agent)];
      for (Eigen::Index a = 0; a < p.size(); ++a) {
        os << s.step << ',' << agent << ',' << a << ',' << p[a] << '\n';
      }
    }
  }
}

}  // namespace optimarl
