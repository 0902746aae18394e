#include "optimarl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optimarl {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

int discrete_action(const JointAction& ja, int agent, int n) {
  if (ja.discrete.size() != 2) {
    throw std::invalid_argument("expected 2 discrete actions, got " +
                                std::to_string(ja.discrete.size()));
  }
  const int a = ja.discrete[static_cast<std::size_t>(agent)];
  if (a < 0 || a >= n) {
    throw std::out_of_range("action " + std::to_string(a) + " of agent " + std::to_string(agent) +
                            " outside [0, " + std::to_string(n) + ")");
  }
  return a;
}

Eigen::VectorXd constant_observation(int dim) { return Eigen::VectorXd::Ones(dim); }

}  // namespace

MatrixGameSpec climbing_game(int episode_length) {
  return {{{{11.0, -30.0, 0.0}, {-30.0, 7.0, 6.0}, {0.0, 0.0, 5.0}}}, episode_length, "climbing"};
}

MatrixGameSpec penalty_game(double k, int episode_length) {
  return {{{{k, 0.0, 10.0}, {0.0, 2.0, 0.0}, {10.0, 0.0, k}}}, episode_length, "penalty"};
}

void validate(const MatrixGameSpec& spec) {
  require(spec.episode_length >= 1, "matrix game episode_length must be >= 1");
  for (const auto& row : spec.payoff)
    for (double v : row) require(std::isfinite(v), "matrix game payoff must be finite");
}

void validate(const PushBoxConfig& cfg) {
  require(cfg.grid_width >= 3 && cfg.grid_height >= 3, "pushbox grid must be at least 3x3");
  require(cfg.episode_length >= 1, "pushbox episode_length must be >= 1");
  require(std::isfinite(cfg.success_reward), "pushbox success_reward must be finite");
  require(std::isfinite(cfg.uncoordinated_push_penalty) && cfg.uncoordinated_push_penalty < 0.0,
          "pushbox uncoordinated_push_penalty must be negative");
  require(cfg.goal_row >= 0 && cfg.goal_row < cfg.grid_height - 2,
          "pushbox goal_row must lie above the box start row (grid_height - 2)");
}

void validate(const QuadraticsConfig& cfg) {
  for (const auto& c : cfg.centers) require(c.allFinite(), "quadratics centers must be finite");
  require(cfg.peak_values[0] > 0.0 && cfg.peak_values[1] > 0.0, "quadratics peaks must be positive");
  require(cfg.widths[0] > 0.0 && cfg.widths[1] > 0.0, "quadratics widths must be positive");
  require(cfg.peak_values[0] > cfg.peak_values[1],
          "quadratics peak 0 (global) must exceed peak 1 (local)");
  require(cfg.widths[0] < cfg.widths[1], "quadratics global peak must be narrower than the local one");
  require(cfg.action_bound > 0.0, "quadratics action_bound must be positive");
  require(cfg.episode_length >= 1, "quadratics episode_length must be >= 1");
}

void Environment::begin_step() {
  if (done_) throw std::logic_error("step() called on a finished episode; call reset()");
}

bool Environment::finish_step() {
  ++step_;
  done_ = step_ >= episode_length();
  return done_;
}

// ---------------------------------------------------------------------------

MatrixGameEnv::MatrixGameEnv(MatrixGameSpec spec) : spec_(std::move(spec)) { validate(spec_); }

Eigen::VectorXd MatrixGameEnv::reset() {
  step_ = 0;
  done_ = false;
  return constant_observation(kObservationDim);
}

Transition MatrixGameEnv::step(const JointAction& joint_action) {
  begin_step();
  const int a0 = discrete_action(joint_action, 0, 3);
  const int a1 = discrete_action(joint_action, 1, 3);
  Transition t;
  t.state = constant_observation(kObservationDim);
  t.joint_action = joint_action;
  t.reward = spec_.payoff[static_cast<std::size_t>(a0)][static_cast<std::size_t>(a1)];
  t.next_state = t.state;
  t.done = finish_step();
  return t;
}

double MatrixGameEnv::optimal_return() const {
  double best = spec_.payoff[0][0];
  for (const auto& row : spec_.payoff)
    for (double v : row) best = std::max(best, v);
  return best * spec_.episode_length;
}

// ---------------------------------------------------------------------------

PushBoxEnv::PushBoxEnv(PushBoxConfig cfg) : cfg_(cfg) {
  validate(cfg_);
  reset();
}

PushBoxEnv::Cell PushBoxEnv::box_start() const { return {cfg_.grid_height - 2, cfg_.grid_width / 2}; }

Eigen::VectorXd PushBoxEnv::reset() {
  step_ = 0;
  done_ = false;
  solved_ = false;
  box_ = box_start();
  agents_ = {Cell{box_.row, box_.col - 1}, Cell{box_.row, box_.col + 1}};
  return observe();
}

bool PushBoxEnv::adjacent_to_box(const Cell& c) const {
  return std::abs(c.row - box_.row) + std::abs(c.col - box_.col) == 1;
}

Transition PushBoxEnv::step(const JointAction& joint_action) {
  begin_step();
  const std::array<int, 2> act{discrete_action(joint_action, 0, 5),
                               discrete_action(joint_action, 1, 5)};
  Transition t;
  t.state = observe();
  t.joint_action = joint_action;

  for (std::size_t i = 0; i < 2; ++i) {
    Cell next = agents_[i];
    switch (act[i]) {
      case kUp: --next.row; break;
      case kDown: ++next.row; break;
      case kLeft: --next.col; break;
      case kRight: ++next.col; break;
      default: continue;
    }
    const bool inside =
        next.row >= 0 && next.row < cfg_.grid_height && next.col >= 0 && next.col < cfg_.grid_width;
    if (inside && !(next == box_)) agents_[i] = next;
  }

  double reward = 0.0;
  if (!solved_) {
    int effective = 0;
    for (std::size_t i = 0; i < 2; ++i)
      if (act[i] == kPush && adjacent_to_box(agents_[i])) ++effective;
    if (effective == 2) {
      const Cell dest{box_.row - 1, box_.col};
      const bool blocked = agents_[0] == dest || agents_[1] == dest;
      if (!blocked) {
        // Pushers advance with the box so they stay beside it.
        for (auto& a : agents_)
          if (a.row > 0) --a.row;
        box_ = dest;
        if (box_.row == cfg_.goal_row) {
          solved_ = true;
          reward = cfg_.success_reward;
        }
      }
    } else if (effective == 1) {
      reward = cfg_.uncoordinated_push_penalty;
    }
  }

  t.reward = reward;
  t.next_state = observe();
  t.done = finish_step();
  return t;
}

Eigen::VectorXd PushBoxEnv::observe() const {
  const int plane = cfg_.grid_width * cfg_.grid_height;
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(3 * plane);
  auto at = [&](const Cell& c) { return c.row * cfg_.grid_width + c.col; };
  obs[at(agents_[0])] = 1.0;
  obs[plane + at(agents_[1])] = 1.0;
  obs[2 * plane + at(box_)] = 1.0;
  return obs;
}

std::optional<int> PushBoxEnv::state_index() const {
  const int cells = cfg_.grid_width * cfg_.grid_height;
  auto at = [&](const Cell& c) { return c.row * cfg_.grid_width + c.col; };
  int idx = at(agents_[0]);
  idx = idx * cells + at(agents_[1]);
  idx = idx * cfg_.grid_height + box_.row;
  return idx * 2 + (solved_ ? 1 : 0);
}

std::optional<int> PushBoxEnv::num_states() const {
  const int cells = cfg_.grid_width * cfg_.grid_height;
  return cells * cells * cfg_.grid_height * 2;
}

// ---------------------------------------------------------------------------

QuadraticsEnv::QuadraticsEnv(QuadraticsConfig cfg) : cfg_(cfg) { validate(cfg_); }

Eigen::VectorXd QuadraticsEnv::reset() {
  step_ = 0;
  done_ = false;
  return constant_observation(kObservationDim);
}

double QuadraticsEnv::reward_at(const Eigen::Vector2d& point) const {
  double best = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double d2 = (point - cfg_.centers[k]).squaredNorm();
    const double w = cfg_.widths[k];
    best = std::max(best, cfg_.peak_values[k] * std::exp(-d2 / (2.0 * w * w)));
  }
  return best;
}

Transition QuadraticsEnv::step(const JointAction& joint_action) {
  begin_step();
  if (joint_action.continuous.size() != 2) {
    throw std::invalid_argument("quadratics expects 2 continuous actions");
  }
  Eigen::Vector2d point;
  for (int i = 0; i < 2; ++i) {
    const auto& a = joint_action.continuous[static_cast<std::size_t>(i)];
    if (a.size() != 1 || !std::isfinite(a[0])) {
      throw std::out_of_range("quadratics action of agent " + std::to_string(i) +
                              " must be a finite scalar");
    }
    point[i] = std::clamp(a[0], -cfg_.action_bound, cfg_.action_bound);
  }
  Transition t;
  t.state = constant_observation(kObservationDim);
  t.joint_action = joint_action;
  t.reward = reward_at(point);
  t.next_state = t.state;
  t.done = finish_step();
  return t;
}

double QuadraticsEnv::optimal_return() const {
  return reward_at(cfg_.centers[0]) * cfg_.episode_length;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_env(std::string_view kind, const EnvSpec& spec, std::uint64_t) {
  if (kind == "matrix") {
    if (const auto* s = std::get_if<MatrixGameSpec>(&spec)) return std::make_unique<MatrixGameEnv>(*s);
  } else if (kind == "pushbox") {
    if (const auto* s = std::get_if<PushBoxConfig>(&spec)) return std::make_unique<PushBoxEnv>(*s);
  } else if (kind == "quadratics") {
    if (const auto* s = std::get_if<QuadraticsConfig>(&spec)) return std::make_unique<QuadraticsEnv>(*s);
  } else {
    throw std::invalid_argument("unknown environment kind '" + std::string(kind) + "'");
  }
  throw std::invalid_argument("environment kind '" + std::string(kind) +
                              "' does not match the supplied spec");
}

}  // namespace optimarl
