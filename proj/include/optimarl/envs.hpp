#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace optimarl {

// Common reward per joint action (row = agent 0, column = agent 1).
using Payoff = std::array<std::array<double, 3>, 3>;

struct MatrixGameSpec {
  Payoff payoff{};
  int episode_length = 25;
  std::string name = "matrix";

  bool operator==(const MatrixGameSpec&) const = default;
};

MatrixGameSpec climbing_game(int episode_length = 25);
MatrixGameSpec penalty_game(double k, int episode_length = 25);

// Two agents start beside the box. The box moves one row toward goal_row
// only when both agents push while adjacent to it.
struct PushBoxConfig {
  int grid_width = 5;
  int grid_height = 5;
  int episode_length = 20;
  double success_reward = 1.6;
  double uncoordinated_push_penalty = -0.5;
  int goal_row = 2;

  bool operator==(const PushBoxConfig&) const = default;
};

// Reward at joint action x is max_k peak_k * exp(-|x - center_k|^2 / (2 width_k^2)).
// Index 0 is the global (taller, narrower) peak, index 1 the broad local one.
struct QuadraticsConfig {
  std::array<Eigen::Vector2d, 2> centers{Eigen::Vector2d(5.0, 5.0), Eigen::Vector2d(-5.0, -5.0)};
  std::array<double, 2> peak_values{1.0, 0.8};
  std::array<double, 2> widths{1.0, 8.0};
  double action_bound = 10.0;
  int episode_length = 5;

  bool operator==(const QuadraticsConfig&) const = default;
};

using EnvSpec = std::variant<MatrixGameSpec, PushBoxConfig, QuadraticsConfig>;

void validate(const MatrixGameSpec& spec);
void validate(const PushBoxConfig& cfg);
void validate(const QuadraticsConfig& cfg);

struct ActionSpace {
  bool discrete = true;
  int size = 0;  // number of choices when discrete, dimensions otherwise
  double low = 0.0;
  double high = 0.0;
};

struct JointAction {
  std::vector<int> discrete;
  std::vector<Eigen::VectorXd> continuous;

  static JointAction of(std::vector<int> actions) { return {std::move(actions), {}}; }
  static JointAction of(std::vector<Eigen::VectorXd> actions) { return {{}, std::move(actions)}; }
};

struct Transition {
  Eigen::VectorXd state;
  JointAction joint_action;
  double reward = 0.0;  // shared by every agent
  Eigen::VectorXd next_state;
  bool done = false;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view kind() const = 0;
  virtual std::string name() const = 0;
  virtual int num_agents() const { return 2; }
  virtual ActionSpace action_space() const = 0;
  virtual int observation_dim() const = 0;
  virtual int episode_length() const = 0;

  virtual Eigen::VectorXd reset() = 0;
  virtual Transition step(const JointAction& joint_action) = 0;

  // Index of the current state for tabular learners; nullopt for continuous envs.
  virtual std::optional<int> state_index() const = 0;
  virtual std::optional<int> num_states() const = 0;

  // Best achievable episode return under the configured dynamics.
  virtual double optimal_return() const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;

  int steps_taken() const { return step_; }
  bool done() const { return done_; }

 protected:
  void begin_step();
  bool finish_step();

  int step_ = 0;
  bool done_ = false;
};

class MatrixGameEnv final : public Environment {
 public:
  static constexpr int kObservationDim = 4;

  explicit MatrixGameEnv(MatrixGameSpec spec);

  std::string_view kind() const override { return "matrix"; }
  std::string name() const override { return spec_.name; }
  ActionSpace action_space() const override { return {true, 3, 0.0, 2.0}; }
  int observation_dim() const override { return kObservationDim; }
  int episode_length() const override { return spec_.episode_length; }

  Eigen::VectorXd reset() override;
  Transition step(const JointAction& joint_action) override;

  std::optional<int> state_index() const override { return 0; }
  std::optional<int> num_states() const override { return 1; }
  double optimal_return() const override;

  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<MatrixGameEnv>(*this);
  }

  const MatrixGameSpec& spec() const { return spec_; }

 private:
  MatrixGameSpec spec_;
};

class PushBoxEnv final : public Environment {
 public:
  enum Move : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kPush = 4 };

  struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
  };

  explicit PushBoxEnv(PushBoxConfig cfg);

  std::string_view kind() const override { return "pushbox"; }
  std::string name() const override { return "pushbox"; }
  ActionSpace action_space() const override { return {true, 5, 0.0, 4.0}; }
  // Three row-major one-hot planes: agent 0, agent 1, box.
  int observation_dim() const override { return 3 * cfg_.grid_width * cfg_.grid_height; }
  int episode_length() const override { return cfg_.episode_length; }

  Eigen::VectorXd reset() override;
  Transition step(const JointAction& joint_action) override;

  std::optional<int> state_index() const override;
  std::optional<int> num_states() const override;
  double optimal_return() const override { return cfg_.success_reward; }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<PushBoxEnv>(*this); }

  const PushBoxConfig& config() const { return cfg_; }
  Cell agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  Cell box() const { return box_; }
  bool solved() const { return solved_; }
  Cell box_start() const;

 private:
  Eigen::VectorXd observe() const;
  bool adjacent_to_box(const Cell& c) const;

  PushBoxConfig cfg_;
  std::array<Cell, 2> agents_{};
  Cell box_{};
  bool solved_ = false;
};

class QuadraticsEnv final : public Environment {
 public:
  static constexpr int kObservationDim = 4;

  explicit QuadraticsEnv(QuadraticsConfig cfg);

  std::string_view kind() const override { return "quadratics"; }
  std::string name() const override { return "quadratics"; }
  // Each agent controls one coordinate of the joint point.
  ActionSpace action_space() const override { return {false, 1, -cfg_.action_bound, cfg_.action_bound}; }
  int observation_dim() const override { return kObservationDim; }
  int episode_length() const override { return cfg_.episode_length; }

  Eigen::VectorXd reset() override;
  Transition step(const JointAction& joint_action) override;

  std::optional<int> state_index() const override { return std::nullopt; }
  std::optional<int> num_states() const override { return std::nullopt; }
  double optimal_return() const override;

  std::unique_ptr<Environment> clone() const override {
    return std::make_unique<QuadraticsEnv>(*this);
  }

  const QuadraticsConfig& config() const { return cfg_; }
  double reward_at(const Eigen::Vector2d& point) const;

 private:
  QuadraticsConfig cfg_;
};

// kind is one of "matrix", "pushbox", "quadratics" and must match the spec
// alternative. The environments are deterministic; seed is accepted so that
// callers can treat every environment uniformly.
std::unique_ptr<Environment> make_env(std::string_view kind, const EnvSpec& spec,
                                      std::uint64_t seed = 0);

}  // namespace optimarl
