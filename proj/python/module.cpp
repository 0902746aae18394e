#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "optimarl/advantage.hpp"
#include "optimarl/dynamics.hpp"
#include "optimarl/experiment.hpp"
#include "optimarl/fixed_point.hpp"
#include "optimarl/hysteretic.hpp"
#include "optimarl/learners.hpp"

namespace py = pybind11;
using namespace optimarl;

namespace {

std::vector<Flag> to_flags(const std::vector<bool>& dones) { return {dones.begin(), dones.end()}; }

std::unique_ptr<Environment> env_from_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  return make_env(env_family(cfg), cfg.env, seed);
}

py::tuple step_result(const Transition& t) { return py::make_tuple(t.next_state, t.reward, t.done); }

// Trainer bundled with the environment it was built from.
class PyTrainer {
 public:
  PyTrainer(const std::string& config_text, std::uint64_t seed)
      : cfg_(parse_config_text(config_text)), env_(env_from_config(cfg_, seed)) {
    PPOConfig pc = cfg_.ppo;
    pc.seed = seed;
    trainer_ = std::make_unique<Trainer>(
        *env_, pc, cfg_.algorithm == AlgoKind::kOptiMaa2c ? Algorithm::kA2c : Algorithm::kPpo);
    seed_ = seed;
  }

  py::dict train_iteration() {
    const IterationMetrics m = trainer_->train_iteration();
    py::dict d;
    d["iteration"] = m.iteration;
    d["env_steps"] = m.env_steps;
    d["mean_return"] = m.mean_return;
    d["max_return"] = m.max_return;
    d["policy_loss"] = m.policy_loss;
    d["value_loss"] = m.value_loss;
    d["entropy"] = m.entropy;
    d["frac_adv_clipped"] = m.frac_adv_clipped;
    return d;
  }

  double evaluate(int episodes, bool greedy) {
    auto env = env_->clone();
    return trainer_->evaluate(*env, episodes, greedy, seed_).mean_return;
  }

  void save(const std::string& path) const { trainer_->save_checkpoint(path); }
  void load(const std::string& path) { trainer_->load_checkpoint(path); }

 private:
  ExperimentConfig cfg_;
  std::unique_ptr<Environment> env_;
  std::unique_ptr<Trainer> trainer_;
  std::uint64_t seed_ = 0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Optimistic multi-agent policy gradients on cooperative games.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("climbing_payoff", [] { return payoff_matrix(climbing_game().payoff); });
  m.def("penalty_payoff", [](double k) { return payoff_matrix(penalty_game(k).payoff); }, py::arg("k"));

  m.def(
      "td_errors",
      [](const std::vector<double>& r, const std::vector<double>& v, double bootstrap,
         const std::vector<bool>& dones, double gamma) { return td_errors(r, v, bootstrap, to_flags(dones), gamma); },
      py::arg("rewards"), py::arg("values"), py::arg("bootstrap_value"), py::arg("dones"), py::arg("gamma"));
  m.def(
      "gae",
      [](const std::vector<double>& deltas, double gamma, double lam, const std::vector<bool>& dones) {
        return gae(deltas, gamma, lam, to_flags(dones));
      },
      py::arg("deltas"), py::arg("gamma"), py::arg("lam"), py::arg("dones"));
  m.def("leaky_relu", &leaky_relu, py::arg("a"), py::arg("eta"));
  m.def(
      "shape_advantages",
      [](const std::vector<double>& raw, double eta, bool scale) {
        return shape_advantages(raw, eta, scale ? ScaleMode::kStdOnly : ScaleMode::kNone);
      },
      py::arg("raw"), py::arg("eta"), py::arg("scale") = false);

  py::class_<Environment>(m, "Environment")
      .def_property_readonly("name", &Environment::name)
      .def_property_readonly("episode_length", &Environment::episode_length)
      .def_property_readonly("observation_dim", &Environment::observation_dim)
      .def_property_readonly("done", &Environment::done)
      .def("optimal_return", &Environment::optimal_return)
      .def("reset", &Environment::reset)
      .def("step",
           [](Environment& env, const std::vector<int>& actions) {
             return step_result(env.step(JointAction::of(actions)));
           })
      .def("step_continuous", [](Environment& env, const std::vector<Eigen::VectorXd>& actions) {
        return step_result(env.step(JointAction::of(actions)));
      });

  m.def(
      "make_env",
      [](const std::string& config_text, std::uint64_t seed) {
        return env_from_config(parse_config_text(config_text), seed);
      },
      py::arg("config_text"), py::arg("seed") = 0);

  m.def(
      "run_dynamics",
      [](const Eigen::MatrixXd& payoff, double temperature, int steps, bool optimistic) {
        DynamicsConfig cfg;
        cfg.temperature = temperature;
        cfg.steps = steps;
        cfg.optimistic = optimistic;
        std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out;
        for (const auto& s : run_dynamics(payoff, cfg)) out.emplace_back(s.policies[0], s.policies[1]);
        return out;
      },
      py::arg("payoff"), py::arg("temperature") = 2.0, py::arg("steps") = 10, py::arg("optimistic") = false);
  m.def(
      "greedy_joint_payoff",
      [](const Eigen::MatrixXd& payoff, const Eigen::VectorXd& p0, const Eigen::VectorXd& p1) {
        DynamicsState s;
        s.policies = {p0, p1};
        return greedy_joint_payoff(s, payoff);
      },
      py::arg("payoff"), py::arg("p0"), py::arg("p1"));

  m.def(
      "hysteretic_q",
      [](const std::string& config_text, double alpha_neg_ratio, std::uint64_t seed) {
        const ExperimentConfig cfg = parse_config_text(config_text);
        HystQConfig hc = cfg.hyst;
        hc.alpha_neg_ratio = alpha_neg_ratio;
        hc.episodes = cfg.iterations;
        hc.eval_every = cfg.eval_every;
        hc.seed = seed;
        auto env = env_from_config(cfg, seed);
        const HystQResult r = hq_train(*env, hc);
        py::dict d;
        d["tables"] = r.tables;
        d["greedy_return"] = greedy_episode_return(*env, r.tables);
        d["mean_q"] = mean_q_value(r.tables);
        return d;
      },
      py::arg("config_text"), py::arg("alpha_neg_ratio"), py::arg("seed") = 0);

  m.def("fixed_point_norm_climbing", [](double perturb) {
    const TabularMdp mdp = one_shot_matrix_mdp(climbing_game());
    return fixed_point_check(mdp, perturb_policy(deterministic_policy(mdp, {{0}, {0}}), perturb));
  }, py::arg("perturb") = 0.0);

  py::class_<PyTrainer>(m, "Trainer")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("config_text"), py::arg("seed") = 0)
      .def("train_iteration", &PyTrainer::train_iteration)
      .def("evaluate", &PyTrainer::evaluate, py::arg("episodes") = 1, py::arg("greedy") = true)
      .def("save", &PyTrainer::save)
      .def("load", &PyTrainer::load);

  m.def(
      "emit_config", [](const std::string& text) { return emit_config(parse_config_text(text)); },
      py::arg("config_text"), "Normalized form of a config, with every key spelled out.");
}
