#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "learner_checks.hpp"
#include "optimarl/fixed_point.hpp"
#include "optimarl/learners.hpp"

using namespace optimarl;

namespace {

PPOConfig small_matrix_config(std::uint64_t seed = 0) {
  PPOConfig cfg = default_ppo_config("matrix");
  cfg.rollout_threads = 2;
  cfg.hidden_sizes = {16, 16};
  cfg.seed = seed;
  return cfg;
}

// Zero the output layer and bias it toward `action` so every agent plays it.
void make_pure(Trainer& trainer, int action, double logit = 50.0) {
  for (auto& agent : trainer.state().agents) {
    Layer& last = agent.policy.layers.back();
    last.weight.setZero();
    last.bias.setZero();
    last.bias[action] = logit;
    ++agent.policy.version;
  }
}

PolicyMinibatch one_sample(const ParamSet& policy, int action, double old_shift, double adv) {
  PolicyMinibatch mb;
  mb.states = Eigen::MatrixXd::Ones(1, policy.layer_sizes.front());
  mb.discrete_actions = {action};
  const Eigen::MatrixXd o = forward(policy, mb.states);
  mb.old_log_probs = {log_softmax(o.row(0).transpose())[action] - old_shift};
  mb.advantages = {adv};
  return mb;
}

}  // namespace

TEST_SUITE("learners") {
  TEST_CASE("loss gradients match central differences") {
    for (unsigned seed : {1u, 7u, 23u}) {
      for (const auto& [name, err] : checks::all_loss_grad_errors(seed)) {
        INFO(name << " seed " << seed);
        CHECK(err < 1e-4);
      }
    }
  }

  TEST_CASE("ppo surrogate at ratio one is minus the mean advantage") {
    const ParamSet policy = mlp_init({4, 8, 3}, 2);
    PolicyMinibatch mb = one_sample(policy, 1, 0.0, 2.0);
    const PolicyMinibatch other = one_sample(policy, 2, 0.0, 0.0);
    mb.states.conservativeResize(2, Eigen::NoChange);
    mb.states.row(1) = other.states.row(0);
    mb.discrete_actions.push_back(2);
    mb.old_log_probs.push_back(other.old_log_probs[0]);
    mb.advantages.push_back(0.0);
    const PolicyLoss l = ppo_policy_loss(policy, Eigen::VectorXd(), mb, 0.2, 0.0);
    CHECK(l.loss == doctest::Approx(-1.0).epsilon(1e-12));
    for (double r : l.ratios) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("clipped samples contribute no gradient") {
    const ParamSet policy = mlp_init({4, 8, 3}, 3);
    const PolicyMinibatch mb = one_sample(policy, 0, std::log(1.5), 1.0);
    const PolicyLoss l = ppo_policy_loss(policy, Eigen::VectorXd(), mb, 0.2, 0.0);
    CHECK(l.ratios[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(l.objectives[0] == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(l.grad.flatten().cwiseAbs().maxCoeff() == 0.0);

    // The same ratio with a negative advantage takes the unclipped branch.
    const PolicyMinibatch neg = one_sample(policy, 0, std::log(1.5), -1.0);
    const PolicyLoss ln = ppo_policy_loss(policy, Eigen::VectorXd(), neg, 0.2, 0.0);
    CHECK(ln.objectives[0] == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(ln.grad.flatten().cwiseAbs().maxCoeff() > 0.0);
  }

  TEST_CASE("clipped advantages give nonnegative objectives") {
    const ParamSet policy = mlp_init({4, 16, 3}, 4, 1.0);
    PolicyMinibatch mb = checks::random_minibatch(policy, Eigen::VectorXd(), true, 64, 5);
    for (double& a : mb.advantages) a = leaky_relu(a, 0.0);
    const PolicyLoss l = ppo_policy_loss(policy, Eigen::VectorXd(), mb, 0.2, 0.0);
    for (double o : l.objectives) CHECK(o >= 0.0);
  }

  TEST_CASE("a2c loss with zero advantages has only the entropy gradient") {
    const ParamSet policy = mlp_init({4, 16, 3}, 6, 1.0);
    PolicyMinibatch mb = checks::random_minibatch(policy, Eigen::VectorXd(), true, 16, 7);
    std::fill(mb.advantages.begin(), mb.advantages.end(), 0.0);
    const PolicyLoss l = a2c_policy_loss(policy, Eigen::VectorXd(), mb, 0.0);
    CHECK(l.loss == 0.0);
    CHECK(l.grad.flatten().cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("gaussian entropy gradient on log_std") {
    const ParamSet policy = mlp_init({4, 8, 2}, 8);
    Eigen::VectorXd log_std = Eigen::VectorXd::Constant(2, -0.5);
    PolicyMinibatch mb = checks::random_minibatch(policy, log_std, false, 10, 9);
    std::fill(mb.advantages.begin(), mb.advantages.end(), 0.0);
    const PolicyLoss l = a2c_policy_loss(policy, log_std, mb, 0.1);
    const double per_dim = 0.5 * std::log(2.0 * M_PI * std::exp(1.0));
    CHECK(l.entropy == doctest::Approx(2.0 * (-0.5 + per_dim)).epsilon(1e-12));
    for (Eigen::Index d = 0; d < 2; ++d) CHECK(l.log_std_grad[d] == doctest::Approx(-0.1).epsilon(1e-12));
  }

  TEST_CASE("critic loss examples") {
    const ParamSet critic = mlp_init({4, 8, 1}, 10);
    Eigen::MatrixXd states = Eigen::MatrixXd::Random(5, 4);
    const Eigen::MatrixXd v = forward(critic, states);
    std::vector<double> exact(v.data(), v.data() + v.size());
    const CriticLoss zero = critic_loss(critic, states, exact);
    CHECK(zero.loss == 0.0);
    CHECK(zero.grad.flatten().cwiseAbs().maxCoeff() == 0.0);

    ParamSet flat = critic;
    for (auto& layer : flat.layers) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
    CHECK(critic_loss(flat, states, std::vector<double>(5, 2.0)).loss == doctest::Approx(2.0));
    CHECK_THROWS_AS(critic_loss(critic, states, std::vector<double>(4, 0.0)), std::invalid_argument);
  }

  TEST_CASE("rollout shape and determinism") {
    MatrixGameEnv env(climbing_game());
    Trainer a(env, small_matrix_config(3)), b(env, small_matrix_config(3));
    const RolloutBatch ra = a.collect_rollout();
    const RolloutBatch rb = b.collect_rollout();
    CHECK(ra.size() == 50);
    CHECK(ra.states.rows() == 50);
    CHECK(ra.discrete_actions.size() == 2);
    CHECK(ra.discrete_actions[0] == rb.discrete_actions[0]);
    CHECK(ra.discrete_actions[1] == rb.discrete_actions[1]);
    CHECK(ra.rewards == rb.rewards);
    CHECK(ra.episode_returns.size() == 2);
    // Each thread segment ends its 25-step episode exactly at the boundary.
    CHECK(ra.dones[24] == 1);
    CHECK(ra.dones[49] == 1);
    CHECK(std::count(ra.dones.begin(), ra.dones.end(), Flag{1}) == 2);

    Trainer c(env, small_matrix_config(4));
    CHECK(c.collect_rollout().discrete_actions[0] != ra.discrete_actions[0]);
  }

  TEST_CASE("ratios are exactly one before the first update") {
    MatrixGameEnv env(climbing_game());
    Trainer t(env, small_matrix_config(5));
    const RolloutBatch batch = t.collect_rollout();
    PolicyMinibatch mb;
    mb.states = batch.states;
    mb.discrete_actions = batch.discrete_actions[0];
    mb.old_log_probs = batch.log_probs[0];
    mb.advantages.assign(batch.size(), 1.0);
    const PolicyLoss l = ppo_policy_loss(t.state().agents[0].policy, Eigen::VectorXd(), mb, 0.2, 0.0);
    for (double r : l.ratios) CHECK(std::abs(r - 1.0) < 1e-9);
  }

  TEST_CASE("training is deterministic given the seed") {
    QuadraticsEnv env(QuadraticsConfig{});
    PPOConfig cfg = default_ppo_config("quadratics");
    cfg.rollout_threads = 2;
    cfg.steps_per_thread = 10;
    cfg.hidden_sizes = {8, 8};
    cfg.seed = 12;
    Trainer a(env, cfg), b(env, cfg);
    for (int i = 0; i < 3; ++i) {
      const IterationMetrics ma = a.train_iteration();
      const IterationMetrics mb = b.train_iteration();
      CHECK(ma.mean_return == mb.mean_return);
      CHECK(ma.policy_loss == mb.policy_loss);
      CHECK(ma.env_steps == (i + 1) * 20);
    }
    CHECK(checks::same_params(a.state(), b.state()));
  }

  TEST_CASE("eta one is bit-identical to the unshaped path") {
    MatrixGameEnv climbing(climbing_game());
    CHECK(checks::eta_one_matches_unshaped(climbing, small_matrix_config(0), 10));
    CHECK(checks::eta_one_matches_unshaped(climbing, small_matrix_config(1), 10, Algorithm::kA2c));
    QuadraticsEnv quad(QuadraticsConfig{});
    PPOConfig cfg = default_ppo_config("quadratics");
    cfg.rollout_threads = 2;
    cfg.steps_per_thread = 10;
    cfg.hidden_sizes = {8, 8};
    CHECK(checks::eta_one_matches_unshaped(quad, cfg, 10));
  }

  TEST_CASE("evaluation of fixed policies") {
    MatrixGameEnv climbing(climbing_game());
    Trainer t(climbing, small_matrix_config());
    make_pure(t, 0);
    EvalResult r = t.evaluate(climbing, 3, true);
    CHECK(r.mean_return == 275.0);
    CHECK(r.max_return == 275.0);

    MatrixGameEnv penalty(penalty_game(-100));
    Trainer p(penalty, small_matrix_config());
    make_pure(p, 1);
    CHECK(p.evaluate(penalty, 2, true).mean_return == 50.0);

    // Zero output layer: both agents sample uniformly.
    make_pure(t, 0, 0.0);
    r = t.evaluate(climbing, 4000, false, 99);
    CHECK(std::abs(r.mean_return - 25.0 * (-31.0 / 9.0)) < 5.0);
  }

  TEST_CASE("checkpoint round trip") {
    MatrixGameEnv env(climbing_game());
    Trainer a(env, small_matrix_config(2));
    a.train_iteration();
    a.train_iteration();
    const auto path = std::filesystem::temp_directory_path() / "optimarl_test_ckpt.bin";
    a.save_checkpoint(path.string());
    Trainer b(env, small_matrix_config(9));
    b.load_checkpoint(path.string());
    CHECK(checks::same_params(a.state(), b.state()));
    CHECK(b.state().iteration == 2);
    // Checkpoints hold parameters only, so policies act identically.
    MatrixGameEnv e1(climbing_game()), e2(climbing_game());
    CHECK(a.evaluate(e1, 5, false, 4).mean_return == b.evaluate(e2, 5, false, 4).mean_return);
    std::filesystem::remove(path);
    CHECK_THROWS(b.load_checkpoint(path.string()));
  }

  TEST_CASE("config validation") {
    PPOConfig cfg = default_ppo_config("matrix");
    CHECK(cfg.lam == 0.0);
    CHECK(cfg.steps_per_thread == 25);
    cfg.eta = 1.5;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = default_ppo_config("pushbox");
    cfg.rollout_threads = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  }

  TEST_CASE("fixed point at optimal policies") {
    const TabularMdp climb = one_shot_matrix_mdp(climbing_game());
    const TabularPolicy best = deterministic_policy(climb, {{0}, {0}});
    CHECK(fixed_point_check(climb, best) == 0.0);
    for (double eps : {0.01, 0.1, 0.5}) CHECK(fixed_point_check(climb, perturb_policy(best, eps)) > 0.0);

    const TabularMdp chain = two_state_chain_mdp(0.9);
    const TabularPolicy opt = deterministic_policy(chain, {{1, 0}});
    CHECK(fixed_point_check(chain, opt) == 0.0);
    CHECK(fixed_point_check(chain, perturb_policy(opt, 0.05)) > 0.0);
  }

  TEST_CASE("exact values on the chain") {
    const TabularMdp chain = two_state_chain_mdp(0.9);
    const ExactValues ev = exact_values(chain, deterministic_policy(chain, {{1, 0}}));
    // Staying in state 1 forever pays 1 / (1 - gamma).
    CHECK(ev.v[1] == doctest::Approx(10.0));
    CHECK(ev.v[0] == doctest::Approx(9.0));
    CHECK(ev.advantage.maxCoeff() <= 1e-12);
  }
}
