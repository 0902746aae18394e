#include <doctest.h>

#include <sstream>

#include "optimarl/hysteretic.hpp"

using namespace optimarl;

namespace {

HystQConfig short_config(double ratio, std::uint64_t seed, int episodes = 20000) {
  HystQConfig cfg;
  cfg.alpha_neg_ratio = ratio;
  cfg.seed = seed;
  cfg.episodes = episodes;
  return cfg;
}

// Plain independent Q-learning written out directly: same random stream and
// draw order as the learner, symmetric step size.
std::vector<QTable> reference_q_learning(Environment& env, const HystQConfig& cfg) {
  const int n = env.action_space().size;
  std::vector<QTable> q(static_cast<std::size_t>(env.num_agents()), QTable::Zero(*env.num_states(), n));
  Rng rng = make_rng(cfg.seed, 0x4871);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::int64_t steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    env.reset();
    while (!env.done()) {
      const int s = *env.state_index();
      const double frac = std::min(1.0, static_cast<double>(steps) / static_cast<double>(cfg.epsilon.decay_steps));
      const double eps = steps >= cfg.epsilon.decay_steps ? cfg.epsilon.end
                                                          : cfg.epsilon.start + (cfg.epsilon.end - cfg.epsilon.start) * frac;
      std::vector<int> acts;
      for (const auto& t : q) {
        if (eps > 0.0 && uni(rng) < eps) {
          acts.push_back(pick(rng));
        } else {
          Eigen::Index a = 0;
          t.row(s).maxCoeff(&a);
          acts.push_back(static_cast<int>(a));
        }
      }
      const Transition tr = env.step(JointAction::of(acts));
      const int s2 = *env.state_index();
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double target = tr.reward + (tr.done ? 0.0 : cfg.gamma * q[i].row(s2).maxCoeff());
        q[i](s, acts[i]) += cfg.alpha_pos * (target - q[i](s, acts[i]));
      }
      ++steps;
    }
  }
  return q;
}

}  // namespace

TEST_SUITE("hysteretic") {
  TEST_CASE("update examples") {
    HystQConfig cfg;
    cfg.alpha_pos = 0.1;
    cfg.gamma = 0.9;
    QTable q = QTable::Ones(2, 2);
    CHECK(hq_update(q, 0, 0, 2.0, 1, false, cfg) == doctest::Approx(1.9));
    CHECK(q(0, 0) == doctest::Approx(1.19));

    cfg.alpha_neg_ratio = 0.1;
    QTable q2 = QTable::Ones(1, 2);
    CHECK(hq_update(q2, 0, 1, 0.5, 0, true, cfg) == doctest::Approx(-0.5));
    CHECK(q2(0, 1) == doctest::Approx(0.995));
    CHECK_THROWS_AS(hq_update(q2, 0, 2, 0.0, 0, true, cfg), std::out_of_range);
    CHECK_THROWS_AS(hq_update(q2, 1, 0, 0.0, 0, true, cfg), std::out_of_range);
  }

  TEST_CASE("ratio one matches symmetric Q-learning on arbitrary transitions") {
    HystQConfig cfg;
    cfg.alpha_neg_ratio = 1.0;
    std::mt19937 rng(5);
    std::normal_distribution<double> g(0.0, 3.0);
    QTable q = QTable::Random(3, 3);
    QTable ref = q;
    for (int i = 0; i < 200; ++i) {
      const int s = i % 3, a = (i * 7) % 3, s2 = (i * 5) % 3;
      const double r = g(rng);
      const bool done = i % 11 == 0;
      hq_update(q, s, a, r, s2, done, cfg);
      const double target = r + (done ? 0.0 : cfg.gamma * ref.row(s2).maxCoeff());
      ref(s, a) += cfg.alpha_pos * (target - ref(s, a));
      CHECK(q(s, a) == ref(s, a));
    }
  }

  TEST_CASE("epsilon greedy") {
    QTable q(1, 3);
    q << 0.0, 5.0, 5.0;
    Rng rng = make_rng(1);
    for (int i = 0; i < 20; ++i) CHECK(eps_greedy(q, 0, 0.0, rng) == 1);
    std::vector<int> counts(3, 0);
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(eps_greedy(q, 0, 1.0, rng))];
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(draws) - 1.0 / 3.0) < 0.01);
  }

  TEST_CASE("epsilon schedule decays linearly") {
    EpsilonSchedule e{1.0, 0.1, 100};
    CHECK(e.at(0) == 1.0);
    CHECK(e.at(50) == doctest::Approx(0.55));
    CHECK(e.at(100) == 0.1);
    CHECK(e.at(1000) == 0.1);
  }

  TEST_CASE("ratio one training equals the reference learner bit for bit") {
    MatrixGameEnv env(climbing_game());
    HystQConfig cfg = short_config(1.0, 3, 3000);
    cfg.epsilon.decay_steps = 50000;
    const HystQResult r = hq_train(env, cfg);
    MatrixGameEnv env2(climbing_game());
    const std::vector<QTable> ref = reference_q_learning(env2, cfg);
    REQUIRE(r.tables.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(r.tables[i] == ref[i]);
  }

  TEST_CASE("optimistic learners solve climbing and penalty") {
    MatrixGameEnv climbing(climbing_game());
    const HystQResult r = hq_train(climbing, short_config(0.01, 0));
    CHECK(greedy_episode_return(climbing, r.tables) == 275.0);
    CHECK(r.curve.back().episode == 20000);
    CHECK(r.curve.back().env_steps == 20000 * 25);

    MatrixGameEnv penalty(penalty_game(-100));
    const HystQResult p = hq_train(penalty, short_config(0.01, 0));
    CHECK(greedy_episode_return(penalty, p.tables) == 250.0);
  }

  TEST_CASE("mean Q grows with optimism and stays bounded") {
    MatrixGameEnv env(climbing_game());
    std::vector<double> mean_q;
    for (double ratio : {1.0, 0.1, 0.01}) {
      const HystQResult r = hq_train(env, short_config(ratio, 1));
      mean_q.push_back(r.curve.back().mean_q);
      // Discounted per-step payoffs lie in [-30, 11] / (1 - gamma).
      for (const auto& t : r.tables) {
        CHECK(t.maxCoeff() <= 11.0 / 0.1 + 1e-9);
        CHECK(t.minCoeff() >= -30.0 / 0.1 - 1e-9);
      }
    }
    CHECK(mean_q[0] <= mean_q[1]);
    CHECK(mean_q[1] <= mean_q[2]);
  }

  TEST_CASE("rejects continuous environments and bad configs") {
    QuadraticsEnv env(QuadraticsConfig{});
    CHECK_THROWS_AS(hq_train(env, HystQConfig{}), std::invalid_argument);
    HystQConfig bad;
    bad.alpha_neg_ratio = 0.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  }

  TEST_CASE("q table dump") {
    QTable q(2, 3);
    q << 1, 2, 3, 4.5, -1, 0;
    std::ostringstream os;
    dump_qtable(os, q);
    CHECK(os.str() == "1 2 3\n4.5 -1 0\n");
  }
}
