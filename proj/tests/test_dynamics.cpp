#include <doctest.h>

#include <sstream>

#include "optimarl/dynamics.hpp"

using namespace optimarl;

namespace {

Eigen::MatrixXd climbing() { return payoff_matrix(climbing_game().payoff); }

Eigen::VectorXd uniform3() { return Eigen::VectorXd::Constant(3, 1.0 / 3.0); }

// softmax(q / temperature) spelled out with exp and a sum.
Eigen::VectorXd softmax_oracle(const Eigen::VectorXd& q, double temperature) {
  Eigen::VectorXd e(q.size());
  double z = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) z += e[i] = std::exp(q[i] / temperature);
  return e / z;
}

void check_simplex(const DynamicsState& s) {
  for (const auto& p : s.policies) {
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK(p.minCoeff() > 0.0);
  }
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("expected q examples") {
    const Eigen::VectorXd q = expected_q(agent_view(climbing(), 0), uniform3());
    CHECK(q[0] == doctest::Approx(-19.0 / 3.0));
    CHECK(q[1] == doctest::Approx(-17.0 / 3.0));
    CHECK(q[2] == doctest::Approx(5.0 / 3.0));
    const Eigen::VectorXd col = expected_q(climbing(), Eigen::Vector3d(1, 0, 0));
    CHECK(col == Eigen::Vector3d(11, -30, 0));
    const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 3, 4.0);
    CHECK(expected_q(flat, Eigen::Vector3d(0.2, 0.3, 0.5)).isApprox(Eigen::Vector3d::Constant(4.0)));
    CHECK_THROWS_AS(expected_q(flat, Eigen::Vector3d(0.5, 0.5, 0.5)), std::invalid_argument);
  }

  TEST_CASE("optimistic q examples") {
    const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 3, -2.0);
    CHECK(optimistic_expected_q(flat, uniform3(), uniform3(), OptimisticBaseline::kJointValue)
              .isApprox(Eigen::Vector3d::Constant(-2.0)));
    const double v = -31.0 / 9.0;
    const Eigen::VectorXd q =
        optimistic_expected_q(climbing(), uniform3(), uniform3(), OptimisticBaseline::kJointValue);
    CHECK(q[0] == doctest::Approx(v + (11.0 - v + 0.0 - v) / 3.0));
    CHECK(q[1] == doctest::Approx(v + (7.0 - v + 6.0 - v) / 3.0));
    CHECK(q[2] == doctest::Approx(v + (0.0 - v + 0.0 - v + 5.0 - v) / 3.0));

    // No clipping is active when every entry of a row beats the baseline.
    Eigen::MatrixXd pos(2, 2);
    pos << 5, 6, 1, 2;
    const Eigen::Vector2d half(0.5, 0.5);
    const Eigen::VectorXd plain = expected_q(pos, half);
    const Eigen::VectorXd opt = optimistic_expected_q(pos, half, half, OptimisticBaseline::kJointValue);
    CHECK(opt[0] == doctest::Approx(plain[0]));
    // The zero baseline on a nonnegative game is the plain expectation.
    CHECK(optimistic_expected_q(pos, half, half, OptimisticBaseline::kZero).isApprox(plain));
  }

  TEST_CASE("one softmax step from uniform") {
    DynamicsConfig cfg;
    const DynamicsState next = softmax_step(uniform_state(3, 3), climbing(), cfg);
    const Eigen::VectorXd want0 = softmax_oracle(Eigen::Vector3d(-19.0 / 3.0, -17.0 / 3.0, 5.0 / 3.0), 2.0);
    // The column player sees column means: (11-30+0, -30+7+0, 0+6+5) / 3.
    const Eigen::VectorXd want1 = softmax_oracle(Eigen::Vector3d(-19.0 / 3.0, -23.0 / 3.0, 11.0 / 3.0), 2.0);
    CHECK((next.policies[0] - want0).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((next.policies[1] - want1).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(next.step == 1);

    cfg.temperature = 1e6;
    const DynamicsState hot = softmax_step(uniform_state(3, 3), climbing(), cfg);
    for (const auto& p : hot.policies) CHECK((p - uniform3()).cwiseAbs().maxCoeff() < 1e-4);

    const DynamicsState same = softmax_step(uniform_state(3, 3), Eigen::MatrixXd::Constant(3, 3, 9.0), DynamicsConfig{});
    for (const auto& p : same.policies) CHECK((p - uniform3()).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("climbing outcomes with and without optimism") {
    DynamicsConfig cfg;
    const auto plain = run_dynamics(climbing(), cfg);
    REQUIRE(plain.size() == 11);
    CHECK(greedy_joint_payoff(plain.back(), climbing()) == 7.0);
    cfg.optimistic = true;
    const auto opt = run_dynamics(climbing(), cfg);
    CHECK(greedy_joint_payoff(opt.back(), climbing()) == 11.0);
    for (const auto& s : plain) check_simplex(s);
    for (const auto& s : opt) check_simplex(s);
    CHECK(run_dynamics(climbing(), cfg)[10].policies[0] == opt[10].policies[0]);

    // The joint-value baseline variant does not reach the 11 cell.
    cfg.baseline = OptimisticBaseline::kJointValue;
    CHECK(greedy_joint_payoff(run_dynamics(climbing(), cfg).back(), climbing()) == 6.0);
  }

  TEST_CASE("zero steps returns the uniform start") {
    DynamicsConfig cfg;
    cfg.steps = 0;
    const auto t = run_dynamics(climbing(), cfg);
    REQUIRE(t.size() == 1);
    CHECK(t[0].policies[0] == uniform3());
    CHECK(t[0].policies[1] == uniform3());
  }

  TEST_CASE("dominant joint action is found by both variants") {
    Eigen::MatrixXd dom(3, 3);
    dom << 1, 2, 0, 3, 8, 4, 0, 1, 2;
    for (bool optimistic : {false, true}) {
      DynamicsConfig cfg;
      cfg.optimistic = optimistic;
      CHECK(greedy_joint_payoff(run_dynamics(dom, cfg).back(), dom) == 8.0);
    }
  }

  TEST_CASE("trajectory csv") {
    DynamicsConfig cfg;
    cfg.steps = 4;
    std::ostringstream os;
    write_trajectory_csv(os, run_dynamics(climbing(), cfg));
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "step,agent,action,probability");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 5 * 2 * 3);
  }
}
