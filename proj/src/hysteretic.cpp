#include "optimarl/hysteretic.hpp"

#include <algorithm>
#include <iomanip>
#include <stdexcept>
#include <string>

namespace optimarl {

double EpsilonSchedule::at(std::int64_t step) const {
  if (decay_steps <= 0 || step >= decay_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

void validate(const HystQConfig& cfg) {
  if (!(cfg.alpha_pos > 0.0 && cfg.alpha_pos <= 1.0)) throw std::invalid_argument("alpha_pos must lie in (0, 1]");
  if (!(cfg.alpha_neg_ratio > 0.0 && cfg.alpha_neg_ratio <= 1.0)) {
    throw std::invalid_argument("alpha_neg_ratio must lie in (0, 1]");
  }
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  const auto& e = cfg.epsilon;
  if (!(e.start >= 0.0 && e.start <= 1.0 && e.end >= 0.0 && e.end <= 1.0)) {
    throw std::invalid_argument("epsilon schedule values must lie in [0, 1]");
  }
  if (cfg.episodes < 0 || cfg.eval_every <= 0) throw std::invalid_argument("episodes/eval_every invalid");
}

double hq_update(QTable& table, int state, int action, double reward, int next_state, bool done,
                 const HystQConfig& cfg) {
  if (state < 0 || state >= table.rows() || next_state < 0 || next_state >= table.rows() || action < 0 ||
      action >= table.cols()) {
    throw std::out_of_range("hq_update: index out of range");
  }
  const double bootstrap = done ? 0.0 : table.row(next_state).maxCoeff();
  const double td = reward + cfg.gamma * bootstrap - table(state, action);
  const double rate = td >= 0.0 ? cfg.alpha_pos : cfg.alpha_pos * cfg.alpha_neg_ratio;
  table(state, action) += rate * td;
  return td;
}

void hq_update(std::vector<QTable>& tables, const TabularStep& step, const HystQConfig& cfg) {
  if (step.actions.size() != tables.size()) throw std::out_of_range("hq_update: one action per agent required");
  for (std::size_t i = 0; i < tables.size(); ++i) {
    hq_update(tables[i], step.state, step.actions[i], step.reward, step.next_state, step.done, cfg);
  }
}

int greedy_action(const QTable& table, int state) {
  Eigen::Index best = 0;
  table.row(state).maxCoeff(&best);
  return static_cast<int>(best);
}

int eps_greedy(const QTable& table, int state, double epsilon, Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (epsilon > 0.0 && uni(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(table.cols()) - 1);
    return pick(rng);
  }
  return greedy_action(table, state);
}

double greedy_episode_return(Environment& env, const std::vector<QTable>& tables) {
  env.reset();
  double ret = 0.0;
  while (!env.done()) {
    const int s = *env.state_index();
    std::vector<int> actions;
    for (const auto& t : tables) actions.push_back(greedy_action(t, s));
    ret += env.step(JointAction::of(std::move(actions))).reward;
  }
  return ret;
}

double mean_q_value(const std::vector<QTable>& tables) {
  double sum = 0.0;
  Eigen::Index n = 0;
  for (const auto& t : tables) {
    sum += t.sum();
    n += t.size();
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

HystQResult hq_train(Environment& env, const HystQConfig& cfg) {
  validate(cfg);
  const ActionSpace space = env.action_space();
  if (!space.discrete || !env.num_states()) {
    throw std::invalid_argument("hysteretic Q-learning needs a discrete-state, discrete-action environment");
  }
  HystQResult result;
  result.tables.assign(static_cast<std::size_t>(env.num_agents()), QTable::Zero(*env.num_states(), space.size));
  auto eval_env = env.clone();
  Rng rng = make_rng(cfg.seed, 0x4871);

  std::int64_t steps = 0;
  auto record = [&](int episode) {
    result.curve.push_back({episode, steps, greedy_episode_return(*eval_env, result.tables),
                            mean_q_value(result.tables)});
  };

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    env.reset();
    while (!env.done()) {
      TabularStep ts;
      ts.state = *env.state_index();
      const double eps = cfg.epsilon.at(steps);
      for (const auto& t : result.tables) ts.actions.push_back(eps_greedy(t, ts.state, eps, rng));
      const Transition tr = env.step(JointAction::of(ts.actions));
      ts.reward = tr.reward;
      ts.next_state = *env.state_index();
      ts.done = tr.done;
      hq_update(result.tables, ts, cfg);
      ++steps;
    }
    if ((ep + 1) % cfg.eval_every == 0) record(ep + 1);
  }
  if (result.curve.empty() || result.curve.back().episode != cfg.episodes) record(cfg.episodes);
  return result;
}

void dump_qtable(std::ostream& os, const QTable& table) {
  os << std::setprecision(10);
  for (Eigen::Index s = 0; s < table.rows(); ++s) {
    for (Eigen::Index a = 0; a < table.cols(); ++a) os << (a ? " " : "") << table(s, a);
    os << '\n';
  }
}

}  // namespace optimarl
