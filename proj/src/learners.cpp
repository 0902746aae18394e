#include "optimarl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace optimarl {

PPOConfig default_ppo_config(std::string_view env_kind) {
  PPOConfig cfg;
  if (env_kind == "matrix") {
    cfg.steps_per_thread = 25;
    cfg.num_minibatch = 1;
    cfg.lam = 0.0;
  }
  return cfg;
}

void validate(const PPOConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(cfg.clip_eps > 0.0, "clip_eps must be positive");
  require(cfg.eta >= 0.0 && cfg.eta <= 1.0, "eta must lie in [0, 1]");
  require(cfg.policy_lr > 0.0 && cfg.critic_lr > 0.0, "learning rates must be positive");
  require(cfg.rollout_threads >= 1 && cfg.steps_per_thread >= 1, "rollout sizing must be positive");
  require(cfg.ppo_epochs >= 1, "ppo_epochs must be >= 1");
  require(cfg.num_minibatch >= 1 && (cfg.rollout_threads * cfg.steps_per_thread) % cfg.num_minibatch == 0,
          "num_minibatch must divide rollout_threads * steps_per_thread");
  require(cfg.entropy_coef >= 0.0, "entropy_coef must be nonnegative");
  require(cfg.max_grad_norm > 0.0, "max_grad_norm must be positive");
  require(cfg.gamma >= 0.0 && cfg.gamma < 1.0, "gamma must lie in [0, 1)");
  require(cfg.lam >= 0.0 && cfg.lam <= 1.0, "lam must lie in [0, 1]");
  require(std::all_of(cfg.hidden_sizes.begin(), cfg.hidden_sizes.end(), [](int h) { return h > 0; }),
          "hidden sizes must be positive");
}

// --- losses -------------------------------------------------------------------

namespace {

enum class Objective { kClippedRatio, kLogProb };

PolicyLoss policy_loss(const ParamSet& policy, const Eigen::VectorXd& log_std, const PolicyMinibatch& mb,
                       Objective objective, double clip_eps, double entropy_coef) {
  const Eigen::Index n = mb.states.rows();
  const auto un = static_cast<std::size_t>(n);
  if (n == 0) throw std::invalid_argument("policy loss on an empty minibatch");
  if (mb.advantages.size() != un || (objective == Objective::kClippedRatio && mb.old_log_probs.size() != un)) {
    throw std::invalid_argument("policy loss: minibatch field lengths differ");
  }
  if (mb.discrete ? mb.discrete_actions.size() != un : mb.continuous_actions.rows() != n) {
    throw std::invalid_argument("policy loss: action count differs from state count");
  }

  ForwardCache cache;
  const Eigen::MatrixXd out = forward(policy, mb.states, &cache);
  Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  Eigen::VectorXd dlog_std = Eigen::VectorXd::Zero(log_std.size());
  const double inv_n = 1.0 / static_cast<double>(n);
  const double half_log_2pi_e = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

  PolicyLoss res;
  res.objectives.resize(un);
  if (objective == Objective::kClippedRatio) res.ratios.resize(un);
  double obj_sum = 0.0;
  double ent_sum = 0.0;

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double logp = 0.0;
    double entropy = 0.0;
    Eigen::VectorXd dlogp_dout;
    Eigen::VectorXd dent_dout;
    Eigen::VectorXd dlogp_dlogstd;

    if (mb.discrete) {
      const Eigen::VectorXd z = out.row(i).transpose();
      const Eigen::VectorXd lp = log_softmax(z);
      const Eigen::VectorXd p = lp.array().exp().matrix();
      const int a = mb.discrete_actions[ui];
      if (a < 0 || a >= z.size()) throw std::out_of_range("policy loss: action index out of range");
      logp = lp[a];
      entropy = -(p.array() * lp.array()).sum();
      dlogp_dout = -p;
      dlogp_dout[a] += 1.0;
      dent_dout = -(p.array() * (lp.array() + entropy)).matrix();
    } else {
      const Eigen::VectorXd mean = out.row(i).transpose();
      const Eigen::VectorXd x = mb.continuous_actions.row(i).transpose();
      const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
      logp = gaussian_log_prob(mean, log_std, x);
      entropy = (log_std.array() + half_log_2pi_e).sum();
      const Eigen::ArrayXd diff = (x - mean).array();
      dlogp_dout = (diff * inv_var).matrix();
      dent_dout = Eigen::VectorXd::Zero(mean.size());
      dlogp_dlogstd = (diff.square() * inv_var - 1.0).matrix();
    }

    const double adv = mb.advantages[ui];
    double obj = 0.0;
    double dobj_dlogp = 0.0;
    if (objective == Objective::kClippedRatio) {
      const double ratio = std::exp(logp - mb.old_log_probs[ui]);
      if (!std::isfinite(ratio)) {
        throw std::domain_error("non-finite importance ratio at sample " + std::to_string(i) + ": log pi = " +
                                std::to_string(logp) + ", behavior log pi = " +
                                std::to_string(mb.old_log_probs[ui]));
      }
      res.ratios[ui] = ratio;
      const double unclipped = ratio * adv;
      const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
      obj = std::min(unclipped, clipped);
      dobj_dlogp = unclipped <= clipped ? unclipped : 0.0;
    } else {
      obj = adv * logp;
      dobj_dlogp = adv;
    }
    res.objectives[ui] = obj;
    obj_sum += obj;
    ent_sum += entropy;

    dout.row(i) = (-inv_n * dobj_dlogp * dlogp_dout - entropy_coef * inv_n * dent_dout).transpose();
    if (!mb.discrete) {
      dlog_std += -inv_n * dobj_dlogp * dlogp_dlogstd;
      dlog_std.array() -= entropy_coef * inv_n;
    }
  }

  res.surrogate = obj_sum * inv_n;
  res.entropy = ent_sum * inv_n;
  res.loss = -res.surrogate - entropy_coef * res.entropy;
  res.grad = backward(policy, cache, dout);
  res.log_std_grad = dlog_std;
  return res;
}

}  // namespace

PolicyLoss ppo_policy_loss(const ParamSet& policy, const Eigen::VectorXd& log_std, const PolicyMinibatch& mb,
                           double clip_eps, double entropy_coef) {
  return policy_loss(policy, log_std, mb, Objective::kClippedRatio, clip_eps, entropy_coef);
}

PolicyLoss a2c_policy_loss(const ParamSet& policy, const Eigen::VectorXd& log_std, const PolicyMinibatch& mb,
                           double entropy_coef) {
  return policy_loss(policy, log_std, mb, Objective::kLogProb, 0.0, entropy_coef);
}

CriticLoss critic_loss(const ParamSet& critic, const Eigen::MatrixXd& states, std::span<const double> targets) {
  if (static_cast<std::size_t>(states.rows()) != targets.size() || targets.empty()) {
    throw std::invalid_argument("critic loss: states and targets differ in length");
  }
  if (critic.layer_sizes.back() != 1) throw std::invalid_argument("critic must have a single output");
  ForwardCache cache;
  const Eigen::MatrixXd v = forward(critic, states, &cache);
  const Eigen::Map<const Eigen::VectorXd> t(targets.data(), static_cast<Eigen::Index>(targets.size()));
  const Eigen::VectorXd diff = v.col(0) - t;
  const double n = static_cast<double>(targets.size());
  CriticLoss res;
  res.loss = 0.5 * diff.squaredNorm() / n;
  res.grad = backward(critic, cache, diff / n);
  return res;
}

// --- trainer --------------------------------------------------------------------

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng r = make_rng(seed, stream);
  return r();
}

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

constexpr std::uint64_t kWorkerStreamBase = 1000;
constexpr std::uint64_t kUpdateStream = 7;

}  // namespace

Trainer::Trainer(const Environment& prototype, PPOConfig cfg, Algorithm algorithm)
    : cfg_(std::move(cfg)), algorithm_(algorithm), space_(prototype.action_space()) {
  validate(cfg_);
  num_agents_ = prototype.num_agents();
  obs_dim_ = prototype.observation_dim();

  for (int i = 0; i < num_agents_; ++i) {
    AgentParams a;
    a.policy = mlp_init(layer_sizes(obs_dim_, cfg_.hidden_sizes, space_.size),
                        derive_seed(cfg_.seed, 10 + static_cast<std::uint64_t>(i)), 0.01);
    a.policy_opt = OptState::for_params(a.policy, cfg_.policy_lr);
    if (!space_.discrete) {
      a.log_std = Eigen::VectorXd::Constant(space_.size, cfg_.log_std_init);
      a.log_std_opt = OptState::for_size(space_.size, cfg_.policy_lr);
    }
    state_.agents.push_back(std::move(a));
  }
  state_.critic = mlp_init(layer_sizes(obs_dim_, cfg_.hidden_sizes, 1), derive_seed(cfg_.seed, 9), 1.0);
  state_.critic_opt = OptState::for_params(state_.critic, cfg_.critic_lr);
  for (int w = 0; w < cfg_.rollout_threads; ++w) {
    state_.worker_rngs.push_back(make_rng(cfg_.seed, kWorkerStreamBase + static_cast<std::uint64_t>(w)));
    envs_.push_back(prototype.clone());
    obs_.push_back(envs_.back()->reset());
    running_return_.push_back(0.0);
  }
  state_.update_rng = make_rng(cfg_.seed, kUpdateStream);
}

JointAction Trainer::act(const Eigen::VectorXd& obs, Rng& rng, bool greedy) const {
  const Eigen::MatrixXd x = obs.transpose();
  JointAction ja;
  for (int i = 0; i < num_agents_; ++i) {
    const auto& agent = state_.agents[static_cast<std::size_t>(i)];
    const Eigen::VectorXd out = forward(agent.policy, x).row(0).transpose();
    if (space_.discrete) {
      ja.discrete.push_back(categorical_act(out, rng, greedy).action);
    } else {
      ja.continuous.push_back(gaussian_act(out, agent.log_std, rng, greedy, space_.low, space_.high).action);
    }
  }
  return ja;
}

RolloutBatch Trainer::collect_rollout() {
  const int workers = cfg_.rollout_threads;
  const int steps = cfg_.steps_per_thread;
  const auto n = static_cast<Eigen::Index>(workers) * steps;

  RolloutBatch b;
  b.num_agents = num_agents_;
  b.threads = workers;
  b.steps_per_thread = steps;
  b.discrete = space_.discrete;
  b.states.resize(n, obs_dim_);
  b.log_probs.assign(static_cast<std::size_t>(num_agents_), std::vector<double>(static_cast<std::size_t>(n)));
  if (space_.discrete) {
    b.discrete_actions.assign(static_cast<std::size_t>(num_agents_), std::vector<int>(static_cast<std::size_t>(n)));
  } else {
    b.continuous_actions.assign(static_cast<std::size_t>(num_agents_), Eigen::MatrixXd(n, space_.size));
  }
  b.rewards.resize(static_cast<std::size_t>(n));
  b.values.resize(static_cast<std::size_t>(n));
  b.dones.resize(static_cast<std::size_t>(n));

  // Workers advance in lockstep; network evaluation is batched across them
  // while every worker keeps its own environment and rng stream.
  Eigen::MatrixXd obs(workers, obs_dim_);
  for (int t = 0; t < steps; ++t) {
    for (int w = 0; w < workers; ++w) obs.row(w) = obs_[static_cast<std::size_t>(w)].transpose();
    std::vector<Eigen::MatrixXd> outputs;
    for (const auto& agent : state_.agents) outputs.push_back(forward(agent.policy, obs));
    const Eigen::MatrixXd values = forward(state_.critic, obs);

    for (int w = 0; w < workers; ++w) {
      const auto uw = static_cast<std::size_t>(w);
      const Eigen::Index idx = static_cast<Eigen::Index>(w) * steps + t;
      const auto uidx = static_cast<std::size_t>(idx);
      Rng& rng = state_.worker_rngs[uw];
      JointAction ja;
      for (int i = 0; i < num_agents_; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const Eigen::VectorXd out = outputs[ui].row(w).transpose();
        if (space_.discrete) {
          const CategoricalSample s = categorical_act(out, rng, false);
          b.discrete_actions[ui][uidx] = s.action;
          b.log_probs[ui][uidx] = s.log_prob;
          ja.discrete.push_back(s.action);
        } else {
          const GaussianSample s =
              gaussian_act(out, state_.agents[ui].log_std, rng, false, space_.low, space_.high);
          b.continuous_actions[ui].row(idx) = s.raw.transpose();
          b.log_probs[ui][uidx] = s.log_prob;
          ja.continuous.push_back(s.action);
        }
      }
      Transition tr;
      try {
        tr = envs_[uw]->step(ja);
      } catch (const std::exception& e) {
        throw std::runtime_error("rollout worker " + std::to_string(w) + ": " + e.what());
      }
      b.states.row(idx) = obs.row(w);
      b.values[uidx] = values(w, 0);
      b.rewards[uidx] = tr.reward;
      b.dones[uidx] = tr.done ? 1 : 0;
      running_return_[uw] += tr.reward;
      if (tr.done) {
        b.episode_returns.push_back(running_return_[uw]);
        running_return_[uw] = 0.0;
        obs_[uw] = envs_[uw]->reset();
      } else {
        obs_[uw] = tr.next_state;
      }
    }
  }
  for (int w = 0; w < workers; ++w) obs.row(w) = obs_[static_cast<std::size_t>(w)].transpose();
  const Eigen::MatrixXd tail = forward(state_.critic, obs);
  b.bootstrap_values.assign(tail.data(), tail.data() + tail.rows());
  env_steps_ += n;
  return b;
}

AdvantageBatch Trainer::advantages(const RolloutBatch& batch) const {
  AdvantageBatch out;
  const auto steps = static_cast<std::size_t>(batch.steps_per_thread);
  for (std::size_t w = 0; w < static_cast<std::size_t>(batch.threads); ++w) {
    const std::span<const double> r(batch.rewards.data() + w * steps, steps);
    const std::span<const double> v(batch.values.data() + w * steps, steps);
    const std::span<const Flag> d(batch.dones.data() + w * steps, steps);
    const auto delta = td_errors(r, v, batch.bootstrap_values[w], d, cfg_.gamma);
    const auto adv = gae(delta, cfg_.gamma, cfg_.lam, d);
    out.td_errors.insert(out.td_errors.end(), delta.begin(), delta.end());
    out.raw_adv.insert(out.raw_adv.end(), adv.begin(), adv.end());
  }
  out.value_targets = value_targets(out.raw_adv, batch.values);
  out.shaped_adv = cfg_.shaping == Shaping::kNone ? scale_advantages(out.raw_adv, cfg_.scale_mode)
                                                  : shape_advantages(out.raw_adv, cfg_.eta, cfg_.scale_mode);
  return out;
}

PolicyMinibatch Trainer::policy_minibatch(const RolloutBatch& batch, int agent, std::span<const Eigen::Index> idx,
                                          const std::vector<double>& shaped) const {
  const auto ua = static_cast<std::size_t>(agent);
  PolicyMinibatch mb;
  mb.discrete = batch.discrete;
  mb.states.resize(static_cast<Eigen::Index>(idx.size()), batch.states.cols());
  if (!batch.discrete) mb.continuous_actions.resize(static_cast<Eigen::Index>(idx.size()), space_.size);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::Index i = idx[k];
    const auto ui = static_cast<std::size_t>(i);
    mb.states.row(static_cast<Eigen::Index>(k)) = batch.states.row(i);
    if (batch.discrete) {
      mb.discrete_actions.push_back(batch.discrete_actions[ua][ui]);
    } else {
      mb.continuous_actions.row(static_cast<Eigen::Index>(k)) = batch.continuous_actions[ua].row(i);
    }
    mb.old_log_probs.push_back(batch.log_probs[ua][ui]);
    mb.advantages.push_back(shaped[ui]);
  }
  return mb;
}

void Trainer::apply_policy_step(int agent, PolicyLoss& loss) {
  auto& a = state_.agents[static_cast<std::size_t>(agent)];
  std::vector<Eigen::VectorXd*> extra;
  if (a.log_std.size() > 0) extra.push_back(&loss.log_std_grad);
  clip_global_norm({&loss.grad}, extra, cfg_.max_grad_norm);
  adam_step(a.policy_opt, a.policy, loss.grad);
  if (a.log_std.size() > 0) adam_step(a.log_std_opt, a.log_std, loss.log_std_grad);
}

void Trainer::apply_critic_step(CriticLoss& loss) {
  clip_global_norm({&loss.grad}, {}, cfg_.max_grad_norm);
  adam_step(state_.critic_opt, state_.critic, loss.grad);
}

IterationMetrics Trainer::finish_metrics(const RolloutBatch& batch, const AdvantageBatch& adv) const {
  IterationMetrics m;
  m.env_steps = env_steps_;
  if (batch.episode_returns.empty()) {
    m.mean_return = m.max_return = std::numeric_limits<double>::quiet_NaN();
  } else {
    m.mean_return = std::accumulate(batch.episode_returns.begin(), batch.episode_returns.end(), 0.0) /
                    static_cast<double>(batch.episode_returns.size());
    m.max_return = *std::max_element(batch.episode_returns.begin(), batch.episode_returns.end());
  }
  const double n = static_cast<double>(adv.raw_adv.size());
  m.mean_raw_adv = std::accumulate(adv.raw_adv.begin(), adv.raw_adv.end(), 0.0) / n;
  if (cfg_.shaping == Shaping::kLeakyRelu && cfg_.eta < 1.0) {
    m.frac_adv_clipped =
        static_cast<double>(std::count_if(adv.raw_adv.begin(), adv.raw_adv.end(), [](double a) { return a < 0.0; })) / n;
  }
  m.entropy.assign(static_cast<std::size_t>(num_agents_), 0.0);
  return m;
}

IterationMetrics Trainer::ppo_update(const RolloutBatch& batch) {
  const AdvantageBatch adv = advantages(batch);
  IterationMetrics m = finish_metrics(batch, adv);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index mb_size = n / cfg_.num_minibatch;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  int updates = 0;

  for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), state_.update_rng);
    for (int k = 0; k < cfg_.num_minibatch; ++k) {
      const std::span<const Eigen::Index> idx(perm.data() + k * mb_size, static_cast<std::size_t>(mb_size));
      for (int i = 0; i < num_agents_; ++i) {
        const PolicyMinibatch mb = policy_minibatch(batch, i, idx, adv.shaped_adv);
        const auto& agent = state_.agents[static_cast<std::size_t>(i)];
        PolicyLoss loss = ppo_policy_loss(agent.policy, agent.log_std, mb, cfg_.clip_eps, cfg_.entropy_coef);
        m.policy_loss += loss.loss;
        m.entropy[static_cast<std::size_t>(i)] += loss.entropy;
        apply_policy_step(i, loss);
      }
      Eigen::MatrixXd states(mb_size, batch.states.cols());
      std::vector<double> targets;
      for (Eigen::Index r = 0; r < mb_size; ++r) {
        states.row(r) = batch.states.row(idx[static_cast<std::size_t>(r)]);
        targets.push_back(adv.value_targets[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])]);
      }
      CriticLoss closs = critic_loss(state_.critic, states, targets);
      m.value_loss += closs.loss;
      apply_critic_step(closs);
      ++updates;
    }
  }
  m.policy_loss /= static_cast<double>(updates * num_agents_);
  m.value_loss /= static_cast<double>(updates);
  for (double& e : m.entropy) e /= static_cast<double>(updates);
  return m;
}

IterationMetrics Trainer::a2c_update(const RolloutBatch& batch) {
  const AdvantageBatch adv = advantages(batch);
  IterationMetrics m = finish_metrics(batch, adv);
  std::vector<Eigen::Index> all(batch.size());
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  for (int i = 0; i < num_agents_; ++i) {
    const PolicyMinibatch mb = policy_minibatch(batch, i, all, adv.shaped_adv);
    const auto& agent = state_.agents[static_cast<std::size_t>(i)];
    PolicyLoss loss = a2c_policy_loss(agent.policy, agent.log_std, mb, cfg_.entropy_coef);
    m.policy_loss += loss.loss / num_agents_;
    m.entropy[static_cast<std::size_t>(i)] = loss.entropy;
    apply_policy_step(i, loss);
  }
  CriticLoss closs = critic_loss(state_.critic, batch.states, adv.value_targets);
  m.value_loss = closs.loss;
  apply_critic_step(closs);
  return m;
}

IterationMetrics Trainer::train_iteration() {
  const RolloutBatch batch = collect_rollout();
  IterationMetrics m = algorithm_ == Algorithm::kPpo ? ppo_update(batch) : a2c_update(batch);
  m.iteration = ++state_.iteration;
  return m;
}

EvalResult Trainer::evaluate(Environment& env, int episodes, bool greedy, std::uint64_t seed) const {
  if (episodes <= 0) throw std::invalid_argument("evaluate needs at least one episode");
  Rng rng = make_rng(seed, 0xe7a1);
  EvalResult r;
  r.max_return = -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Eigen::VectorXd obs = env.reset();
    double ret = 0.0;
    while (!env.done()) {
      const Transition t = env.step(act(obs, rng, greedy));
      ret += t.reward;
      obs = t.next_state;
    }
    total += ret;
    r.max_return = std::max(r.max_return, ret);
  }
  r.mean_return = total / episodes;
  return r;
}

// --- checkpoints ------------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'O', 'M', 'R', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw std::runtime_error("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

void require_shape(const ParamSet& loaded, const ParamSet& current, const char* what) {
  if (loaded.layer_sizes != current.layer_sizes) {
    throw std::runtime_error(std::string("checkpoint ") + what + " shape does not match the configuration");
  }
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(num_agents_));
  for (const auto& a : state_.agents) {
    out += serialize(a.policy);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.log_std.size()));
    for (Eigen::Index k = 0; k < a.log_std.size(); ++k) put<double>(out, a.log_std[k]);
  }
  out += serialize(state_.critic);
  put<std::int64_t>(out, state_.iteration);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void Trainer::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path);
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < sizeof(kCheckpointMagic) || std::memcmp(in.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw std::runtime_error(path + " is not a checkpoint");
  }
  std::size_t off = sizeof(kCheckpointMagic);
  if (take<std::uint32_t>(in, off) != static_cast<std::uint32_t>(num_agents_)) {
    throw std::runtime_error("checkpoint agent count does not match the environment");
  }
  TrainerState next = state_;
  for (auto& a : next.agents) {
    ParamSet p;
    off = deserialize_from(in, off, p);
    require_shape(p, a.policy, "policy");
    a.policy = std::move(p);
    const auto n = take<std::uint32_t>(in, off);
    if (n != static_cast<std::uint32_t>(a.log_std.size())) throw std::runtime_error("checkpoint log_std size mismatch");
    for (Eigen::Index k = 0; k < a.log_std.size(); ++k) a.log_std[k] = take<double>(in, off);
  }
  ParamSet critic;
  off = deserialize_from(in, off, critic);
  require_shape(critic, next.critic, "critic");
  next.critic = std::move(critic);
  next.iteration = take<std::int64_t>(in, off);
  if (off != in.size()) throw std::runtime_error("checkpoint has trailing bytes");
  state_ = std::move(next);
}

}  // namespace optimarl
