#include "optimarl/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace optimarl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string short_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 5e-10 ? 0.0 : v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

// Key/value pairs of one section plus typed accessors that report the
// offending line on bad values.
class Section {
 public:
  explicit Section(std::string name) : name_(std::move(name)) {}

  void add(const std::string& key, const std::string& value, int line) {
    if (entries_.count(key)) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "' in [" + name_ + "]");
    }
    entries_[key] = {value, line, false};
  }

  bool get(const std::string& key, std::string& out) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    it->second.used = true;
    out = it->second.value;
    return true;
  }

  void get(const std::string& key, double& out) {
    std::string v;
    if (get(key, v)) out = to_double(key, v);
  }

  template <typename Int>
  void get_int(const std::string& key, Int& out) {
    std::string v;
    if (!get(key, v)) return;
    out = static_cast<Int>(to_int(key, v));
  }

  void get(const std::string& key, bool& out) {
    std::string v;
    if (!get(key, v)) return;
    if (v == "true" || v == "yes" || v == "1") {
      out = true;
    } else if (v == "false" || v == "no" || v == "0") {
      out = false;
    } else {
      fail(key, "expected true or false, got '" + v + "'");
    }
  }

  std::vector<double> get_doubles(const std::string& key, std::size_t count, std::vector<double> fallback) {
    std::string v;
    if (!get(key, v)) return fallback;
    std::vector<double> out;
    for (const auto& w : split_list(v)) out.push_back(to_double(key, w));
    if (out.size() != count) fail(key, "expected " + std::to_string(count) + " numbers");
    return out;
  }

  template <typename Int>
  bool get_ints(const std::string& key, std::vector<Int>& out) {
    std::string v;
    if (!get(key, v)) return false;
    out.clear();
    for (const auto& w : split_list(v)) out.push_back(static_cast<Int>(to_int(key, w)));
    if (out.empty()) fail(key, "expected at least one integer");
    return true;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_of(key)) + ": " + key + ": " + what);
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) {
        throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

 private:
  double to_double(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(key, "expected a number, got '" + v + "'");
  }

  long long to_int(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const long long i = std::stoll(v, &pos);
      if (pos == v.size()) return i;
    } catch (const std::exception&) {
    }
    fail(key, "expected an integer, got '" + v + "'");
  }

  std::string name_;
  std::map<std::string, Entry> entries_;
};

MatrixGameSpec matrix_spec_for(const std::string& kind, double k) {
  if (kind == "climbing") return climbing_game();
  if (kind == "penalty") return penalty_game(k);
  MatrixGameSpec spec;
  spec.payoff = climbing_game().payoff;
  return spec;
}

void parse_env(Section& sec, ExperimentConfig& cfg) {
  sec.get("kind", cfg.env_kind);
  const std::string& kind = cfg.env_kind;
  if (kind == "climbing" || kind == "penalty" || kind == "matrix") {
    if (kind == "penalty") sec.get("penalty_k", cfg.penalty_k);
    MatrixGameSpec spec = matrix_spec_for(kind, cfg.penalty_k);
    sec.get_int("episode_length", spec.episode_length);
    if (kind == "matrix") {
      std::vector<double> flat;
      for (const auto& row : spec.payoff) flat.insert(flat.end(), row.begin(), row.end());
      flat = sec.get_doubles("payoff", 9, flat);
      for (int i = 0; i < 9; ++i) spec.payoff[static_cast<std::size_t>(i / 3)][static_cast<std::size_t>(i % 3)] = flat[static_cast<std::size_t>(i)];
      sec.get("name", spec.name);
    }
    cfg.env = spec;
  } else if (kind == "pushbox") {
    PushBoxConfig pb;
    sec.get_int("grid_width", pb.grid_width);
    sec.get_int("grid_height", pb.grid_height);
    sec.get_int("episode_length", pb.episode_length);
    sec.get("success_reward", pb.success_reward);
    sec.get("uncoordinated_push_penalty", pb.uncoordinated_push_penalty);
    sec.get_int("goal_row", pb.goal_row);
    cfg.env = pb;
  } else if (kind == "quadratics") {
    QuadraticsConfig q;
    for (int i = 0; i < 2; ++i) {
      const std::string tag = i == 0 ? "global_" : "local_";
      const auto c = sec.get_doubles(tag + "center", 2, {q.centers[static_cast<std::size_t>(i)][0], q.centers[static_cast<std::size_t>(i)][1]});
      q.centers[static_cast<std::size_t>(i)] = Eigen::Vector2d(c[0], c[1]);
      sec.get(tag + "peak", q.peak_values[static_cast<std::size_t>(i)]);
      sec.get(tag + "width", q.widths[static_cast<std::size_t>(i)]);
    }
    sec.get("action_bound", q.action_bound);
    sec.get_int("episode_length", q.episode_length);
    cfg.env = q;
  } else {
    sec.fail("kind", "unknown environment kind '" + kind + "' (climbing, penalty, matrix, pushbox, quadratics)");
  }
  try {
    std::visit([](const auto& s) { validate(s); }, cfg.env);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[env]: ") + e.what());
  }
}

void parse_ppo(Section& sec, ExperimentConfig& cfg) {
  PPOConfig& p = cfg.ppo;
  p = default_ppo_config(env_family(cfg));
  sec.get("clip_eps", p.clip_eps);
  sec.get("eta", p.eta);
  std::string s;
  if (sec.get("shaping", s)) {
    if (s == "leaky_relu") {
      p.shaping = Shaping::kLeakyRelu;
    } else if (s == "none") {
      p.shaping = Shaping::kNone;
    } else {
      sec.fail("shaping", "expected leaky_relu or none");
    }
  }
  if (sec.get("scale_mode", s)) {
    if (s == "none") {
      p.scale_mode = ScaleMode::kNone;
    } else if (s == "std") {
      p.scale_mode = ScaleMode::kStdOnly;
    } else {
      sec.fail("scale_mode", "expected none or std");
    }
  }
  sec.get("policy_lr", p.policy_lr);
  sec.get("critic_lr", p.critic_lr);
  sec.get_int("rollout_threads", p.rollout_threads);
  sec.get_int("steps_per_thread", p.steps_per_thread);
  sec.get_int("ppo_epochs", p.ppo_epochs);
  sec.get_int("num_minibatch", p.num_minibatch);
  sec.get("entropy_coef", p.entropy_coef);
  sec.get("max_grad_norm", p.max_grad_norm);
  sec.get("gamma", p.gamma);
  sec.get("lam", p.lam);
  sec.get_ints("hidden_sizes", p.hidden_sizes);
  sec.get("log_std_init", p.log_std_init);
  try {
    validate(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[learner]: ") + e.what());
  }
}

void parse_hyst(Section& sec, ExperimentConfig& cfg) {
  HystQConfig& h = cfg.hyst;
  sec.get("alpha_pos", h.alpha_pos);
  sec.get("alpha_neg_ratio", h.alpha_neg_ratio);
  sec.get("gamma", h.gamma);
  sec.get("epsilon_start", h.epsilon.start);
  sec.get("epsilon_end", h.epsilon.end);
  sec.get_int("epsilon_decay_steps", h.epsilon.decay_steps);
  try {
    validate(h);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[learner]: ") + e.what());
  }
}

void parse_dynamics(Section& sec, ExperimentConfig& cfg) {
  DynamicsConfig& d = cfg.dynamics;
  sec.get("temperature", d.temperature);
  sec.get_int("steps", d.steps);
  sec.get("optimistic", d.optimistic);
  std::string s;
  if (sec.get("baseline", s)) {
    if (s == "zero") {
      d.baseline = OptimisticBaseline::kZero;
    } else if (s == "joint_value") {
      d.baseline = OptimisticBaseline::kJointValue;
    } else {
      sec.fail("baseline", "expected zero or joint_value");
    }
  }
  if (!(d.temperature > 0.0)) sec.fail("temperature", "must be positive");
  if (d.steps < 0) sec.fail("steps", "must be nonnegative");
}

std::string task_label(const ExperimentConfig& cfg) {
  if (cfg.env_kind == "climbing") return "Climbing";
  if (cfg.env_kind == "penalty") return "Penalty k=" + short_num(cfg.penalty_k);
  if (cfg.env_kind == "pushbox") return "Push-Box";
  if (cfg.env_kind == "quadratics") return "Quadratics";
  return std::get<MatrixGameSpec>(cfg.env).name;
}

std::string column_label(const ExperimentConfig& cfg) {
  switch (cfg.algorithm) {
    case AlgoKind::kOptiMappo:
    case AlgoKind::kOptiMaa2c: {
      const std::string base = cfg.algorithm == AlgoKind::kOptiMappo ? "MAPPO" : "MAA2C";
      if (cfg.ppo.shaping == Shaping::kNone || cfg.ppo.eta == 1.0) return base;
      if (cfg.ppo.eta == 0.0) return "Opti" + base;
      return "Opti" + base + "(eta=" + short_num(cfg.ppo.eta) + ")";
    }
    case AlgoKind::kHysteretic:
      return "HystQ(ratio=" + short_num(cfg.hyst.alpha_neg_ratio) + ")";
    case AlgoKind::kDynamics:
      return cfg.dynamics.optimistic ? "Dynamics(optimistic)" : "Dynamics";
  }
  return "";
}

bool converged(double value, double target) { return std::abs(value - target) <= 1e-6; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

SeedSummary run_policy_seed(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  auto env = make_env(env_family(cfg), cfg.env, seed);
  PPOConfig pc = cfg.ppo;
  pc.seed = seed;
  Trainer trainer(*env, pc, cfg.algorithm == AlgoKind::kOptiMaa2c ? Algorithm::kA2c : Algorithm::kPpo);
  auto eval_env = env->clone();

  std::ofstream metrics(dir / "metrics.csv");
  std::ofstream evals(dir / "eval.csv");
  if (!metrics || !evals) throw std::runtime_error("cannot write metrics under " + dir.string());
  metrics << std::setprecision(12);
  evals << std::setprecision(12);
  metrics << "iteration,env_steps,mean_return,max_return,policy_loss,value_loss";
  for (int i = 0; i < env->num_agents(); ++i) metrics << ",entropy_agent_" << i;
  metrics << ",frac_adv_clipped,mean_raw_adv\n";
  evals << "iteration,env_steps,greedy_mean_return,greedy_max_return\n";

  SeedSummary ss;
  ss.seed = seed;
  ss.final_mean_return = std::numeric_limits<double>::quiet_NaN();
  ss.max_eval_return = -std::numeric_limits<double>::infinity();
  EvalResult last{};
  bool evaluated_last = false;
  auto evaluate = [&](std::int64_t it) {
    last = trainer.evaluate(*eval_env, cfg.eval_episodes, true, seed);
    ss.max_eval_return = std::max(ss.max_eval_return, last.max_return);
    evals << it << ',' << trainer.env_steps() << ',' << last.mean_return << ',' << last.max_return << '\n';
  };

  for (int it = 1; it <= cfg.iterations; ++it) {
    const IterationMetrics m = trainer.train_iteration();
    metrics << m.iteration << ',' << m.env_steps << ',' << m.mean_return << ',' << m.max_return << ','
            << m.policy_loss << ',' << m.value_loss;
    for (double h : m.entropy) metrics << ',' << h;
    metrics << ',' << m.frac_adv_clipped << ',' << m.mean_raw_adv << '\n';
    ss.final_mean_return = m.mean_return;
    evaluated_last = it % cfg.eval_every == 0;
    if (evaluated_last) evaluate(it);
  }
  if (!evaluated_last) evaluate(cfg.iterations);

  trainer.save_checkpoint((dir / "checkpoint.bin").string());
  ss.final_greedy_return = last.mean_return;
  ss.greedy_per_step = last.mean_return / env->episode_length();
  ss.success = converged(last.mean_return, env->optimal_return());
  return ss;
}

SeedSummary run_hysteretic_seed(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  auto env = make_env(env_family(cfg), cfg.env, seed);
  HystQConfig hc = cfg.hyst;
  hc.episodes = cfg.iterations;
  hc.eval_every = cfg.eval_every;
  hc.seed = seed;
  const HystQResult res = hq_train(*env, hc);

  std::ofstream metrics(dir / "metrics.csv");
  if (!metrics) throw std::runtime_error("cannot write metrics under " + dir.string());
  metrics << std::setprecision(12) << "iteration,env_steps,mean_return,max_return,mean_q\n";
  SeedSummary ss;
  ss.seed = seed;
  ss.max_eval_return = -std::numeric_limits<double>::infinity();
  for (const auto& p : res.curve) {
    metrics << p.episode << ',' << p.env_steps << ',' << p.greedy_return << ',' << p.greedy_return << ','
            << p.mean_q << '\n';
    ss.max_eval_return = std::max(ss.max_eval_return, p.greedy_return);
  }
  for (std::size_t i = 0; i < res.tables.size(); ++i) {
    std::ofstream q(dir / ("q_agent_" + std::to_string(i) + ".txt"));
    dump_qtable(q, res.tables[i]);
  }
  const double ret = res.curve.back().greedy_return;
  ss.final_mean_return = ret;
  ss.final_greedy_return = ret;
  ss.greedy_per_step = ret / env->episode_length();
  ss.success = converged(ret, env->optimal_return());
  return ss;
}

SeedSummary run_dynamics_once(const ExperimentConfig& cfg, const fs::path& out) {
  const auto& spec = std::get<MatrixGameSpec>(cfg.env);
  const Eigen::MatrixXd payoff = payoff_matrix(spec.payoff);
  const auto traj = run_dynamics(payoff, cfg.dynamics);
  std::ofstream csv(out / "trajectory.csv");
  if (!csv) throw std::runtime_error("cannot write " + (out / "trajectory.csv").string());
  write_trajectory_csv(csv, traj);
  SeedSummary ss;
  ss.seed = cfg.seeds.front();
  const double g = greedy_joint_payoff(traj.back(), payoff);
  ss.final_mean_return = ss.final_greedy_return = ss.max_eval_return = ss.greedy_per_step = g;
  ss.success = converged(g, payoff.maxCoeff());
  return ss;
}

json seed_json(const SeedSummary& s) {
  return {{"seed", s.seed},
          {"final_mean_return", s.final_mean_return},
          {"max_eval_return", s.max_eval_return},
          {"final_greedy_return", s.final_greedy_return},
          {"greedy_per_step", s.greedy_per_step},
          {"success", s.success},
          {"error", s.error}};
}

double number_or_nan(const json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string to_string(AlgoKind kind) {
  switch (kind) {
    case AlgoKind::kOptiMappo: return "optimappo";
    case AlgoKind::kOptiMaa2c: return "optimaa2c";
    case AlgoKind::kHysteretic: return "hysteretic_q";
    case AlgoKind::kDynamics: return "dynamics";
  }
  return "";
}

AlgoKind parse_algorithm(const std::string& name) {
  for (AlgoKind k : {AlgoKind::kOptiMappo, AlgoKind::kOptiMaa2c, AlgoKind::kHysteretic, AlgoKind::kDynamics}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown algorithm '" + name + "' (optimappo, optimaa2c, hysteretic_q, dynamics)");
}

std::string env_family(const ExperimentConfig& cfg) {
  if (cfg.env_kind == "pushbox" || cfg.env_kind == "quadratics") return cfg.env_kind;
  return "matrix";
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, Section> sections;
  for (const char* name : {"experiment", "env", "learner"}) sections.emplace(name, Section(name));
  Section* current = nullptr;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    const std::string where = "line " + std::to_string(line) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + "malformed section header '" + s + "'");
      auto it = sections.find(trim(s.substr(1, s.size() - 2)));
      if (it == sections.end()) throw ConfigError(where + "unknown section " + s);
      current = &it->second;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + s + "'");
    if (!current) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(where + "empty key");
    current->add(key, trim(s.substr(eq + 1)), line);
  }

  ExperimentConfig cfg;
  Section& ex = sections.at("experiment");
  std::string algo;
  if (ex.get("algorithm", algo)) {
    try {
      cfg.algorithm = parse_algorithm(algo);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(ex.line_of("algorithm")) + ": " + e.what());
    }
  }
  ex.get_ints("seeds", cfg.seeds);
  ex.get_int("iterations", cfg.iterations);
  ex.get_int("eval_every", cfg.eval_every);
  ex.get_int("eval_episodes", cfg.eval_episodes);
  ex.get("output_dir", cfg.output_dir);
  if (cfg.iterations < 0) ex.fail("iterations", "must be nonnegative");
  if (cfg.eval_every <= 0) ex.fail("eval_every", "must be positive");
  if (cfg.eval_episodes <= 0) ex.fail("eval_episodes", "must be positive");
  if (cfg.output_dir.empty()) ex.fail("output_dir", "must not be empty");

  parse_env(sections.at("env"), cfg);

  Section& learner = sections.at("learner");
  const std::string family = env_family(cfg);
  switch (cfg.algorithm) {
    case AlgoKind::kOptiMappo:
    case AlgoKind::kOptiMaa2c:
      parse_ppo(learner, cfg);
      break;
    case AlgoKind::kHysteretic:
      if (family == "quadratics") throw ConfigError("hysteretic_q needs a discrete environment, not quadratics");
      parse_hyst(learner, cfg);
      break;
    case AlgoKind::kDynamics:
      if (family != "matrix") throw ConfigError("dynamics needs a matrix game environment");
      parse_dynamics(learner, cfg);
      break;
  }
  for (const auto& [name, sec] : sections) sec.reject_unused();
  return cfg;
}

ExperimentConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "[experiment]\n";
  o << "algorithm = " << to_string(cfg.algorithm) << '\n';
  o << "seeds =";
  for (auto s : cfg.seeds) o << ' ' << s;
  o << "\niterations = " << cfg.iterations << '\n';
  o << "eval_every = " << cfg.eval_every << '\n';
  o << "eval_episodes = " << cfg.eval_episodes << '\n';
  o << "output_dir = " << cfg.output_dir << '\n';

  o << "\n[env]\nkind = " << cfg.env_kind << '\n';
  if (const auto* m = std::get_if<MatrixGameSpec>(&cfg.env)) {
    if (cfg.env_kind == "penalty") o << "penalty_k = " << num(cfg.penalty_k) << '\n';
    o << "episode_length = " << m->episode_length << '\n';
    if (cfg.env_kind == "matrix") {
      o << "payoff =";
      for (const auto& row : m->payoff)
        for (double v : row) o << ' ' << num(v);
      o << "\nname = " << m->name << '\n';
    }
  } else if (const auto* p = std::get_if<PushBoxConfig>(&cfg.env)) {
    o << "grid_width = " << p->grid_width << '\n';
    o << "grid_height = " << p->grid_height << '\n';
    o << "episode_length = " << p->episode_length << '\n';
    o << "success_reward = " << num(p->success_reward) << '\n';
    o << "uncoordinated_push_penalty = " << num(p->uncoordinated_push_penalty) << '\n';
    o << "goal_row = " << p->goal_row << '\n';
  } else if (const auto* q = std::get_if<QuadraticsConfig>(&cfg.env)) {
    for (std::size_t i = 0; i < 2; ++i) {
      const std::string tag = i == 0 ? "global_" : "local_";
      o << tag << "center = " << num(q->centers[i][0]) << ' ' << num(q->centers[i][1]) << '\n';
      o << tag << "peak = " << num(q->peak_values[i]) << '\n';
      o << tag << "width = " << num(q->widths[i]) << '\n';
    }
    o << "action_bound = " << num(q->action_bound) << '\n';
    o << "episode_length = " << q->episode_length << '\n';
  }

  o << "\n[learner]\n";
  switch (cfg.algorithm) {
    case AlgoKind::kOptiMappo:
    case AlgoKind::kOptiMaa2c: {
      const PPOConfig& p = cfg.ppo;
      o << "eta = " << num(p.eta) << '\n';
      o << "shaping = " << (p.shaping == Shaping::kNone ? "none" : "leaky_relu") << '\n';
      o << "scale_mode = " << (p.scale_mode == ScaleMode::kNone ? "none" : "std") << '\n';
      o << "clip_eps = " << num(p.clip_eps) << '\n';
      o << "policy_lr = " << num(p.policy_lr) << '\n';
      o << "critic_lr = " << num(p.critic_lr) << '\n';
      o << "rollout_threads = " << p.rollout_threads << '\n';
      o << "steps_per_thread = " << p.steps_per_thread << '\n';
      o << "ppo_epochs = " << p.ppo_epochs << '\n';
      o << "num_minibatch = " << p.num_minibatch << '\n';
      o << "entropy_coef = " << num(p.entropy_coef) << '\n';
      o << "max_grad_norm = " << num(p.max_grad_norm) << '\n';
      o << "gamma = " << num(p.gamma) << '\n';
      o << "lam = " << num(p.lam) << '\n';
      o << "hidden_sizes =";
      for (int h : p.hidden_sizes) o << ' ' << h;
      o << "\nlog_std_init = " << num(p.log_std_init) << '\n';
      break;
    }
    case AlgoKind::kHysteretic: {
      const HystQConfig& h = cfg.hyst;
      o << "alpha_pos = " << num(h.alpha_pos) << '\n';
      o << "alpha_neg_ratio = " << num(h.alpha_neg_ratio) << '\n';
      o << "gamma = " << num(h.gamma) << '\n';
      o << "epsilon_start = " << num(h.epsilon.start) << '\n';
      o << "epsilon_end = " << num(h.epsilon.end) << '\n';
      o << "epsilon_decay_steps = " << h.epsilon.decay_steps << '\n';
      break;
    }
    case AlgoKind::kDynamics: {
      const DynamicsConfig& d = cfg.dynamics;
      o << "temperature = " << num(d.temperature) << '\n';
      o << "steps = " << d.steps << '\n';
      o << "optimistic = " << (d.optimistic ? "true" : "false") << '\n';
      o << "baseline = " << (d.baseline == OptimisticBaseline::kZero ? "zero" : "joint_value") << '\n';
      break;
    }
  }
  return o.str();
}

fs::path resolve_output_dir(const ExperimentConfig& cfg) {
  fs::path out(cfg.output_dir);
  const char* root = std::getenv("OPTIMARL_OUTPUT_ROOT");
  if (root && *root && out.is_relative()) out = fs::path(root) / out;
  return out;
}

bool RunSummary::ok() const {
  return std::none_of(seeds.begin(), seeds.end(), [](const SeedSummary& s) { return !s.error.empty(); });
}

void aggregate(RunSummary& summary) {
  std::vector<double> finals;
  int successes = 0;
  for (const auto& s : summary.seeds) {
    if (!s.error.empty()) continue;
    finals.push_back(s.final_greedy_return);
    successes += s.success ? 1 : 0;
  }
  const double n = static_cast<double>(finals.size());
  summary.mean = finals.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : std::accumulate(finals.begin(), finals.end(), 0.0) / n;
  double var = 0.0;
  for (double f : finals) var += (f - summary.mean) * (f - summary.mean);
  summary.std = finals.empty() ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(var / n);
  summary.success_fraction = summary.seeds.empty() ? 0.0 : successes / static_cast<double>(summary.seeds.size());
}

std::string summary_to_json(const RunSummary& s) {
  json seeds = json::array();
  for (const auto& seed : s.seeds) seeds.push_back(seed_json(seed));
  json j = {{"algorithm", s.algorithm},   {"env_kind", s.env_kind}, {"task", s.task},
            {"column", s.column},         {"optimal_return", s.optimal_return},
            {"seeds", seeds},             {"mean", s.mean},         {"std", s.std},
            {"success_fraction", s.success_fraction}};
  return j.dump(2) + "\n";
}

RunSummary summary_from_json(const std::string& text) {
  const json j = json::parse(text);
  RunSummary s;
  s.algorithm = j.at("algorithm").get<std::string>();
  s.env_kind = j.at("env_kind").get<std::string>();
  s.task = j.at("task").get<std::string>();
  s.column = j.at("column").get<std::string>();
  s.optimal_return = number_or_nan(j.at("optimal_return"));
  for (const auto& e : j.at("seeds")) {
    SeedSummary ss;
    ss.seed = e.at("seed").get<std::uint64_t>();
    ss.final_mean_return = number_or_nan(e.at("final_mean_return"));
    ss.max_eval_return = number_or_nan(e.at("max_eval_return"));
    ss.final_greedy_return = number_or_nan(e.at("final_greedy_return"));
    ss.greedy_per_step = number_or_nan(e.at("greedy_per_step"));
    ss.success = e.at("success").get<bool>();
    ss.error = e.at("error").get<std::string>();
    s.seeds.push_back(ss);
  }
  s.mean = number_or_nan(j.at("mean"));
  s.std = number_or_nan(j.at("std"));
  s.success_fraction = number_or_nan(j.at("success_fraction"));
  return s;
}

RunSummary run(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("at least one seed is required");
  const fs::path out = resolve_output_dir(cfg);
  fs::create_directories(out);
  write_text(out / "config.ini", emit_config(cfg));

  RunSummary summary;
  summary.algorithm = to_string(cfg.algorithm);
  summary.env_kind = cfg.env_kind;
  summary.task = task_label(cfg);
  summary.column = column_label(cfg);

  if (cfg.algorithm == AlgoKind::kDynamics) {
    const auto& spec = std::get<MatrixGameSpec>(cfg.env);
    summary.optimal_return = payoff_matrix(spec.payoff).maxCoeff();
    try {
      summary.seeds.push_back(run_dynamics_once(cfg, out));
    } catch (const std::exception& e) {
      SeedSummary failed;
      failed.error = e.what();
      summary.seeds.push_back(failed);
    }
  } else {
    summary.optimal_return = make_env(env_family(cfg), cfg.env, 0)->optimal_return();
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      const std::uint64_t seed = cfg.seeds[i];
      const fs::path dir = out / ("seed_" + std::to_string(seed));
      SeedSummary ss;
      try {
        fs::create_directories(dir);
        ss = cfg.algorithm == AlgoKind::kHysteretic ? run_hysteretic_seed(cfg, seed, dir)
                                                    : run_policy_seed(cfg, seed, dir);
      } catch (const std::exception& e) {
        ss = SeedSummary{};
        ss.seed = seed;
        ss.final_mean_return = ss.max_eval_return = ss.final_greedy_return = ss.greedy_per_step =
            std::numeric_limits<double>::quiet_NaN();
        ss.error = "seed index " + std::to_string(i) + " (seed " + std::to_string(seed) + "): " + e.what();
      }
      summary.seeds.push_back(ss);
    }
  }
  aggregate(summary);
  write_text(out / "summary.json", summary_to_json(summary));
  return summary;
}

EvalResult evaluate_checkpoint(const ExperimentConfig& cfg, const fs::path& checkpoint) {
  if (cfg.algorithm != AlgoKind::kOptiMappo && cfg.algorithm != AlgoKind::kOptiMaa2c) {
    throw ConfigError("eval needs an optimappo or optimaa2c config");
  }
  auto env = make_env(env_family(cfg), cfg.env, cfg.seeds.front());
  PPOConfig pc = cfg.ppo;
  pc.seed = cfg.seeds.front();
  Trainer trainer(*env, pc, cfg.algorithm == AlgoKind::kOptiMaa2c ? Algorithm::kA2c : Algorithm::kPpo);
  trainer.load_checkpoint(checkpoint.string());
  return trainer.evaluate(*env, cfg.eval_episodes, true, cfg.seeds.front());
}

SummaryTable summarize(const std::vector<fs::path>& run_dirs) {
  if (run_dirs.empty()) throw std::invalid_argument("summarize needs at least one run directory");
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::map<std::pair<std::string, std::string>, std::string> cells;
  SummaryTable table;
  auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };

  std::vector<std::string> broken;
  for (const auto& dir : run_dirs) {
    try {
      std::ifstream in(dir / "summary.json");
      if (!in) throw std::runtime_error("missing summary.json");
      std::stringstream ss;
      ss << in.rdbuf();
      const RunSummary s = summary_from_json(ss.str());
      add_unique(rows, s.task);
      add_unique(cols, s.column);
      const bool all_failed = std::all_of(s.seeds.begin(), s.seeds.end(), [](const SeedSummary& x) { return !x.error.empty(); });
      cells[{s.task, s.column}] = all_failed ? "ERR" : short_num(s.mean) + (s.ok() ? "" : "*");
    } catch (const std::exception& e) {
      table.errors.push_back(dir.string() + ": " + e.what());
      broken.push_back(dir.string());
    }
  }
  if (cols.empty()) cols.push_back("run");
  for (const auto& b : broken) {
    add_unique(rows, b);
    for (const auto& c : cols) cells[{b, c}] = "ERR";
  }

  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Task"});
  grid.back().insert(grid.back().end(), cols.begin(), cols.end());
  for (const auto& r : rows) {
    std::vector<std::string> line{r};
    for (const auto& c : cols) {
      auto it = cells.find({r, c});
      line.push_back(it == cells.end() ? "-" : it->second);
    }
    grid.push_back(line);
  }

  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto& line : grid)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::ostringstream text, csv;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    std::string row;
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      const std::string& cell = grid[r][i];
      if (i) row += " | ";
      row += cell + std::string(width[i] - cell.size(), ' ');
      csv << (i ? "," : "") << csv_field(cell);
    }
    text << trim(row) << '\n';
    csv << '\n';
    if (r == 0) {
      std::string rule;
      for (std::size_t i = 0; i < width.size(); ++i) rule += (i ? "-+-" : "") + std::string(width[i], '-');
      text << rule << '\n';
    }
  }
  if (!table.errors.empty()) {
    text << "\nunreadable runs:\n";
    for (const auto& e : table.errors) text << "  " << e << '\n';
  }
  table.text = text.str();
  table.csv = csv.str();
  return table;
}

}  // namespace optimarl
