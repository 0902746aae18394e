#include "optimarl/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace optimarl {

namespace {

void same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("eta must lie in [0, 1], got " + std::to_string(eta));
  }
}

}  // namespace

std::vector<double> td_errors(std::span<const double> rewards, std::span<const double> values,
                              double bootstrap_value, std::span<const Flag> dones, double gamma) {
  same_length(rewards.size(), values.size(), "td_errors");
  same_length(rewards.size(), dones.size(), "td_errors");
  const std::size_t n = rewards.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = (t + 1 < n) ? values[t + 1] : bootstrap_value;
    const double cont = dones[t] ? 0.0 : 1.0;
    delta[t] = rewards[t] + gamma * next * cont - values[t];
  }
  return delta;
}

std::vector<double> gae(std::span<const double> deltas, double gamma, double lam,
                        std::span<const Flag> dones) {
  same_length(deltas.size(), dones.size(), "gae");
  std::vector<double> adv(deltas.size());
  double running = 0.0;
  for (std::size_t t = deltas.size(); t-- > 0;) {
    const double cont = dones[t] ? 0.0 : 1.0;
    running = deltas[t] + gamma * lam * cont * running;
    adv[t] = running;
  }
  return adv;
}

double leaky_relu(double adv, double eta) { return std::max(eta * adv, adv); }

std::vector<double> scale_advantages(std::span<const double> raw, ScaleMode scale_mode) {
  std::vector<double> out(raw.begin(), raw.end());
  if (scale_mode != ScaleMode::kStdOnly || raw.empty()) return out;
  double mean = 0.0;
  for (double a : raw) mean += a;
  mean /= static_cast<double>(raw.size());
  double var = 0.0;
  for (double a : raw) var += (a - mean) * (a - mean);
  var /= static_cast<double>(raw.size());
  const double scale = 1.0 / std::max(std::sqrt(var), 1e-8);
  for (double& a : out) a *= scale;
  return out;
}

std::vector<double> shape_advantages(std::span<const double> raw, double eta, ScaleMode scale_mode) {
  check_eta(eta);
  std::vector<double> out = scale_advantages(raw, scale_mode);
  for (double& a : out) a = leaky_relu(a, eta);
  return out;
}

std::vector<double> value_targets(std::span<const double> raw, std::span<const double> values) {
  same_length(raw.size(), values.size(), "value_targets");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] + values[i];
  return out;
}

AdvantageBatch compute_advantages(std::span<const double> rewards, std::span<const double> values,
                                  double bootstrap_value, std::span<const Flag> dones,
                                  const AdvantageConfig& cfg) {
  AdvantageBatch b;
  b.td_errors = td_errors(rewards, values, bootstrap_value, dones, cfg.gamma);
  b.raw_adv = gae(b.td_errors, cfg.gamma, cfg.lam, dones);
  b.shaped_adv = shape_advantages(b.raw_adv, cfg.eta, cfg.scale_mode);
  b.value_targets = value_targets(b.raw_adv, values);
  return b;
}

}  // namespace optimarl
