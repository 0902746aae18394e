#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace optimarl {

// Episode-end marker; std::vector<bool> cannot back a span.
using Flag = std::uint8_t;

enum class ScaleMode { kNone, kStdOnly };

struct AdvantageConfig {
  double gamma = 0.99;
  double lam = 0.95;
  // Leaky-ReLU slope on negative advantages: 0 clips them to zero, 1 is the identity.
  double eta = 0.0;
  ScaleMode scale_mode = ScaleMode::kNone;
};

struct AdvantageBatch {
  std::vector<double> td_errors;
  std::vector<double> raw_adv;
  std::vector<double> shaped_adv;
  std::vector<double> value_targets;
};

// delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t), where V(s_{t+1})
// is values[t + 1] inside the sequence and bootstrap_value after its end.
std::vector<double> td_errors(std::span<const double> rewards, std::span<const double> values,
                              double bootstrap_value, std::span<const Flag> dones, double gamma);

// A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1}.
std::vector<double> gae(std::span<const double> deltas, double gamma, double lam,
                        std::span<const Flag> dones);

double leaky_relu(double adv, double eta);

// kStdOnly divides by the batch standard deviation (floored at 1e-8) and
// never subtracts the mean, so signs are preserved.
std::vector<double> scale_advantages(std::span<const double> raw, ScaleMode scale_mode);

// Elementwise max(eta * A, A). With kStdOnly the raw advantages are first
// divided by their standard deviation (floored at 1e-8); no mean is removed.
std::vector<double> shape_advantages(std::span<const double> raw, double eta, ScaleMode scale_mode);

// Critic regression targets: raw advantage plus the predicted value.
std::vector<double> value_targets(std::span<const double> raw, std::span<const double> values);

// One trajectory segment end to end.
AdvantageBatch compute_advantages(std::span<const double> rewards, std::span<const double> values,
                                  double bootstrap_value, std::span<const Flag> dones,
                                  const AdvantageConfig& cfg);

}  // namespace optimarl
