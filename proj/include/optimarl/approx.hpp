#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace optimarl {

using Rng = std::mt19937_64;

// Independent deterministic stream for (seed, stream).
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

enum class Activation : std::uint32_t { kTanh = 0, kRelu = 1 };

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// MLP parameters. The same type doubles as the gradient container.
struct ParamSet {
  std::vector<int> layer_sizes;
  std::vector<Layer> layers;
  Activation activation = Activation::kTanh;
  // Bumped on every in-place update so stale forward caches can be detected.
  std::uint64_t version = 0;

  std::size_t parameter_count() const;
  ParamSet zeros_like() const;
  bool all_finite() const;

  Eigen::VectorXd flatten() const;
  void assign_flat(const Eigen::VectorXd& flat);

  ParamSet& operator+=(const ParamSet& other);
  ParamSet& operator*=(double s);
};

bool operator==(const ParamSet& a, const ParamSet& b);

double global_norm(const std::vector<const ParamSet*>& grads,
                   const std::vector<const Eigen::VectorXd*>& extra = {});

// Hidden layers use the configured activation, the output layer is linear.
// output_gain scales the orthogonal init of the last layer; policies use a
// small gain so the initial distribution is close to uniform.
ParamSet mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed, double output_gain = 1.0,
                  Activation activation = Activation::kTanh);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // [input, hidden..., output]
  std::vector<int> layer_sizes;
  std::uint64_t version = 0;
};

// Rows of `input` are samples.
Eigen::MatrixXd forward(const ParamSet& params, const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);

ParamSet backward(const ParamSet& params, const ForwardCache& cache, const Eigen::MatrixXd& output_grad);

// Adam over a flat buffer; shared by ParamSet and free vectors such as log_std.
struct AdamMoments {
  Eigen::VectorXd first;
  Eigen::VectorXd second;
};

struct OptState {
  AdamMoments moments;
  std::int64_t step_count = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stability = 1e-8;

  static OptState for_params(const ParamSet& params, double lr);
  static OptState for_size(Eigen::Index n, double lr);
};

void adam_step(OptState& opt, ParamSet& params, const ParamSet& grads);
void adam_step(OptState& opt, Eigen::VectorXd& params, const Eigen::VectorXd& grads);

// Scales every gradient in place so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(std::vector<ParamSet*> grads, std::vector<Eigen::VectorXd*> extra, double max_norm);

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct CategoricalSample {
  int action = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
};

CategoricalSample categorical_act(const Eigen::VectorXd& logits, Rng& rng, bool greedy);

struct GaussianSample {
  Eigen::VectorXd raw;     // unclamped sample; log_prob refers to this
  Eigen::VectorXd action;  // clamped to [low, high]
  double log_prob = 0.0;
};

GaussianSample gaussian_act(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, Rng& rng,
                            bool greedy, double low = -std::numeric_limits<double>::infinity(),
                            double high = std::numeric_limits<double>::infinity());

// Reparameterized sample mean + exp(log_std) * noise.
GaussianSample gaussian_from_noise(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                   const Eigen::VectorXd& noise,
                                   double low = -std::numeric_limits<double>::infinity(),
                                   double high = std::numeric_limits<double>::infinity());

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& x);

// Returns the loss and writes the analytic gradient into *grad when non-null.
using LossClosure = std::function<double(const ParamSet& params, ParamSet* grad)>;

// Maximum relative error between analytic and central-difference gradients
// over probe_count randomly chosen coordinates.
double finite_diff_check(const ParamSet& params, const LossClosure& loss, int probe_count,
                         std::uint64_t seed = 0, double step = 1e-5);

// Flat binary layout: "OMRLMLP1", u32 activation, u32 n, u32 layer_sizes[n],
// then per layer the row-major weight followed by the bias, as f64.
std::string serialize(const ParamSet& params);
ParamSet deserialize(const std::string& bytes);
std::size_t deserialize_from(const std::string& bytes, std::size_t offset, ParamSet& out);

void save_params(const ParamSet& params, const std::string& path);
ParamSet load_params(const std::string& path);

}  // namespace optimarl
