#include "optimarl/approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace optimarl {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6f6d726cU};
  return Rng(seq);
}

// --- ParamSet ---------------------------------------------------------------

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  z.layer_sizes = layer_sizes;
  z.activation = activation;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

bool ParamSet::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const Layer& l) { return l.weight.allFinite() && l.bias.allFinite(); });
}

Eigen::VectorXd ParamSet::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  for (const auto& l : layers) {
    // Row-major weights to match the serialized layout.
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat[o++] = l.weight(r, c);
    flat.segment(o, l.bias.size()) = l.bias;
    o += l.bias.size();
  }
  return flat;
}

void ParamSet::assign_flat(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw std::invalid_argument("flat parameter vector has wrong length");
  }
  Eigen::Index o = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[o++];
    l.bias = flat.segment(o, l.bias.size());
    o += l.bias.size();
  }
  ++version;
}

ParamSet& ParamSet::operator+=(const ParamSet& other) {
  if (other.layer_sizes != layer_sizes) throw std::invalid_argument("ParamSet shape mismatch in +=");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

ParamSet& ParamSet::operator*=(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
  return *this;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.layer_sizes != b.layer_sizes || a.activation != b.activation) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight != b.layers[i].weight || a.layers[i].bias != b.layers[i].bias) return false;
  }
  return true;
}

double global_norm(const std::vector<const ParamSet*>& grads,
                   const std::vector<const Eigen::VectorXd*>& extra) {
  double sq = 0.0;
  for (const auto* g : grads)
    for (const auto& l : g->layers) sq += l.weight.squaredNorm() + l.bias.squaredNorm();
  for (const auto* v : extra) sq += v->squaredNorm();
  return std::sqrt(sq);
}

// --- init / forward / backward ---------------------------------------------

namespace {

Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool tall = rows >= cols;
  const int r = tall ? rows : cols;
  const int c = tall ? cols : rows;
  Eigen::MatrixXd g(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::MatrixXd rmat = qr.matrixQR().topLeftCorner(c, c);
  for (int j = 0; j < c; ++j) {
    if (rmat(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return gain * (tall ? q : Eigen::MatrixXd(q.transpose()));
}

void apply_activation(Eigen::MatrixXd& z, Activation act) {
  if (act == Activation::kTanh) {
    z = z.array().tanh().matrix();
  } else {
    z = z.cwiseMax(0.0);
  }
}

}  // namespace

ParamSet mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed, double output_gain,
                  Activation activation) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("mlp_init needs at least 2 layer sizes");
  for (int s : layer_sizes) {
    if (s <= 0) throw std::invalid_argument("mlp_init layer sizes must be positive");
  }
  Rng rng = make_rng(seed, 0x1417);
  ParamSet p;
  p.layer_sizes = layer_sizes;
  p.activation = activation;
  const std::size_t n = layer_sizes.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double gain = (i + 1 == n) ? output_gain : std::sqrt(2.0);
    p.layers.push_back({orthogonal(layer_sizes[i + 1], layer_sizes[i], gain, rng),
                        Eigen::VectorXd::Zero(layer_sizes[i + 1])});
  }
  return p;
}

Eigen::MatrixXd forward(const ParamSet& params, const Eigen::MatrixXd& input, ForwardCache* cache) {
  if (params.layers.empty()) throw std::invalid_argument("forward on empty ParamSet");
  if (input.cols() != params.layer_sizes.front()) {
    throw std::invalid_argument("forward: input width " + std::to_string(input.cols()) +
                                " != layer_sizes[0] " + std::to_string(params.layer_sizes.front()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(input);
    cache->layer_sizes = params.layer_sizes;
    cache->version = params.version;
  }
  Eigen::MatrixXd x = input;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = x * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    if (i + 1 < params.layers.size()) apply_activation(z, params.activation);
    if (cache) cache->activations.push_back(z);
    x = std::move(z);
  }
  return x;
}

ParamSet backward(const ParamSet& params, const ForwardCache& cache, const Eigen::MatrixXd& output_grad) {
  if (cache.layer_sizes != params.layer_sizes || cache.version != params.version ||
      cache.activations.size() != params.layers.size() + 1) {
    throw std::invalid_argument("backward: cache does not belong to these parameters");
  }
  const auto& out = cache.activations.back();
  if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
    throw std::invalid_argument("backward: output gradient shape mismatch");
  }
  ParamSet g = params.zeros_like();
  Eigen::MatrixXd delta = output_grad;  // dL/dz for the current layer
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const Eigen::MatrixXd& in = cache.activations[k];
    g.layers[k].weight = delta.transpose() * in;
    g.layers[k].bias = delta.colwise().sum().transpose();
    if (k == 0) break;
    Eigen::MatrixXd upstream = delta * params.layers[k].weight;
    if (params.activation == Activation::kTanh) {
      delta = upstream.array() * (1.0 - in.array().square());
    } else {
      delta = upstream.array() * (in.array() > 0.0).cast<double>();
    }
  }
  return g;
}

// --- Adam -------------------------------------------------------------------

OptState OptState::for_params(const ParamSet& params, double lr) {
  return for_size(static_cast<Eigen::Index>(params.parameter_count()), lr);
}

OptState OptState::for_size(Eigen::Index n, double lr) {
  OptState s;
  s.moments = {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  s.lr = lr;
  return s;
}

void adam_step(OptState& opt, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (grads.size() != params.size() || opt.moments.first.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) throw std::domain_error("adam_step: non-finite gradient");
  ++opt.step_count;
  auto& m = opt.moments.first;
  auto& v = opt.moments.second;
  m = opt.beta1 * m + (1.0 - opt.beta1) * grads;
  v = opt.beta2 * v + (1.0 - opt.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(opt.step_count);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  params.array() -= opt.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.eps_stability);
}

void adam_step(OptState& opt, ParamSet& params, const ParamSet& grads) {
  if (grads.layer_sizes != params.layer_sizes) throw std::invalid_argument("adam_step: shape mismatch");
  Eigen::VectorXd flat = params.flatten();
  adam_step(opt, flat, grads.flatten());
  params.assign_flat(flat);
}

double clip_global_norm(std::vector<ParamSet*> grads, std::vector<Eigen::VectorXd*> extra, double max_norm) {
  std::vector<const ParamSet*> cg(grads.begin(), grads.end());
  std::vector<const Eigen::VectorXd*> ce(extra.begin(), extra.end());
  const double norm = global_norm(cg, ce);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto* g : grads) *g *= scale;
    for (auto* v : extra) *v *= scale;
  }
  return norm;
}

// --- policy heads -------------------------------------------------------------

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const Eigen::ArrayXd shifted = logits.array() - m;
  return (shifted - std::log(shifted.exp().sum())).matrix();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) { return log_softmax(logits).array().exp().matrix(); }

CategoricalSample categorical_act(const Eigen::VectorXd& logits, Rng& rng, bool greedy) {
  if (logits.size() == 0 || !logits.allFinite()) {
    throw std::domain_error("categorical_act: logits must be non-empty and finite");
  }
  const Eigen::VectorXd logp = log_softmax(logits);
  const Eigen::VectorXd p = logp.array().exp().matrix();
  CategoricalSample s;
  if (greedy) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);  // first maximal index
    s.action = static_cast<int>(best);
  } else {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    double acc = 0.0;
    s.action = static_cast<int>(p.size() - 1);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        s.action = static_cast<int>(i);
        break;
      }
    }
  }
  s.log_prob = logp[s.action];
  s.entropy = -(p.array() * logp.array()).sum();
  return s;
}

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& x) {
  const Eigen::ArrayXd z = (x - mean).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array() - 0.5 * std::log(2.0 * std::numbers::pi)).sum();
}

GaussianSample gaussian_from_noise(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                   const Eigen::VectorXd& noise, double low, double high) {
  if (mean.size() != log_std.size() || noise.size() != mean.size()) {
    throw std::invalid_argument("gaussian: mean/log_std/noise size mismatch");
  }
  if (!mean.allFinite() || !log_std.allFinite()) {
    throw std::domain_error("gaussian_act: mean and log_std must be finite");
  }
  GaussianSample s;
  s.raw = mean + (log_std.array().exp() * noise.array()).matrix();
  s.log_prob = gaussian_log_prob(mean, log_std, s.raw);
  s.action = s.raw.cwiseMax(low).cwiseMin(high);
  return s;
}

GaussianSample gaussian_act(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, Rng& rng,
                            bool greedy, double low, double high) {
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(mean.size());
  if (!greedy) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = normal(rng);
  }
  return gaussian_from_noise(mean, log_std, noise, low, high);
}

// --- gradient check -----------------------------------------------------------

double finite_diff_check(const ParamSet& params, const LossClosure& loss, int probe_count,
                         std::uint64_t seed, double step) {
  ParamSet analytic = params.zeros_like();
  loss(params, &analytic);
  const Eigen::VectorXd grad = analytic.flatten();
  const Eigen::VectorXd base = params.flatten();
  Rng rng = make_rng(seed, 0xfd);
  std::uniform_int_distribution<Eigen::Index> pick(0, base.size() - 1);

  ParamSet probe = params;
  double worst = 0.0;
  for (int k = 0; k < probe_count; ++k) {
    const Eigen::Index i = pick(rng);
    Eigen::VectorXd x = base;
    x[i] = base[i] + step;
    probe.assign_flat(x);
    const double up = loss(probe, nullptr);
    x[i] = base[i] - step;
    probe.assign_flat(x);
    const double down = loss(probe, nullptr);
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
  }
  return worst;
}

// --- serialization ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'O', 'M', 'R', 'L', 'M', 'L', 'P', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw std::runtime_error("parameter blob truncated");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

std::string serialize(const ParamSet& params) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.activation));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.layer_sizes.size()));
  for (int s : params.layer_sizes) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  const Eigen::VectorXd flat = params.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) put<double>(out, flat[i]);
  return out;
}

std::size_t deserialize_from(const std::string& bytes, std::size_t offset, ParamSet& out) {
  if (bytes.size() < offset + sizeof(kMagic) ||
      std::memcmp(bytes.data() + offset, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("parameter blob has bad magic bytes");
  }
  std::size_t off = offset + sizeof(kMagic);
  const auto act = take<std::uint32_t>(bytes, off);
  if (act > 1) throw std::runtime_error("parameter blob has unknown activation");
  const auto n = take<std::uint32_t>(bytes, off);
  if (n < 2 || n > 64) throw std::runtime_error("parameter blob has implausible layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n; ++i) sizes.push_back(static_cast<int>(take<std::uint32_t>(bytes, off)));
  ParamSet p = mlp_init(sizes, 0, 1.0, static_cast<Activation>(act));
  Eigen::VectorXd flat(static_cast<Eigen::Index>(p.parameter_count()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = take<double>(bytes, off);
  p.assign_flat(flat);
  p.version = 0;
  out = std::move(p);
  return off;
}

ParamSet deserialize(const std::string& bytes) {
  ParamSet p;
  if (deserialize_from(bytes, 0, p) != bytes.size()) {
    throw std::runtime_error("parameter blob has trailing bytes");
  }
  return p;
}

void save_params(const ParamSet& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string blob = serialize(params);
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

ParamSet load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(blob);
}

}  // namespace optimarl
