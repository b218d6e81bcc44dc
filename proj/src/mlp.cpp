#include "reactsim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reactsim/errors.hpp"
#include "reactsim/rng.hpp"

namespace reactsim {

namespace {

constexpr double kSquashMargin = 1e-3;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Mlp Mlp::zeros(std::span<const int> sizes) {
  if (sizes.size() < 2) throw DomainError("mlp needs at least an input and an output size");
  Mlp m;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] <= 0 || sizes[i + 1] <= 0) throw DomainError("mlp layer sizes must be positive");
    m.layers.push_back({Eigen::MatrixXd::Zero(sizes[i + 1], sizes[i]), Eigen::VectorXd::Zero(sizes[i + 1])});
  }
  return m;
}

Mlp Mlp::random(std::span<const int> sizes, std::uint64_t seed) {
  Mlp m = zeros(sizes);
  RngStream rng(seed);
  for (DenseLayer& layer : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    }
  }
  return m;
}

void Mlp::validate() const {
  if (layers.empty()) throw DomainError("mlp has no layers");
  if (layers.front().weights.cols() != static_cast<Eigen::Index>(kFeatureCount)) {
    throw DomainError("mlp input width must be " + std::to_string(kFeatureCount));
  }
  if (layers.back().weights.rows() != 2) throw DomainError("mlp output width must be 2");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (l.bias.size() != l.weights.rows()) throw DomainError("mlp layer " + std::to_string(i) + ": bias size mismatch");
    if (i > 0 && l.weights.cols() != layers[i - 1].weights.rows()) {
      throw DomainError("mlp layer " + std::to_string(i) + ": input width does not match previous layer");
    }
    if (!l.weights.allFinite() || !l.bias.allFinite()) {
      throw DomainError("mlp layer " + std::to_string(i) + ": non-finite parameters");
    }
  }
  if (!std::isfinite(phi_max) || !(phi_max > 0.0) || !std::isfinite(v_max) || !(v_max > 0.0)) {
    throw DomainError("mlp output scales must be positive and finite");
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const DenseLayer& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

void Mlp::assign(std::span<const double> parameters) {
  if (parameters.size() != parameter_count()) throw DomainError("mlp parameter count mismatch");
  std::size_t k = 0;
  for (DenseLayer& l : layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = parameters[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = parameters[k++];
  }
}

Eigen::Vector2d mlp_raw(const Mlp& m, const FeatureVector& f) {
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    Eigen::VectorXd z = m.layers[i].weights * a + m.layers[i].bias;
    a = i + 1 < m.layers.size() ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return {a(0), a(1)};
}

Control mlp_forward(const Mlp& m, const FeatureVector& f) {
  m.validate();
  const Eigen::Vector2d raw = mlp_raw(m, f);
  return {m.phi_max * std::tanh(raw(0)), m.v_max * sigmoid(raw(1))};
}

Eigen::Vector2d squash_inverse(const Mlp& m, const Control& c) {
  const double phi_ratio = std::clamp(c.phi / m.phi_max, -1.0 + kSquashMargin, 1.0 - kSquashMargin);
  const double v_ratio = std::clamp(c.v / m.v_max, kSquashMargin, 1.0 - kSquashMargin);
  return {std::atanh(phi_ratio), std::log(v_ratio / (1.0 - v_ratio))};
}

namespace {

struct Dataset {
  Eigen::MatrixXd x;  // kFeatureCount x N
  Eigen::MatrixXd t;  // 2 x N
};

Dataset to_matrices(const Mlp& m, std::span<const TrainingSample> samples) {
  Dataset d{Eigen::MatrixXd(kFeatureCount, static_cast<Eigen::Index>(samples.size())),
            Eigen::MatrixXd(2, static_cast<Eigen::Index>(samples.size()))};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < kFeatureCount; ++k) d.x(static_cast<Eigen::Index>(k), col) = samples[i].features[k];
    d.t.col(col) = squash_inverse(m, samples[i].target);
  }
  return d;
}

// Loss over the columns of x/t; accumulates the gradient into `grad` when non-null.
double forward_backward(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t,
                        std::vector<DenseLayer>* grad) {
  const auto n = static_cast<double>(x.cols());
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(x);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weights * acts.back();
    z.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  const Eigen::MatrixXd diff = acts.back() - t;
  const double loss = diff.squaredNorm() / (2.0 * n);
  if (grad == nullptr) return loss;

  grad->resize(layers.size());
  Eigen::MatrixXd delta = diff / n;
  for (std::size_t i = layers.size(); i-- > 0;) {
    (*grad)[i].weights = delta * acts[i].transpose();
    (*grad)[i].bias = delta.rowwise().sum();
    if (i > 0) {
      delta = (layers[i].weights.transpose() * delta).array() * (1.0 - acts[i].array().square());
    }
  }
  return loss;
}

std::vector<double> flatten_layers(const std::vector<DenseLayer>& layers) {
  Mlp tmp;
  tmp.layers = layers;
  return tmp.flatten();
}

}  // namespace

double mlp_loss(const Mlp& m, std::span<const TrainingSample> samples) {
  m.validate();
  if (samples.empty()) throw DomainError("mlp_loss: empty dataset");
  const Dataset d = to_matrices(m, samples);
  return forward_backward(m.layers, d.x, d.t, nullptr);
}

LossAndGradient mlp_loss_and_gradient(const Mlp& m, std::span<const TrainingSample> samples) {
  m.validate();
  if (samples.empty()) throw DomainError("mlp_loss_and_gradient: empty dataset");
  const Dataset d = to_matrices(m, samples);
  std::vector<DenseLayer> grad;
  LossAndGradient out;
  out.loss = forward_backward(m.layers, d.x, d.t, &grad);
  out.gradient = flatten_layers(grad);
  return out;
}

namespace {

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x, bool enabled) {
    Standardizer s{Eigen::VectorXd::Zero(x.rows()), Eigen::VectorXd::Ones(x.rows())};
    if (!enabled) return s;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double mu = x.row(r).mean();
      const double var = (x.row(r).array() - mu).square().mean();
      // Constant features (the bias input) pass through untouched.
      if (var > 1e-24) {
        s.mean(r) = mu;
        s.scale(r) = std::sqrt(var);
      }
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return ((x.colwise() - mean).array().colwise() / scale.array()).matrix();
  }

  // Network on standardized inputs -> equivalent network on raw inputs.
  Mlp fold(const Mlp& standardized) const {
    Mlp raw = standardized;
    DenseLayer& first = raw.layers.front();
    first.weights = standardized.layers.front().weights * scale.cwiseInverse().asDiagonal();
    first.bias = standardized.layers.front().bias - first.weights * mean;
    return raw;
  }
};

class OptimizerState {
 public:
  OptimizerState(const TrainConfig& cfg, const std::vector<DenseLayer>& shape) : cfg_(cfg) {
    for (const DenseLayer& l : shape) {
      m_.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    }
    v_ = m_;
  }

  void update(std::vector<DenseLayer>& params, const std::vector<DenseLayer>& grad) {
    if (cfg_.optimizer == Optimizer::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i].weights -= cfg_.lr * grad[i].weights;
        params[i].bias -= cfg_.lr * grad[i].bias;
      }
      return;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++step_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      adam(params[i].weights, grad[i].weights, m_[i].weights, v_[i].weights, beta1, beta2, eps, c1, c2);
      adam(params[i].bias, grad[i].bias, m_[i].bias, v_[i].bias, beta1, beta2, eps, c1, c2);
    }
  }

 private:
  template <typename M>
  void adam(M& p, const M& g, M& m, M& v, double b1, double b2, double eps, double c1, double c2) {
    m = b1 * m + (1.0 - b1) * g;
    v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
    p.array() -= cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  TrainConfig cfg_;
  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  long step_ = 0;
};

}  // namespace

TrainResult mlp_train(std::span<const TrainingSample> samples, const TrainConfig& config) {
  if (samples.empty()) throw DomainError("mlp_train: empty dataset");
  if (!(config.lr > 0.0) || config.batch <= 0 || config.epochs < 0) throw DomainError("mlp_train: invalid config");

  std::vector<int> sizes = {static_cast<int>(kFeatureCount)};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(2);
  Mlp model = Mlp::random(sizes, config.seed);
  model.phi_max = config.phi_max;
  model.v_max = config.v_max;

  const Dataset raw = to_matrices(model, samples);
  const Standardizer standardizer = Standardizer::fit(raw.x, config.standardize);
  const Eigen::MatrixXd x = standardizer.apply(raw.x);

  TrainResult result;
  result.initial_loss = forward_backward(standardizer.fold(model).layers, raw.x, raw.t, nullptr);

  OptimizerState opt(config, model.layers);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const RngStream base(config.seed ^ 0x7261696e);  // shuffle stream, separate from init
  std::vector<DenseLayer> grad;
  const auto batch = static_cast<std::size_t>(config.batch);
  Eigen::MatrixXd xb, tb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    RngStream rng = base.fork(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      xb.resize(x.rows(), static_cast<Eigen::Index>(n));
      tb.resize(2, static_cast<Eigen::Index>(n));
      for (std::size_t k = 0; k < n; ++k) {
        xb.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(order[start + k]));
        tb.col(static_cast<Eigen::Index>(k)) = raw.t.col(static_cast<Eigen::Index>(order[start + k]));
      }
      forward_backward(model.layers, xb, tb, &grad);
      opt.update(model.layers, grad);
    }
    result.epoch_loss.push_back(forward_backward(standardizer.fold(model).layers, raw.x, raw.t, nullptr));
  }
  result.model = standardizer.fold(model);
  result.model.validate();
  return result;
}

}  // namespace reactsim
