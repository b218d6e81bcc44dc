#ifndef REACTSIM_MLP_HPP
#define REACTSIM_MLP_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "reactsim/kinematics.hpp"

namespace reactsim {

inline constexpr std::size_t kFeatureCount = 8;

// own speed, lead gap, lead relative speed, lateral offset, heading error, curvature proxy,
// red stop-line distance, bias (always 1).
using FeatureVector = std::array<double, kFeatureCount>;

struct DenseLayer {
  Eigen::MatrixXd weights;  // rows = outputs, cols = inputs
  Eigen::VectorXd bias;
};

// Fully connected network, tanh on hidden layers, identity on the output layer. The two raw
// outputs are squashed into a Control: phi = phi_max*tanh(o0), v = v_max*sigmoid(o1).
struct Mlp {
  std::vector<DenseLayer> layers;
  double phi_max = kDefaultPhiMax;
  double v_max = 15.0;

  static Mlp zeros(std::span<const int> sizes);
  // Glorot-uniform weights, zero biases.
  static Mlp random(std::span<const int> sizes, std::uint64_t seed);

  // Shapes chain, input is kFeatureCount wide, output is 2 wide, everything finite.
  void validate() const;
  std::size_t parameter_count() const;
  // Layer by layer: weights (row-major), then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> parameters);
};

inline const std::array<int, 4> kDefaultLayerSizes = {static_cast<int>(kFeatureCount), 32, 32, 2};

Eigen::Vector2d mlp_raw(const Mlp& m, const FeatureVector& f);
Control mlp_forward(const Mlp& m, const FeatureVector& f);

// Pre-squash targets for a control, with ratios clamped 1e-3 away from the squashing asymptotes.
Eigen::Vector2d squash_inverse(const Mlp& m, const Control& c);

struct TrainingSample {
  FeatureVector features{};
  Control target;
};

// Mean squared error between raw outputs and inverse-squashed targets, averaged over samples
// and both outputs.
double mlp_loss(const Mlp& m, std::span<const TrainingSample> samples);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same order as Mlp::flatten()
};

LossAndGradient mlp_loss_and_gradient(const Mlp& m, std::span<const TrainingSample> samples);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  double lr = 1e-3;
  int batch = 64;
  int epochs = 20;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {32, 32};
  Optimizer optimizer = Optimizer::sgd;
  // Train on standardized features and fold the affine map back into the first layer
  // afterwards. The returned model always consumes raw features.
  bool standardize = true;
  double phi_max = kDefaultPhiMax;
  double v_max = 15.0;
};

struct TrainResult {
  Mlp model;
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // full-dataset loss after each epoch
};

TrainResult mlp_train(std::span<const TrainingSample> samples, const TrainConfig& config);

}  // namespace reactsim

#endif  // REACTSIM_MLP_HPP
