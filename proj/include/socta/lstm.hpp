#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socta/linalg.hpp"

namespace socta {

/// Layer layout written as in the benchmark tables: `L(n1[,n2...])N(m)`.
/// LSTM layers with n1, n2, ... cells feed one rectified fully-connected layer
/// of m nodes, followed by a linear scalar output.
struct NetworkSpec {
  std::vector<int> lstm_cells;
  /// 0 means no fully-connected layer: the head reads the last LSTM layer (or the input).
  int dense_nodes = 0;

  static NetworkSpec parse(const std::string& text);
  std::string to_string() const;
  bool operator==(const NetworkSpec&) const = default;
};

/// One input/target sequence: `inputs` is T x D, `targets` has T entries.
struct Sequence {
  Matrix inputs;
  Vector targets;
};

/// Multi-layer LSTM regressor with many-to-many scalar output.
///
/// All trainable parameters live in one flat vector; the per-layer matrices are
/// views into it. Gate order inside each 4H block is input, forget, candidate, output.
class LstmNetwork {
 public:
  LstmNetwork() = default;
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, forget-gate bias 1.
  LstmNetwork(int input_dim, NetworkSpec spec, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  const NetworkSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  /// Input standardisation applied before the first layer.
  Vector input_mean;
  Vector input_inv_std;
  /// prediction = target_offset + target_scale * raw network output
  double target_offset = 0.0;
  double target_scale = 1.0;

  struct LayerView {
    Eigen::Map<Matrix> w;  ///< 4H x D_in
    Eigen::Map<Matrix> u;  ///< 4H x H
    Eigen::Map<Vector> b;  ///< 4H
  };
  struct DenseView {
    Eigen::Map<Matrix> w;
    Eigen::Map<Vector> b;
  };
  LayerView lstm_layer(std::size_t index);
  DenseView dense_layer();
  DenseView head();

  struct ConstLayerView {
    Eigen::Map<const Matrix> w;
    Eigen::Map<const Matrix> u;
    Eigen::Map<const Vector> b;
  };
  struct ConstDenseView {
    Eigen::Map<const Matrix> w;
    Eigen::Map<const Vector> b;
  };
  ConstLayerView lstm_layer(std::size_t index) const;
  ConstDenseView dense_layer() const;
  ConstDenseView head() const;

  /// Marks which parameters are weights (L2-penalised) rather than biases.
  std::vector<bool> weight_mask() const;

  /// Rebuilds the parameter layout and zero-fills parameters.
  void reset_layout(int input_dim, NetworkSpec spec);

 private:
  struct Offsets {
    std::vector<std::size_t> w, u, b;
    std::size_t dense_w = 0, dense_b = 0, head_w = 0, head_b = 0;
    std::size_t total = 0;
  };
  int head_inputs() const;

  int input_dim_ = 0;
  NetworkSpec spec_;
  std::uint64_t seed_ = 0;
  Offsets offsets_;
  Vector params_;
};

/// Runs the network from zero state, carrying state across the whole sequence,
/// with dropout disabled. Returns one prediction per row of `inputs`.
Vector predict(const LstmNetwork& net, const Matrix& inputs);

/// Sample-at-a-time inference with persistent state; identical to `predict`.
class LstmStepper {
 public:
  explicit LstmStepper(const LstmNetwork& net);
  double step(const Vector& input);
  void reset();

 private:
  const LstmNetwork* net_;
  std::vector<Vector> h_;
  std::vector<Vector> c_;
};

struct TrainConfig {
  double learning_rate = 0.01;
  int batch_size = 32;
  int max_epochs = 2000;
  /// Applied to the fully-connected layer only.
  double dropout_rate = 0.2;
  double l2_lambda = 1e-6;
  int early_stop_patience = 50;
  int seq_len = 100;
  std::uint64_t seed = 1;
  /// Fit input standardisation and target scaling from the training data.
  bool fit_scalers = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct TrainResult {
  /// Mean squared error per epoch, in target units (training chunks, dropout active).
  std::vector<double> train_loss;
  /// Full-sequence validation MSE per epoch (empty without validation data).
  std::vector<double> validation_loss;
  int best_epoch = -1;
  int epochs_run = 0;
};

/// Adam on the mean squared error plus l2_lambda · sum(weights²), over chunks
/// of `seq_len` steps started from zero state. Stops when validation loss has
/// not improved for `early_stop_patience` epochs and restores the best weights.
TrainResult train(LstmNetwork& net, const std::vector<Sequence>& data, const TrainConfig& cfg,
                  const std::vector<Sequence>& validation = {});

/// Sum of squared errors of one sequence and its gradient w.r.t. all parameters.
struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};
LossAndGradient loss_gradient(const LstmNetwork& net, const Sequence& seq, double l2_lambda = 0.0);

struct GradientCheck {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  Vector analytic;
  Vector numeric;
};

/// Compares `loss_gradient` with central finite differences of step `epsilon`.
GradientCheck gradient_check(const LstmNetwork& net, const Sequence& seq, double epsilon = 1e-5,
                             double l2_lambda = 0.0);

}  // namespace socta
