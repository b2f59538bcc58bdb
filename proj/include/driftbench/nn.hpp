#ifndef DRIFTBENCH_NN_HPP
#define DRIFTBENCH_NN_HPP

#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace driftbench::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Raised when a loss or parameter becomes NaN/inf during training.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { relu, linear, sigmoid };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);

struct Layer {
  Matrix weights;  // out x in
  Vector bias;     // out
  Activation activation = Activation::linear;

  std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Per-layer parameter gradients, shaped like the network.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
};

/// Activations recorded by a batched forward pass; rows are samples.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input to layer i
  std::vector<Matrix> pre_activation;
  Matrix output;
};

/// Fully connected feed-forward network. Batches are row-major in the
/// sense that each row of an input matrix is one sample.
class Network {
 public:
  Network() = default;

  /// `sizes` lists every layer width including the input; `activations`
  /// has one entry per weight layer. Weights are drawn uniformly from
  /// [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases start at zero.
  Network(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations, Rng& rng);

  explicit Network(std::vector<Layer> layers);

  std::size_t input_size() const;
  std::size_t output_size() const;
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Vector forward(std::span<const double> input) const;
  Matrix forward(const Matrix& inputs) const;
  /// Final-layer values before the output activation.
  Matrix logits(const Matrix& inputs) const;

  ForwardCache forward_cached(const Matrix& inputs) const;

  /// Backpropagates `output_grad`, the loss gradient with respect to the
  /// final layer's pre-activation values. When `input_grad` is non-null it
  /// receives the gradient with respect to the network input.
  Gradients backward(const ForwardCache& cache, const Matrix& output_grad, Matrix* input_grad = nullptr) const;

  /// Gradient with respect to the network input only; parameter gradients
  /// are not formed.
  Matrix input_gradient(const ForwardCache& cache, const Matrix& output_grad) const;

  bool all_finite() const;

  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& doc);

 private:
  void check_chain() const;

  std::vector<Layer> layers_;
};

/// Scalar Adadelta accumulators for a single parameter.
struct AdadeltaScalar {
  double sq_grad = 0.0;
  double sq_delta = 0.0;
};

/// One Adadelta update of a single scalar parameter; returns the new value.
double adadelta_update(double param, double grad, AdadeltaScalar& state, double decay = 0.95, double epsilon = 1e-6);

/// Adadelta optimizer state for a whole network.
class Adadelta {
 public:
  explicit Adadelta(const Network& net, double decay = 0.95, double epsilon = 1e-6);

  /// Applies one update; `grads` is overwritten with the step taken.
  void step(Network& net, Gradients& grads);

  double decay() const { return decay_; }
  double epsilon() const { return epsilon_; }
  const std::vector<Matrix>& sq_grad_weights() const { return sq_grad_w_; }
  const std::vector<Matrix>& sq_delta_weights() const { return sq_delta_w_; }

 private:
  double decay_;
  double epsilon_;
  std::vector<Matrix> sq_grad_w_, sq_delta_w_;
  std::vector<Vector> sq_grad_b_, sq_delta_b_;
};

/// Elementwise derivative of `activation` evaluated at `pre_activation`.
Matrix activation_slope(const Matrix& pre_activation, Activation activation);

struct LossValue {
  double value = 0.0;
  Matrix grad;  // with respect to the final layer's pre-activation values
};

/// Mean squared error over every output element, taken on the network's
/// activated output. `pre_activation` and `activation` let the gradient
/// pass through the output nonlinearity.
LossValue mse_loss(const Matrix& output, const Matrix& pre_activation, Activation activation, const Matrix& targets);

/// Softmax cross-entropy on raw logits, averaged over the batch.
LossValue cross_entropy_loss(const Matrix& logits, std::span<const int> classes);

/// Backprop + Adadelta on one batch with MSE targets. Returns the loss on
/// the pre-update parameters.
double train_step(Network& net, const Matrix& inputs, const Matrix& targets, Adadelta& opt);

/// Backprop + Adadelta on one batch with category targets (softmax
/// cross-entropy on the final logits).
double train_step(Network& net, const Matrix& inputs, std::span<const int> classes, Adadelta& opt);

/// Grows the output layer by one unit. Every layer below the last is left
/// untouched; the last layer is reinitialized at the new width.
Network extend_output_layer(const Network& net, Rng& rng);

Matrix to_matrix(const std::vector<std::vector<double>>& rows);

}  // namespace driftbench::nn

#endif  // DRIFTBENCH_NN_HPP
