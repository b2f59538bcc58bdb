#include "driftbench/nn.hpp"

#include <cmath>
#include <sstream>

namespace driftbench::nn {

namespace {

Matrix activate(const Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::sigmoid:
      return (1.0 + (-z.array()).exp()).inverse().matrix();
    case Activation::linear:
      break;
  }
  return z;
}

Layer make_layer(std::size_t in, std::size_t out, Activation activation, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  Layer layer;
  layer.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      layer.weights(r, c) = uniform(rng);
    }
  }
  layer.bias = Vector::Zero(static_cast<Eigen::Index>(out));
  layer.activation = activation;
  return layer;
}

void check_batch(const Matrix& inputs, std::size_t width) {
  if (static_cast<std::size_t>(inputs.cols()) != width) {
    std::ostringstream msg;
    msg << "input width " << inputs.cols() << " does not match network input size " << width;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

Matrix activation_slope(const Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::sigmoid: {
      const Eigen::ArrayXXd s = (1.0 + (-z.array()).exp()).inverse();
      return (s * (1.0 - s)).matrix();
    }
    case Activation::linear:
      break;
  }
  return Matrix::Ones(z.rows(), z.cols());
}

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::linear:
      break;
  }
  return "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation: " + name);
}

Network::Network(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations, Rng& rng) {
  if (sizes.size() < 2 || activations.size() != sizes.size() - 1) {
    throw std::invalid_argument("network needs at least two layer sizes and one activation per weight layer");
  }
  for (std::size_t width : sizes) {
    if (width == 0) throw std::invalid_argument("layer width must be positive");
  }
  layers_.reserve(activations.size());
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers_.push_back(make_layer(sizes[i], sizes[i + 1], activations[i], rng));
  }
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  check_chain();
}

void Network::check_chain() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    if (layer.bias.size() != layer.weights.rows()) {
      throw std::invalid_argument("bias length does not match layer " + std::to_string(i) + " output width");
    }
    if (i > 0 && layers_[i - 1].outputs() != layer.inputs()) {
      throw std::invalid_argument("layer " + std::to_string(i) + " input width does not chain");
    }
  }
}

std::size_t Network::input_size() const { return layers_.empty() ? 0 : layers_.front().inputs(); }

std::size_t Network::output_size() const { return layers_.empty() ? 0 : layers_.back().outputs(); }

std::size_t Network::parameter_count() const {
  std::size_t count = 0;
  for (const Layer& layer : layers_) {
    count += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return count;
}

Vector Network::forward(std::span<const double> input) const {
  if (input.size() != input_size()) {
    throw std::invalid_argument("input length " + std::to_string(input.size()) + " does not match network input size " +
                                std::to_string(input_size()));
  }
  Matrix row(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = input[i];
  return forward(row).row(0).transpose();
}

Matrix Network::forward(const Matrix& inputs) const {
  check_batch(inputs, input_size());
  Matrix a = inputs;
  for (const Layer& layer : layers_) {
    Matrix z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    a = activate(z, layer.activation);
  }
  return a;
}

Matrix Network::logits(const Matrix& inputs) const {
  check_batch(inputs, input_size());
  Matrix a = inputs;
  Matrix z;
  for (const Layer& layer : layers_) {
    z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    a = activate(z, layer.activation);
  }
  return z;
}

ForwardCache Network::forward_cached(const Matrix& inputs) const {
  check_batch(inputs, input_size());
  ForwardCache cache;
  cache.inputs.reserve(layers_.size());
  cache.pre_activation.reserve(layers_.size());
  Matrix a = inputs;
  for (const Layer& layer : layers_) {
    Matrix z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    cache.inputs.push_back(std::move(a));
    a = activate(z, layer.activation);
    cache.pre_activation.push_back(std::move(z));
  }
  cache.output = std::move(a);
  return cache;
}

Gradients Network::backward(const ForwardCache& cache, const Matrix& output_grad, Matrix* input_grad) const {
  Gradients grads;
  grads.weights.resize(layers_.size());
  grads.bias.resize(layers_.size());
  Matrix delta = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Layer& layer = layers_[i];
    grads.weights[i].noalias() = delta.transpose() * cache.inputs[i];
    grads.bias[i] = delta.colwise().sum().transpose();
    if (i == 0 && input_grad == nullptr) break;
    Matrix upstream = delta * layer.weights;
    if (i == 0) {
      *input_grad = std::move(upstream);
      break;
    }
    delta = upstream.cwiseProduct(activation_slope(cache.pre_activation[i - 1], layers_[i - 1].activation));
  }
  return grads;
}

Matrix Network::input_gradient(const ForwardCache& cache, const Matrix& output_grad) const {
  Matrix delta = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Matrix upstream = delta * layers_[i].weights;
    if (i == 0) return upstream;
    delta = upstream.cwiseProduct(activation_slope(cache.pre_activation[i - 1], layers_[i - 1].activation));
  }
  return delta;
}

bool Network::all_finite() const {
  for (const Layer& layer : layers_) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

nlohmann::json Network::to_json() const {
  nlohmann::json doc;
  std::vector<std::size_t> sizes{input_size()};
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : layers_) {
    sizes.push_back(layer.outputs());
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
    }
    std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back({{"activation", to_string(layer.activation)}, {"weights", weights}, {"bias", bias}});
  }
  doc["sizes"] = sizes;
  doc["layers"] = layers;
  return doc;
}

Network Network::from_json(const nlohmann::json& doc) {
  const auto sizes = doc.at("sizes").get<std::vector<std::size_t>>();
  const auto& layer_docs = doc.at("layers");
  if (sizes.size() != layer_docs.size() + 1) throw std::invalid_argument("network snapshot: sizes/layers mismatch");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < layer_docs.size(); ++i) {
    const auto weights = layer_docs[i].at("weights").get<std::vector<double>>();
    const auto bias = layer_docs[i].at("bias").get<std::vector<double>>();
    const auto rows = static_cast<Eigen::Index>(sizes[i + 1]);
    const auto cols = static_cast<Eigen::Index>(sizes[i]);
    if (weights.size() != static_cast<std::size_t>(rows * cols) || bias.size() != sizes[i + 1]) {
      throw std::invalid_argument("network snapshot: layer " + std::to_string(i) + " has wrong parameter count");
    }
    Layer layer;
    layer.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = weights[static_cast<std::size_t>(r * cols + c)];
    }
    layer.bias = Eigen::Map<const Vector>(bias.data(), rows);
    layer.activation = activation_from_string(layer_docs[i].at("activation").get<std::string>());
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

double adadelta_update(double param, double grad, AdadeltaScalar& state, double decay, double epsilon) {
  state.sq_grad = decay * state.sq_grad + (1.0 - decay) * grad * grad;
  const double delta = -std::sqrt((state.sq_delta + epsilon) / (state.sq_grad + epsilon)) * grad;
  state.sq_delta = decay * state.sq_delta + (1.0 - decay) * delta * delta;
  return param + delta;
}

namespace {

// `grad` is overwritten with the applied step. One fused pass per tensor.
template <typename Param>
void adadelta_apply(Param& param, Param& grad, Param& sq_grad, Param& sq_delta, double decay, double epsilon) {
  const Eigen::Index n = param.size();
  double* p = param.data();
  double* g = grad.data();
  double* sg = sq_grad.data();
  double* sd = sq_delta.data();
  const double keep = 1.0 - decay;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double acc = decay * sg[i] + keep * g[i] * g[i];
    const double step = -std::sqrt((sd[i] + epsilon) / (acc + epsilon)) * g[i];
    sg[i] = acc;
    sd[i] = decay * sd[i] + keep * step * step;
    g[i] = step;
    p[i] += step;
  }
}

}  // namespace

Adadelta::Adadelta(const Network& net, double decay, double epsilon) : decay_(decay), epsilon_(epsilon) {
  if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("adadelta decay must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("adadelta epsilon must be positive");
  for (const Layer& layer : net.layers()) {
    sq_grad_w_.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    sq_delta_w_.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    sq_grad_b_.push_back(Vector::Zero(layer.bias.size()));
    sq_delta_b_.push_back(Vector::Zero(layer.bias.size()));
  }
}

void Adadelta::step(Network& net, Gradients& grads) {
  auto& layers = net.layers();
  if (layers.size() != sq_grad_w_.size() || grads.weights.size() != layers.size()) {
    throw std::invalid_argument("optimizer state does not match network shape");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (sq_grad_w_[i].rows() != layers[i].weights.rows() || sq_grad_w_[i].cols() != layers[i].weights.cols()) {
      throw std::invalid_argument("optimizer state does not match layer " + std::to_string(i));
    }
    adadelta_apply(layers[i].weights, grads.weights[i], sq_grad_w_[i], sq_delta_w_[i], decay_, epsilon_);
    adadelta_apply(layers[i].bias, grads.bias[i], sq_grad_b_[i], sq_delta_b_[i], decay_, epsilon_);
  }
}

LossValue mse_loss(const Matrix& output, const Matrix& pre_activation, Activation activation, const Matrix& targets) {
  if (output.rows() != targets.rows() || output.cols() != targets.cols()) {
    throw std::invalid_argument("mse targets do not match output shape");
  }
  const Matrix diff = output - targets;
  const double count = static_cast<double>(diff.size());
  LossValue loss;
  loss.value = diff.squaredNorm() / count;
  loss.grad = (2.0 / count) * diff.cwiseProduct(activation_slope(pre_activation, activation));
  return loss;
}

LossValue cross_entropy_loss(const Matrix& logits, std::span<const int> classes) {
  if (static_cast<std::size_t>(logits.rows()) != classes.size()) {
    throw std::invalid_argument("cross-entropy needs one class index per sample");
  }
  const auto n = static_cast<double>(logits.rows());
  LossValue loss;
  loss.grad.resize(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int target = classes[static_cast<std::size_t>(r)];
    if (target < 0 || target >= logits.cols()) {
      throw std::invalid_argument("class index " + std::to_string(target) + " out of range");
    }
    const double peak = logits.row(r).maxCoeff();
    const Eigen::RowVectorXd shifted = logits.row(r).array() - peak;
    const double log_norm = std::log(shifted.array().exp().sum());
    loss.value -= shifted(target) - log_norm;
    loss.grad.row(r) = (shifted.array() - log_norm).exp().matrix();
    loss.grad(r, target) -= 1.0;
  }
  loss.value /= n;
  loss.grad /= n;
  return loss;
}

namespace {

double apply_step(Network& net, const ForwardCache& cache, const LossValue& loss, Adadelta& opt) {
  if (!std::isfinite(loss.value)) throw TrainingDivergence("non-finite training loss");
  Gradients grads = net.backward(cache, loss.grad);
  opt.step(net, grads);
  return loss.value;
}

}  // namespace

double train_step(Network& net, const Matrix& inputs, const Matrix& targets, Adadelta& opt) {
  if (inputs.rows() == 0) throw std::invalid_argument("empty training batch");
  const ForwardCache cache = net.forward_cached(inputs);
  const LossValue loss = mse_loss(cache.output, cache.pre_activation.back(), net.layers().back().activation, targets);
  return apply_step(net, cache, loss, opt);
}

double train_step(Network& net, const Matrix& inputs, std::span<const int> classes, Adadelta& opt) {
  if (inputs.rows() == 0) throw std::invalid_argument("empty training batch");
  const ForwardCache cache = net.forward_cached(inputs);
  const LossValue loss = cross_entropy_loss(cache.pre_activation.back(), classes);
  return apply_step(net, cache, loss, opt);
}

Network extend_output_layer(const Network& net, Rng& rng) {
  std::vector<Layer> layers = net.layers();
  Layer& top = layers.back();
  top = make_layer(top.inputs(), top.outputs() + 1, top.activation, rng);
  return Network(std::move(layers));
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw std::invalid_argument("ragged rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return out;
}

}  // namespace driftbench::nn
