#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "driftbench/nn.hpp"

using namespace driftbench::nn;

namespace {

Layer make_layer(Matrix w, Vector b, Activation a) {
  Layer layer;
  layer.weights = std::move(w);
  layer.bias = std::move(b);
  layer.activation = a;
  return layer;
}

// Independent losses, computed from the network output only.
double oracle_mse(const Network& net, const Matrix& x, const Matrix& t) {
  const Matrix out = net.forward(x);
  return (out - t).array().square().sum() / static_cast<double>(out.size());
}

double oracle_ce(const Network& net, const Matrix& x, const std::vector<int>& classes) {
  const Matrix z = net.logits(x);
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) s += std::exp(z(r, c) - m);
    total += -(z(r, classes[static_cast<std::size_t>(r)]) - m - std::log(s));
  }
  return total / static_cast<double>(z.rows());
}

template <typename LossFn>
double max_relative_error(Network& net, const Gradients& g, LossFn loss) {
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    auto check = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2 * h);
      const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic - numeric) / scale);
    };
    Layer& layer = net.layers()[i];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) check(layer.weights(r, c), g.weights[i](r, c));
      check(layer.bias(r), g.bias[i](r));
    }
  }
  return worst;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("forward: identity layer returns its input") {
  Network net({make_layer(Matrix::Identity(3, 3), Vector::Zero(3), Activation::linear)});
  const std::vector<double> x{1.5, -2.0, 0.25};
  const Vector y = net.forward(x);
  CHECK(y(0) == 1.5);
  CHECK(y(1) == -2.0);
  CHECK(y(2) == 0.25);
}

TEST_CASE("forward: zero weights give the activated bias") {
  Vector b(2);
  b << 0.5, -1.0;
  Network net({make_layer(Matrix::Zero(2, 4), b, Activation::sigmoid)});
  const Vector y = net.forward(std::vector<double>{3, 1, 4, 1});
  CHECK(y(0) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-15));
  CHECK(y(1) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-15));
}

TEST_CASE("forward: hand-computed two-layer relu network") {
  Matrix w1(2, 2);
  w1 << 1, -1, 2, 1;
  Vector b1(2);
  b1 << 0, -1;
  Matrix w2(1, 2);
  w2 << 3, 0.5;
  Vector b2(1);
  b2 << 0.25;
  Network net({make_layer(w1, b1, Activation::relu), make_layer(w2, b2, Activation::linear)});
  // x=(1,2): h = relu(-1, 3) = (0, 3); y = 0.5*3 + 0.25
  CHECK(net.forward(std::vector<double>{1, 2})(0) == doctest::Approx(1.75));
  // x=(2,1): h = relu(1, 4) = (1, 4); y = 3 + 2 + 0.25
  CHECK(net.forward(std::vector<double>{2, 1})(0) == doctest::Approx(5.25));
}

TEST_CASE("forward: input width mismatch is rejected") {
  Rng rng(1);
  Network net({3, 2}, {Activation::linear}, rng);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Network({3, 2}, {}, rng), std::invalid_argument);
}

TEST_CASE("forward: batched rows equal single-vector calls") {
  Rng rng(2);
  Network net({4, 5, 3}, {Activation::relu, Activation::sigmoid}, rng);
  const Matrix x = random_matrix(6, 4, rng);
  const Matrix y = net.forward(x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Vector xr = x.row(r).transpose();
    const Vector single = net.forward(std::span<const double>(xr.data(), static_cast<std::size_t>(xr.size())));
    CHECK((single - y.row(r).transpose()).norm() < 1e-12);
  }
}

TEST_CASE("cross-entropy: equal logits over two classes give ln 2") {
  Matrix z = Matrix::Zero(1, 2);
  const std::vector<int> cls{0};
  CHECK(cross_entropy_loss(z, cls).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gradients match central finite differences on a 3-4-2 network") {
  Rng rng(3);
  Network net({3, 4, 2}, {Activation::relu, Activation::sigmoid}, rng);
  const Matrix x = random_matrix(5, 3, rng);
  const Matrix t = random_matrix(5, 2, rng).cwiseAbs().cwiseMin(1.0);
  const std::vector<int> cls{0, 1, 1, 0, 1};

  SUBCASE("mse") {
    const ForwardCache cache = net.forward_cached(x);
    const LossValue loss = mse_loss(cache.output, cache.pre_activation.back(), Activation::sigmoid, t);
    CHECK(loss.value == doctest::Approx(oracle_mse(net, x, t)).epsilon(1e-12));
    const Gradients g = net.backward(cache, loss.grad);
    CHECK(max_relative_error(net, g, [&] { return oracle_mse(net, x, t); }) < 1e-4);
  }
  SUBCASE("cross-entropy") {
    const ForwardCache cache = net.forward_cached(x);
    const LossValue loss = cross_entropy_loss(cache.pre_activation.back(), cls);
    CHECK(loss.value == doctest::Approx(oracle_ce(net, x, cls)).epsilon(1e-12));
    const Gradients g = net.backward(cache, loss.grad);
    CHECK(max_relative_error(net, g, [&] { return oracle_ce(net, x, cls); }) < 1e-4);
  }
}

TEST_CASE("input gradient matches finite differences") {
  Rng rng(4);
  Network net({3, 6, 2}, {Activation::relu, Activation::linear}, rng);
  Matrix x = random_matrix(2, 3, rng);
  const Matrix t = random_matrix(2, 2, rng);
  const ForwardCache cache = net.forward_cached(x);
  const LossValue loss = mse_loss(cache.output, cache.pre_activation.back(), Activation::linear, t);
  const Matrix analytic = net.input_gradient(cache, loss.grad);
  Matrix via_backward;
  net.backward(cache, loss.grad, &via_backward);
  CHECK((analytic - via_backward).norm() < 1e-14);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = oracle_mse(net, x, t);
    x.data()[i] = saved - h;
    const double down = oracle_mse(net, x, t);
    x.data()[i] = saved;
    CHECK(analytic.data()[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("adadelta: zero gradient leaves the parameter unchanged") {
  AdadeltaScalar s;
  CHECK(adadelta_update(0.7, 0.0, s) == 0.7);
  CHECK(s.sq_grad == 0.0);
  CHECK(s.sq_delta == 0.0);
}

TEST_CASE("adadelta: first step with unit gradient") {
  AdadeltaScalar s;
  const double expected = -std::sqrt(1e-6) / std::sqrt(0.05 + 1e-6);
  const double w = adadelta_update(0.0, 1.0, s);
  CHECK(std::abs(w - expected) < 1e-12);
  CHECK(w == doctest::Approx(-0.004472).epsilon(1e-4));
  CHECK(s.sq_grad == doctest::Approx(0.05));
  CHECK(s.sq_delta == doctest::Approx(0.05 * expected * expected));
}

TEST_CASE("adadelta: a repeated gradient grows the second step") {
  AdadeltaScalar s;
  const double w1 = adadelta_update(0.0, 1.0, s);
  const double w2 = adadelta_update(w1, 1.0, s);
  CHECK(std::abs(w2 - w1) > std::abs(w1));
}

TEST_CASE("adadelta: network optimizer matches the scalar rule") {
  Rng rng(5);
  Network net({2, 2}, {Activation::linear}, rng);
  const Network before = net;
  Adadelta opt(net);
  Gradients g{{Matrix::Constant(2, 2, 0.3)}, {Vector::Constant(2, -0.2)}};
  opt.step(net, g);
  AdadeltaScalar sw, sb;
  CHECK(net.layers()[0].weights(0, 1) == doctest::Approx(adadelta_update(before.layers()[0].weights(0, 1), 0.3, sw)).epsilon(1e-14));
  CHECK(net.layers()[0].bias(1) == doctest::Approx(adadelta_update(0.0, -0.2, sb)).epsilon(1e-14));
}

TEST_CASE("train_step reduces a regression loss") {
  Rng rng(6);
  Network net({2, 8, 1}, {Activation::relu, Activation::linear}, rng);
  Adadelta opt(net);
  const Matrix x = random_matrix(32, 2, rng);
  const Matrix t = x.col(0) * 0.5 - x.col(1) * 0.25;
  const double first = train_step(net, x, t, opt);
  double last = first;
  for (int i = 0; i < 300; ++i) last = train_step(net, x, t, opt);
  CHECK(last < first);
  const std::vector<int> cls(32, 1);
  Network clf({2, 4, 3}, {Activation::relu, Activation::sigmoid}, rng);
  Adadelta copt(clf);
  const double c0 = train_step(clf, x, cls, copt);
  double c1 = c0;
  for (int i = 0; i < 100; ++i) c1 = train_step(clf, x, cls, copt);
  CHECK(c1 < c0);
}

TEST_CASE("train_step raises TrainingDivergence on non-finite loss") {
  Rng rng(7);
  Network net({2, 1}, {Activation::linear}, rng);
  net.layers()[0].weights(0, 0) = std::nan("");
  Adadelta opt(net);
  CHECK_THROWS_AS(train_step(net, Matrix::Ones(1, 2), Matrix::Zero(1, 1), opt), TrainingDivergence);
}

TEST_CASE("extend_output_layer grows only the last layer") {
  Rng rng(8);
  Network net({5, 7, 3}, {Activation::relu, Activation::sigmoid}, rng);
  Network grown = net;
  for (int k = 1; k <= 3; ++k) {
    grown = extend_output_layer(grown, rng);
    CHECK(grown.output_size() == 3 + static_cast<std::size_t>(k));
    CHECK(grown.input_size() == 5);
    CHECK(grown.layers()[0].weights == net.layers()[0].weights);
    CHECK(grown.layers()[0].bias == net.layers()[0].bias);
    CHECK(grown.layers()[1].activation == Activation::sigmoid);
  }
  const Matrix y = grown.forward(random_matrix(20, 5, rng));
  CHECK(y.minCoeff() > 0.0);
  CHECK(y.maxCoeff() < 1.0);
}

TEST_CASE("sigmoid output and logits share their argmax") {
  Rng rng(9);
  Network net({4, 8, 5}, {Activation::relu, Activation::sigmoid}, rng);
  const Matrix x = random_matrix(200, 4, rng);
  const Matrix y = net.forward(x);
  const Matrix z = net.logits(x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::Index ay = 0, az = 0;
    y.row(r).maxCoeff(&ay);
    z.row(r).maxCoeff(&az);
    CHECK(ay == az);
  }
}

TEST_CASE("network json round trip is exact") {
  Rng rng(10);
  Network net({3, 4, 2}, {Activation::relu, Activation::sigmoid}, rng);
  const Network back = Network::from_json(nlohmann::json::parse(net.to_json().dump()));
  REQUIRE(back.layers().size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.layers()[i].weights == net.layers()[i].weights);
    CHECK(back.layers()[i].bias == net.layers()[i].bias);
    CHECK(back.layers()[i].activation == net.layers()[i].activation);
  }
  CHECK(net.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);
}
