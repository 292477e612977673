#include <doctest.h>

#include <cmath>
#include <limits>

#include "clutter/errors.hpp"
#include "clutter/nn.hpp"
#include "oracles.hpp"

using namespace clutter;
using namespace oracles;
using namespace clutter::nn;

TEST_CASE("kink signature tracks relu signs and pool winners") {
  Network net;
  net.add(std::make_unique<Relu>(4));
  net.add(std::make_unique<MaxPool1D>(1, 4, 2));
  Matrix x(4, 1);
  x << 1.0, -1.0, 2.0, 3.0;
  CHECK(kink_signature(net, x) == std::vector<std::int64_t>{1, 0, 1, 1, 0, 1});
  x << -1.0, 1.0, 3.0, 3.0;
  CHECK(kink_signature(net, x) == std::vector<std::int64_t>{0, 1, 1, 1, 1, 0});
}

TEST_CASE("mlp gradients match central differences") {
  Rng rng(1);
  MlpConfig cfg;
  cfg.hidden = {8};
  cfg.dropout_after = {};
  Network net = build_mlp(271, 4, cfg, rng);
  const Matrix x = random_batch(rng, 271, 6);
  const std::vector<int> y = {0, 1, 2, 3, 1, 2};
  const GradientCheck g = check_gradients(net, x, y, 100, rng);
  CHECK(g.accepted == 100);
  CHECK(g.worst <= 1e-5);
}

TEST_CASE("cnn gradients match central differences") {
  Rng rng(2);
  CnnConfig cfg;
  cfg.filters1 = 2;
  cfg.kernel1 = 3;
  cfg.filters2 = 2;
  cfg.kernel2 = 3;
  cfg.dense = {8, 6};
  Network net = build_cnn(271, 4, cfg, rng);
  const Matrix x = random_batch(rng, 271, 4);
  const std::vector<int> y = {3, 0, 2, 1};
  const GradientCheck g = check_gradients(net, x, y, 100, rng);
  CHECK(g.accepted == 100);
  CHECK(g.worst <= 1e-5);
}

TEST_CASE("default architectures") {
  Rng rng(3);
  const Network mlp = build_mlp(271, 4, MlpConfig{}, rng);
  std::vector<std::size_t> dense_out;
  std::vector<std::size_t> dropout_at;
  for (const auto& layer : mlp.layers()) {
    const auto j = layer->to_json();
    if (j["type"] == "dense") dense_out.push_back(layer->output_size());
    if (j["type"] == "dropout") dropout_at.push_back(dense_out.size());
  }
  CHECK(dense_out == std::vector<std::size_t>{481, 364, 256, 125, 50, 4});
  CHECK(dropout_at == std::vector<std::size_t>{2, 4});
  CHECK(mlp.input_size() == 271);

  const Network cnn = build_cnn(271, 4, CnnConfig{}, rng);
  std::vector<std::string> types;
  for (const auto& layer : cnn.layers()) types.push_back(layer->to_json()["type"]);
  const std::vector<std::string> want = {"conv1d", "relu", "conv1d", "relu", "maxpool1d", "dropout",
                                         "dense",  "relu", "dense",  "relu", "dense"};
  CHECK(types == want);
  CHECK(cnn.output_size() == 4);
}

TEST_CASE("dimension mismatch") {
  Rng rng(4);
  MlpConfig cfg;
  cfg.hidden = {8};
  Network net = build_mlp(271, 4, cfg, rng);
  const Matrix bad = Matrix::Zero(270, 2);
  const std::vector<int> y = {0, 1};
  CHECK_THROWS_AS(mlp_forward_backward(net, bad, y, nullptr), DimensionError);
  CHECK_THROWS_AS(net.add(std::make_unique<Dense>(5, 2)), DimensionError);
}

TEST_CASE("duplicate rows give identical per-example losses without dropout") {
  Rng rng(5);
  Network net = build_mlp(271, 4, MlpConfig{}, rng);
  const Matrix one = random_batch(rng, 271, 1);
  Matrix dup(271, 3);
  dup << one, one, one;
  const Matrix logits = net.infer(dup);
  CHECK(logits.col(0) == logits.col(1));
  CHECK(logits.col(1) == logits.col(2));
  const std::vector<int> a = {2};
  const std::vector<int> b = {2, 2, 2};
  CHECK(net.loss(one, a) == doctest::Approx(net.loss(dup, b)).epsilon(1e-15));
}

TEST_CASE("cross entropy limits") {
  Matrix logits(4, 1);
  logits << 60, 0, 0, 0;
  const std::vector<int> y = {0};
  CHECK(softmax_cross_entropy(logits, y, nullptr) < 1e-20);
  logits << 0, 0, 0, 0;
  CHECK(softmax_cross_entropy(logits, y, nullptr) == doctest::Approx(std::log(4.0)));
  logits << 1000, -1000, 0, 0;
  const std::vector<int> wrong = {1};
  CHECK(std::isfinite(softmax_cross_entropy(logits, wrong, nullptr)));
  const Matrix p = softmax_columns(logits);
  CHECK(p.sum() == doctest::Approx(1.0));
}

TEST_CASE("zero input with zero biases gives a uniform softmax") {
  Rng rng(6);
  Network net = build_cnn(271, 4, CnnConfig{}, rng);
  for (auto* p : net.params()) {
    if (p->value.cols() == 1) p->value.setZero();
  }
  const Matrix logits = net.infer(Matrix::Zero(271, 2));
  CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
  const Matrix p = softmax_columns(logits);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(p(i, 0) == 0.25);
}

TEST_CASE("a zero-sum kernel ignores a constant shift") {
  Conv1D conv(1, 20, 1, 3);
  conv.weights().value << 1.0, -2.0, 1.0;
  conv.bias().value << 0.5;
  Rng rng(7);
  const Matrix x = random_batch(rng, 20, 3);
  const Matrix shifted = (x.array() + 4.25).matrix();
  CHECK((conv.infer(x) - conv.infer(shifted)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("conv1d matches a direct loop") {
  Rng rng(8);
  Conv1D conv(2, 9, 3, 4);
  conv.init_glorot_uniform(rng);
  for (Eigen::Index f = 0; f < 3; ++f) conv.bias().value(f) = rng.normal();
  const Matrix x = random_batch(rng, 18, 2);
  const Matrix y = conv.infer(x);
  REQUIRE(y.rows() == 3 * 6);
  for (Eigen::Index b = 0; b < 2; ++b) {
    for (Eigen::Index f = 0; f < 3; ++f) {
      for (Eigen::Index t = 0; t < 6; ++t) {
        double acc = conv.bias().value(f);
        for (Eigen::Index c = 0; c < 2; ++c) {
          for (Eigen::Index k = 0; k < 4; ++k) acc += conv.weights().value(f, c * 4 + k) * x(c * 9 + t + k, b);
        }
        CHECK(y(f * 6 + t, b) == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("max pool routes the gradient to the first maximum") {
  MaxPool1D pool(1, 6, 2);
  Matrix x(6, 1);
  x << 3, 3, 1, 2, 5, 4;
  Rng rng(1);
  const Matrix y = pool.forward(x, nullptr);
  CHECK(y(0, 0) == 3);
  CHECK(y(1, 0) == 2);
  CHECK(y(2, 0) == 5);
  Matrix g(3, 1);
  g << 1, 2, 3;
  const Matrix back = pool.backward(g);
  Matrix want(6, 1);
  want << 1, 0, 0, 2, 3, 0;
  CHECK(back == want);
}

TEST_CASE("inverted dropout") {
  Dropout drop(1000, 0.25);
  Matrix x = Matrix::Ones(1000, 4);
  Rng rng(9);
  const Matrix y = drop.forward(x, &rng);
  int kept = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y.data()[i];
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    kept += v != 0.0;
  }
  CHECK(std::abs(kept / 4000.0 - 0.75) < 0.03);
  CHECK(drop.infer(x) == x);
  CHECK(drop.forward(x, nullptr) == x);
}

TEST_CASE("adam step") {
  Param p{Matrix::Constant(2, 2, 1.5), Matrix::Zero(2, 2)};
  std::vector<Param*> ps = {&p};
  AdamState state;
  adam_step(ps, state, 1, 0.01);
  CHECK(p.value == Matrix::Constant(2, 2, 1.5));

  Param q{Matrix::Zero(1, 3), Matrix(1, 3)};
  q.grad << 0.5, -2.0, 1e-3;
  std::vector<Param*> qs = {&q};
  AdamState fresh;
  adam_step(qs, fresh, 1, 0.01);
  CHECK(q.value(0, 0) == doctest::Approx(-0.01 * 0.5 / (0.5 + 1e-8)));
  CHECK(q.value(0, 1) == doctest::Approx(0.01 * 2.0 / (2.0 + 1e-8)));
  CHECK(q.value(0, 2) == doctest::Approx(-0.01 * 1e-3 / (1e-3 + 1e-8)));
  CHECK_THROWS_AS(adam_step(qs, fresh, 0, 0.01), DomainError);
}

TEST_CASE("30 epochs on a separable toy reduce the epoch loss almost monotonically") {
  Rng rng(10);
  const int n = 256;
  Matrix x(10, n);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = i % 4;
    for (int r = 0; r < 10; ++r) x(r, i) = 0.3 * rng.normal() + (r == 2 * (i % 4) ? 2.0 : 0.0);
  }
  MlpConfig cfg;
  cfg.hidden = {16};
  cfg.dropout_after = {};
  Rng init(11);
  Network net = build_mlp(10, 4, cfg, init);
  Rng train(12);
  const auto losses = train_network(net, x, y, TrainConfig{}, train);
  REQUIRE(losses.size() == 30);
  int decreasing = 0;
  double previous = std::numeric_limits<double>::infinity();
  for (double l : losses) {
    decreasing += l < previous;
    previous = l;
  }
  CHECK(decreasing >= 27);
  CHECK(losses.back() < 0.1 * losses.front());
}

TEST_CASE("network copies are deep and json round trips") {
  Rng rng(13);
  CnnConfig cfg;
  cfg.filters1 = 2;
  cfg.filters2 = 3;
  cfg.dense = {5};
  Network a = build_cnn(271, 4, cfg, rng);
  Network b = a;
  b.params()[0]->value(0, 0) += 1.0;
  CHECK(a.params()[0]->value(0, 0) != b.params()[0]->value(0, 0));
  const Network c = Network::from_json(a.to_json());
  const Matrix x = random_batch(rng, 271, 3);
  CHECK(c.infer(x) == a.infer(x));
  CHECK_THROWS_AS(Network::from_json(nlohmann::json{{"layers", {{{"type", "bogus"}}}}}), DataError);
}
