#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clutter/linalg.hpp"
#include "clutter/rng.hpp"

namespace clutter::nn {

// Batches are column-major: one column per example. Convolutional layers
// view a column as channel-major signal, index c * length + t.

struct Param {
  Matrix value;
  Matrix grad;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::size_t input_size() const = 0;
  virtual std::size_t output_size() const = 0;

  // Inference without caching; dropout is the identity.
  virtual Matrix infer(const Matrix& in) const = 0;
  // Training pass that caches what backward needs. Dropout is active only
  // when `dropout_rng` is non-null.
  virtual Matrix forward(const Matrix& in, Rng* dropout_rng) = 0;
  // Writes parameter gradients and returns the gradient w.r.t. the input.
  virtual Matrix backward(const Matrix& grad_out) = 0;

  virtual std::vector<Param*> params() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t in, std::size_t out);
  void init_glorot_uniform(Rng& rng);

  std::size_t input_size() const override { return static_cast<std::size_t>(w_.value.cols()); }
  std::size_t output_size() const override { return static_cast<std::size_t>(w_.value.rows()); }
  Matrix infer(const Matrix& in) const override;
  Matrix forward(const Matrix& in, Rng* dropout_rng) override;
  Matrix backward(const Matrix& grad_out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  nlohmann::json to_json() const override;

  Param& weights() { return w_; }
  Param& bias() { return b_; }

 private:
  Param w_;
  Param b_;
  Matrix input_;
};

class Relu final : public Layer {
 public:
  explicit Relu(std::size_t size) : size_(size) {}
  std::size_t input_size() const override { return size_; }
  std::size_t output_size() const override { return size_; }
  Matrix infer(const Matrix& in) const override { return in.cwiseMax(0.0); }
  Matrix forward(const Matrix& in, Rng* dropout_rng) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
  nlohmann::json to_json() const override { return {{"type", "relu"}, {"size", size_}}; }

 private:
  std::size_t size_;
  Matrix mask_;
};

// Inverted dropout: kept units are scaled by 1 / (1 - rate).
class Dropout final : public Layer {
 public:
  Dropout(std::size_t size, double rate) : size_(size), rate_(rate) {}
  std::size_t input_size() const override { return size_; }
  std::size_t output_size() const override { return size_; }
  Matrix infer(const Matrix& in) const override { return in; }
  Matrix forward(const Matrix& in, Rng* dropout_rng) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }
  nlohmann::json to_json() const override { return {{"type", "dropout"}, {"size", size_}, {"rate", rate_}}; }
  double rate() const { return rate_; }

 private:
  std::size_t size_;
  double rate_;
  Matrix mask_;
  bool active_ = false;
};

// Valid 1-D convolution, stride 1.
class Conv1D final : public Layer {
 public:
  Conv1D(std::size_t channels, std::size_t length, std::size_t filters, std::size_t kernel);
  void init_glorot_uniform(Rng& rng);

  std::size_t input_size() const override { return channels_ * length_; }
  std::size_t output_size() const override { return filters_ * out_length(); }
  std::size_t out_length() const { return length_ - kernel_ + 1; }
  std::size_t filters() const { return filters_; }
  Matrix infer(const Matrix& in) const override;
  Matrix forward(const Matrix& in, Rng* dropout_rng) override;
  Matrix backward(const Matrix& grad_out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1D>(*this); }
  nlohmann::json to_json() const override;

  Param& weights() { return w_; }
  Param& bias() { return b_; }

 private:
  Matrix im2col(const Matrix& in) const;
  Matrix apply(const Matrix& patches, Eigen::Index batch) const;

  std::size_t channels_;
  std::size_t length_;
  std::size_t filters_;
  std::size_t kernel_;
  Param w_;  // filters x (channels * kernel), column index c * kernel + k
  Param b_;
  Matrix patches_;
  Eigen::Index batch_ = 0;
};

// Non-overlapping max pooling; the first maximal element wins ties and
// receives the whole gradient.
class MaxPool1D final : public Layer {
 public:
  MaxPool1D(std::size_t channels, std::size_t length, std::size_t size)
      : channels_(channels), length_(length), size_(size) {}
  std::size_t input_size() const override { return channels_ * length_; }
  std::size_t output_size() const override { return channels_ * out_length(); }
  std::size_t out_length() const { return length_ / size_; }
  Matrix infer(const Matrix& in) const override;
  Matrix forward(const Matrix& in, Rng* dropout_rng) override;
  Matrix backward(const Matrix& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool1D>(*this); }
  nlohmann::json to_json() const override;

 private:
  Matrix pool(const Matrix& in, std::vector<Eigen::Index>* argmax) const;

  std::size_t channels_;
  std::size_t length_;
  std::size_t size_;
  std::vector<Eigen::Index> argmax_;
  Eigen::Index input_cols_ = 0;
};

class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer);
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  std::size_t input_size() const;
  std::size_t output_size() const;

  // Logits, one column per example.
  Matrix infer(const Matrix& x) const;
  std::vector<Param*> params();

  // Mean categorical cross-entropy over the batch; populates every Param's
  // gradient. Dropout is active only when `dropout_rng` is non-null.
  double forward_backward(const Matrix& x, std::span<const int> labels, Rng* dropout_rng);
  double loss(const Matrix& x, std::span<const int> labels) const;

  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Mean cross-entropy of softmax(logits) and the gradient w.r.t. the logits.
double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* grad);
Matrix softmax_columns(const Matrix& logits);

struct MlpConfig {
  std::vector<int> hidden = {481, 364, 256, 125, 50};
  // 1-based hidden layers followed by dropout.
  std::vector<int> dropout_after = {2, 4};
  double dropout = 0.2;
};

struct CnnConfig {
  int filters1 = 16;
  int kernel1 = 5;
  int filters2 = 32;
  int kernel2 = 5;
  int pool = 2;
  double dropout = 0.25;
  std::vector<int> dense = {125, 50};
};

Network build_mlp(std::size_t inputs, std::size_t outputs, const MlpConfig& config, Rng& rng);
Network build_cnn(std::size_t inputs, std::size_t outputs, const CnnConfig& config, Rng& rng);

// Both check the batch width against the network, then run
// Network::forward_backward.
double mlp_forward_backward(Network& network, const Matrix& x, std::span<const int> labels, Rng* dropout_rng);
double cnn_forward_backward(Network& network, const Matrix& x, std::span<const int> labels, Rng* dropout_rng);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

// One bias-corrected Adam update at step t >= 1 using each Param's grad.
void adam_step(std::span<Param* const> params, AdamState& state, long t, double lr, const AdamConfig& config = {});

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.01;
  AdamConfig adam;
};

// Mini-batch Adam with a seeded shuffle per epoch; returns the mean training
// loss of each epoch. `x` holds one example per column.
std::vector<double> train_network(Network& network, const Matrix& x, std::span<const int> labels,
                                  const TrainConfig& config, Rng& rng);

}  // namespace clutter::nn
