#include "clutter/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clutter/errors.hpp"

namespace clutter::nn {

namespace {

nlohmann::json flat(const Matrix& m) {
  // Row-major flattening.
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Matrix unflat(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
    throw DataError("network parameter has " + std::to_string(values.size()) + " values, expected " +
                    std::to_string(rows * cols));
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

void glorot_uniform(Matrix& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
  }
}

void check_rows(const Matrix& in, std::size_t expected) {
  if (static_cast<std::size_t>(in.rows()) != expected) throw DimensionError(expected, static_cast<std::size_t>(in.rows()));
}

}  // namespace

// ---- Dense -----------------------------------------------------------------

Dense::Dense(std::size_t in, std::size_t out) {
  w_.value = Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  w_.grad = Matrix::Zero(w_.value.rows(), w_.value.cols());
  b_.value = Matrix::Zero(static_cast<Eigen::Index>(out), 1);
  b_.grad = Matrix::Zero(b_.value.rows(), 1);
}

void Dense::init_glorot_uniform(Rng& rng) {
  glorot_uniform(w_.value, input_size(), output_size(), rng);
  b_.value.setZero();
}

Matrix Dense::infer(const Matrix& in) const {
  check_rows(in, input_size());
  Matrix out = w_.value * in;
  out.colwise() += b_.value.col(0);
  return out;
}

Matrix Dense::forward(const Matrix& in, Rng*) {
  input_ = in;
  return infer(in);
}

Matrix Dense::backward(const Matrix& grad_out) {
  w_.grad.noalias() = grad_out * input_.transpose();
  b_.grad = grad_out.rowwise().sum();
  return w_.value.transpose() * grad_out;
}

nlohmann::json Dense::to_json() const {
  return {{"type", "dense"}, {"in", input_size()}, {"out", output_size()}, {"weights", flat(w_.value)},
          {"bias", flat(b_.value)}};
}

// ---- Relu / Dropout --------------------------------------------------------

Matrix Relu::forward(const Matrix& in, Rng*) {
  mask_ = (in.array() > 0.0).cast<double>().matrix();
  return in.cwiseProduct(mask_);
}

Matrix Relu::backward(const Matrix& grad_out) { return grad_out.cwiseProduct(mask_); }

Matrix Dropout::forward(const Matrix& in, Rng* dropout_rng) {
  active_ = dropout_rng != nullptr && rate_ > 0.0;
  if (!active_) return in;
  const double keep = 1.0 - rate_;
  mask_.resize(in.rows(), in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    for (Eigen::Index r = 0; r < in.rows(); ++r) mask_(r, c) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
  }
  return in.cwiseProduct(mask_);
}

Matrix Dropout::backward(const Matrix& grad_out) { return active_ ? grad_out.cwiseProduct(mask_) : grad_out; }

// ---- Conv1D ----------------------------------------------------------------

Conv1D::Conv1D(std::size_t channels, std::size_t length, std::size_t filters, std::size_t kernel)
    : channels_(channels), length_(length), filters_(filters), kernel_(kernel) {
  if (kernel == 0 || kernel > length) throw DimensionError(length, kernel);
  w_.value = Matrix::Zero(static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(channels * kernel));
  w_.grad = Matrix::Zero(w_.value.rows(), w_.value.cols());
  b_.value = Matrix::Zero(static_cast<Eigen::Index>(filters), 1);
  b_.grad = Matrix::Zero(b_.value.rows(), 1);
}

void Conv1D::init_glorot_uniform(Rng& rng) {
  glorot_uniform(w_.value, channels_ * kernel_, filters_ * kernel_, rng);
  b_.value.setZero();
}

Matrix Conv1D::im2col(const Matrix& in) const {
  check_rows(in, input_size());
  const auto out_len = static_cast<Eigen::Index>(out_length());
  const auto batch = in.cols();
  const auto len = static_cast<Eigen::Index>(length_);
  const auto ker = static_cast<Eigen::Index>(kernel_);
  Matrix patches(static_cast<Eigen::Index>(channels_ * kernel_), out_len * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index t = 0; t < out_len; ++t) {
      for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(channels_); ++c) {
        for (Eigen::Index k = 0; k < ker; ++k) patches(c * ker + k, b * out_len + t) = in(c * len + t + k, b);
      }
    }
  }
  return patches;
}

Matrix Conv1D::apply(const Matrix& patches, Eigen::Index batch) const {
  Matrix conv = w_.value * patches;  // filters x (out_len * batch)
  conv.colwise() += b_.value.col(0);
  const auto out_len = static_cast<Eigen::Index>(out_length());
  Matrix out(static_cast<Eigen::Index>(output_size()), batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index f = 0; f < static_cast<Eigen::Index>(filters_); ++f) {
      out.col(b).segment(f * out_len, out_len) = conv.row(f).segment(b * out_len, out_len).transpose();
    }
  }
  return out;
}

Matrix Conv1D::infer(const Matrix& in) const { return apply(im2col(in), in.cols()); }

Matrix Conv1D::forward(const Matrix& in, Rng*) {
  patches_ = im2col(in);
  batch_ = in.cols();
  return apply(patches_, batch_);
}

Matrix Conv1D::backward(const Matrix& grad_out) {
  const auto out_len = static_cast<Eigen::Index>(out_length());
  Matrix g(static_cast<Eigen::Index>(filters_), out_len * batch_);
  for (Eigen::Index b = 0; b < batch_; ++b) {
    for (Eigen::Index f = 0; f < static_cast<Eigen::Index>(filters_); ++f) {
      g.row(f).segment(b * out_len, out_len) = grad_out.col(b).segment(f * out_len, out_len).transpose();
    }
  }
  w_.grad.noalias() = g * patches_.transpose();
  b_.grad = g.rowwise().sum();
  const Matrix dpatches = w_.value.transpose() * g;
  const auto len = static_cast<Eigen::Index>(length_);
  const auto ker = static_cast<Eigen::Index>(kernel_);
  Matrix grad_in = Matrix::Zero(static_cast<Eigen::Index>(input_size()), batch_);
  for (Eigen::Index b = 0; b < batch_; ++b) {
    for (Eigen::Index t = 0; t < out_len; ++t) {
      for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(channels_); ++c) {
        for (Eigen::Index k = 0; k < ker; ++k) grad_in(c * len + t + k, b) += dpatches(c * ker + k, b * out_len + t);
      }
    }
  }
  return grad_in;
}

nlohmann::json Conv1D::to_json() const {
  return {{"type", "conv1d"}, {"channels", channels_}, {"length", length_}, {"filters", filters_},
          {"kernel", kernel_}, {"weights", flat(w_.value)}, {"bias", flat(b_.value)}};
}

// ---- MaxPool1D -------------------------------------------------------------

Matrix MaxPool1D::pool(const Matrix& in, std::vector<Eigen::Index>* argmax) const {
  check_rows(in, input_size());
  const auto out_len = static_cast<Eigen::Index>(out_length());
  const auto len = static_cast<Eigen::Index>(length_);
  const auto size = static_cast<Eigen::Index>(size_);
  Matrix out(static_cast<Eigen::Index>(output_size()), in.cols());
  if (argmax) argmax->assign(static_cast<std::size_t>(out.size()), 0);
  for (Eigen::Index b = 0; b < in.cols(); ++b) {
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(channels_); ++c) {
      for (Eigen::Index t = 0; t < out_len; ++t) {
        Eigen::Index best = c * len + t * size;
        for (Eigen::Index s = 1; s < size; ++s) {
          const Eigen::Index idx = c * len + t * size + s;
          if (in(idx, b) > in(best, b)) best = idx;
        }
        out(c * out_len + t, b) = in(best, b);
        if (argmax) (*argmax)[static_cast<std::size_t>(b * out.rows() + c * out_len + t)] = best;
      }
    }
  }
  return out;
}

Matrix MaxPool1D::infer(const Matrix& in) const { return pool(in, nullptr); }

Matrix MaxPool1D::forward(const Matrix& in, Rng*) {
  input_cols_ = in.cols();
  return pool(in, &argmax_);
}

Matrix MaxPool1D::backward(const Matrix& grad_out) {
  Matrix grad_in = Matrix::Zero(static_cast<Eigen::Index>(input_size()), input_cols_);
  for (Eigen::Index b = 0; b < grad_out.cols(); ++b) {
    for (Eigen::Index r = 0; r < grad_out.rows(); ++r) {
      grad_in(argmax_[static_cast<std::size_t>(b * grad_out.rows() + r)], b) += grad_out(r, b);
    }
  }
  return grad_in;
}

nlohmann::json MaxPool1D::to_json() const {
  return {{"type", "maxpool1d"}, {"channels", channels_}, {"length", length_}, {"size", size_}};
}

// ---- Network ---------------------------------------------------------------

Network::Network(const Network& other) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty() && layers_.back()->output_size() != layer->input_size()) {
    throw DimensionError(layers_.back()->output_size(), layer->input_size());
  }
  layers_.push_back(std::move(layer));
}

std::size_t Network::input_size() const { return layers_.empty() ? 0 : layers_.front()->input_size(); }
std::size_t Network::output_size() const { return layers_.empty() ? 0 : layers_.back()->output_size(); }

Matrix Network::infer(const Matrix& x) const {
  Matrix a = x;
  for (const auto& l : layers_) a = l->infer(a);
  return a;
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    for (auto* p : l->params()) out.push_back(p);
  }
  return out;
}

double Network::forward_backward(const Matrix& x, std::span<const int> labels, Rng* dropout_rng) {
  Matrix a = x;
  for (auto& l : layers_) a = l->forward(a, dropout_rng);
  Matrix grad;
  const double loss = softmax_cross_entropy(a, labels, &grad);
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) grad = (*it)->backward(grad);
  return loss;
}

double Network::loss(const Matrix& x, std::span<const int> labels) const {
  return softmax_cross_entropy(infer(x), labels, nullptr);
}

nlohmann::json Network::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) layers.push_back(l->to_json());
  return {{"layers", layers}};
}

Network Network::from_json(const nlohmann::json& j) {
  Network net;
  for (const auto& l : j.at("layers")) {
    const auto type = l.at("type").get<std::string>();
    if (type == "dense") {
      auto d = std::make_unique<Dense>(l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>());
      d->weights().value = unflat(l.at("weights"), d->weights().value.rows(), d->weights().value.cols());
      d->bias().value = unflat(l.at("bias"), d->bias().value.rows(), 1);
      net.add(std::move(d));
    } else if (type == "relu") {
      net.add(std::make_unique<Relu>(l.at("size").get<std::size_t>()));
    } else if (type == "dropout") {
      net.add(std::make_unique<Dropout>(l.at("size").get<std::size_t>(), l.at("rate").get<double>()));
    } else if (type == "conv1d") {
      auto c = std::make_unique<Conv1D>(l.at("channels").get<std::size_t>(), l.at("length").get<std::size_t>(),
                                        l.at("filters").get<std::size_t>(), l.at("kernel").get<std::size_t>());
      c->weights().value = unflat(l.at("weights"), c->weights().value.rows(), c->weights().value.cols());
      c->bias().value = unflat(l.at("bias"), c->bias().value.rows(), 1);
      net.add(std::move(c));
    } else if (type == "maxpool1d") {
      net.add(std::make_unique<MaxPool1D>(l.at("channels").get<std::size_t>(), l.at("length").get<std::size_t>(),
                                          l.at("size").get<std::size_t>()));
    } else {
      throw DataError("unknown layer type '" + type + "'");
    }
  }
  return net;
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double top = p.col(c).maxCoeff();
    p.col(c) = (p.col(c).array() - top).exp().matrix();
    p.col(c) /= p.col(c).sum();
  }
  return p;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* grad) {
  if (static_cast<std::size_t>(logits.cols()) != labels.size()) {
    throw DimensionError(labels.size(), static_cast<std::size_t>(logits.cols()));
  }
  const auto batch = static_cast<double>(logits.cols());
  double loss = 0.0;
  Matrix log_p(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double top = logits.col(c).maxCoeff();
    const double lse = top + std::log((logits.col(c).array() - top).exp().sum());
    log_p.col(c) = logits.col(c).array() - lse;
    loss -= log_p(labels[static_cast<std::size_t>(c)], c);
  }
  if (grad) {
    *grad = log_p.array().exp().matrix();
    for (Eigen::Index c = 0; c < logits.cols(); ++c) (*grad)(labels[static_cast<std::size_t>(c)], c) -= 1.0;
    *grad /= batch;
  }
  return loss / batch;
}

Network build_mlp(std::size_t inputs, std::size_t outputs, const MlpConfig& config, Rng& rng) {
  Network net;
  std::size_t width = inputs;
  for (std::size_t h = 0; h < config.hidden.size(); ++h) {
    auto dense = std::make_unique<Dense>(width, static_cast<std::size_t>(config.hidden[h]));
    dense->init_glorot_uniform(rng);
    width = dense->output_size();
    net.add(std::move(dense));
    net.add(std::make_unique<Relu>(width));
    const int layer_no = static_cast<int>(h) + 1;
    if (std::find(config.dropout_after.begin(), config.dropout_after.end(), layer_no) != config.dropout_after.end()) {
      net.add(std::make_unique<Dropout>(width, config.dropout));
    }
  }
  auto out = std::make_unique<Dense>(width, outputs);
  out->init_glorot_uniform(rng);
  net.add(std::move(out));
  return net;
}

Network build_cnn(std::size_t inputs, std::size_t outputs, const CnnConfig& config, Rng& rng) {
  Network net;
  auto conv1 = std::make_unique<Conv1D>(1, inputs, static_cast<std::size_t>(config.filters1),
                                        static_cast<std::size_t>(config.kernel1));
  conv1->init_glorot_uniform(rng);
  const std::size_t len1 = conv1->out_length();
  net.add(std::move(conv1));
  net.add(std::make_unique<Relu>(static_cast<std::size_t>(config.filters1) * len1));
  auto conv2 = std::make_unique<Conv1D>(static_cast<std::size_t>(config.filters1), len1,
                                        static_cast<std::size_t>(config.filters2), static_cast<std::size_t>(config.kernel2));
  conv2->init_glorot_uniform(rng);
  const std::size_t len2 = conv2->out_length();
  net.add(std::move(conv2));
  net.add(std::make_unique<Relu>(static_cast<std::size_t>(config.filters2) * len2));
  net.add(std::make_unique<MaxPool1D>(static_cast<std::size_t>(config.filters2), len2, static_cast<std::size_t>(config.pool)));
  std::size_t width = net.output_size();
  net.add(std::make_unique<Dropout>(width, config.dropout));
  for (int units : config.dense) {
    auto dense = std::make_unique<Dense>(width, static_cast<std::size_t>(units));
    dense->init_glorot_uniform(rng);
    width = dense->output_size();
    net.add(std::move(dense));
    net.add(std::make_unique<Relu>(width));
  }
  auto out = std::make_unique<Dense>(width, outputs);
  out->init_glorot_uniform(rng);
  net.add(std::move(out));
  return net;
}

double mlp_forward_backward(Network& network, const Matrix& x, std::span<const int> labels, Rng* dropout_rng) {
  check_rows(x, network.input_size());
  if (x.cols() == 0) throw DataError("empty batch");
  return network.forward_backward(x, labels, dropout_rng);
}

double cnn_forward_backward(Network& network, const Matrix& x, std::span<const int> labels, Rng* dropout_rng) {
  return mlp_forward_backward(network, x, labels, dropout_rng);
}

void adam_step(std::span<Param* const> params, AdamState& state, long t, double lr, const AdamConfig& config) {
  if (t < 1) throw DomainError("Adam step counter starts at 1");
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto* p : params) {
      state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw DimensionError(static_cast<std::size_t>(p.value.size()), static_cast<std::size_t>(p.grad.size()));
    }
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    m = config.beta1 * m + (1.0 - config.beta1) * p.grad.array();
    v = config.beta2 * v + (1.0 - config.beta2) * p.grad.array().square();
    p.value.array() -= lr * (m / c1) / ((v / c2).sqrt() + config.epsilon);
  }
}

std::vector<double> train_network(Network& network, const Matrix& x, std::span<const int> labels,
                                  const TrainConfig& config, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.cols());
  if (n == 0) throw DataError("cannot train on an empty set");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  AdamState state;
  auto params = network.params();
  std::vector<double> epoch_losses;
  long step = 0;
  const auto batch_size = static_cast<std::size_t>(std::max(1, config.batch_size));
  Matrix batch;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t count = std::min(batch_size, n - start);
      batch.resize(x.rows(), static_cast<Eigen::Index>(count));
      batch_labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        batch.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(order[start + i]));
        batch_labels[i] = labels[order[start + i]];
      }
      total += network.forward_backward(batch, batch_labels, &rng) * static_cast<double>(count);
      adam_step(params, state, ++step, config.learning_rate, config.adam);
    }
    epoch_losses.push_back(total / static_cast<double>(n));
  }
  return epoch_losses;
}

}  // namespace clutter::nn
