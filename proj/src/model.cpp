#include "clutter/model.hpp"

#include <cmath>

#include "clutter/dataset_io.hpp"
#include "clutter/errors.hpp"

namespace clutter {

namespace {

constexpr std::array<std::string_view, 6> kVariantNames = {"rf", "adaboost", "svm", "logreg", "mlp", "cnn"};

using nlohmann::json;

std::vector<int> int_labels(const Dataset& data) {
  std::vector<int> y;
  y.reserve(data.size());
  for (const auto& row : data.rows()) y.push_back(label_index(row.label));
  return y;
}

Matrix transformed_matrix(const FeatureTransformer& t, std::span<const FeatureVector> raw) {
  Matrix x(static_cast<Eigen::Index>(raw.size()), static_cast<Eigen::Index>(t.dimension()));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto v = apply_transformer(t, raw[i]);
    for (std::size_t j = 0; j < v.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  return x;
}

std::array<double, kClassCount> row_of(const Matrix& m, Eigen::Index r) {
  std::array<double, kClassCount> out{};
  for (std::size_t k = 0; k < kClassCount; ++k) out[k] = m(r, static_cast<Eigen::Index>(k));
  return out;
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_rows(const json& j, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw DimensionError(static_cast<std::size_t>(cols), row.size());
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

std::string_view variant_name(Variant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

Variant variant_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == name) return static_cast<Variant>(i);
  }
  if (name == "ann") return Variant::mlp;
  throw DataError("unknown model '" + std::string(name) + "'; valid models: rf, adaboost, svm, logreg, mlp, cnn");
}

ModelSpec ModelSpec::defaults(Variant v, std::uint64_t seed) {
  ModelSpec spec;
  spec.variant = v;
  spec.seed = seed;
  return spec;
}

json spec_to_json(const ModelSpec& spec) {
  json j = {{"variant", variant_name(spec.variant)}, {"seed", spec.seed}};
  const auto& n = spec.net;
  const json training = {{"optimizer", "adam"},
                         {"learning_rate", n.learning_rate},
                         {"beta1", n.adam.beta1},
                         {"beta2", n.adam.beta2},
                         {"epsilon", n.adam.epsilon},
                         {"epochs", n.epochs},
                         {"batch_size", n.batch_size},
                         {"loss", "categorical_crossentropy"},
                         {"init", "glorot_uniform"}};
  switch (spec.variant) {
    case Variant::rf:
      j["rf"] = {{"trees", spec.rf.trees},
                 {"max_depth", spec.rf.max_depth},
                 {"features_per_split", spec.rf.features_per_split},
                 {"bootstrap", spec.rf.bootstrap},
                 {"criterion", "gini"}};
      break;
    case Variant::adaboost:
      j["adaboost"] = {{"rounds", spec.adaboost.rounds}, {"algorithm", "SAMME"}, {"base", "depth-1 stump"}};
      break;
    case Variant::svm:
      j["svm"] = {{"kernel", "polynomial"},
                  {"C", spec.svm.c},
                  {"degree", spec.svm.degree},
                  {"coef0", spec.svm.coef0},
                  {"gamma", spec.svm.gamma},
                  {"tol", spec.svm.tol},
                  {"max_iterations", spec.svm.max_iterations},
                  {"multiclass", "one-vs-rest"}};
      break;
    case Variant::logreg:
      j["logreg"] = {{"l2", spec.logreg.l2},
                     {"max_iterations", spec.logreg.max_iterations},
                     {"grad_tol", spec.logreg.grad_tol}};
      break;
    case Variant::mlp:
      j["mlp"] = {{"hidden", spec.mlp.hidden}, {"dropout_after", spec.mlp.dropout_after}, {"dropout", spec.mlp.dropout}};
      j["training"] = training;
      break;
    case Variant::cnn:
      j["cnn"] = {{"filters1", spec.cnn.filters1}, {"kernel1", spec.cnn.kernel1}, {"filters2", spec.cnn.filters2},
                  {"kernel2", spec.cnn.kernel2},   {"pool", spec.cnn.pool},       {"dropout", spec.cnn.dropout},
                  {"dense", spec.cnn.dense}};
      j["training"] = training;
      break;
  }
  return j;
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec = ModelSpec::defaults(variant_from_string(j.at("variant").get<std::string>()),
                                       j.value("seed", std::uint64_t{42}));
  if (j.contains("rf")) {
    const auto& r = j["rf"];
    spec.rf.trees = r.value("trees", spec.rf.trees);
    spec.rf.max_depth = r.value("max_depth", spec.rf.max_depth);
    spec.rf.features_per_split = r.value("features_per_split", spec.rf.features_per_split);
    spec.rf.bootstrap = r.value("bootstrap", spec.rf.bootstrap);
  }
  if (j.contains("adaboost")) spec.adaboost.rounds = j["adaboost"].value("rounds", spec.adaboost.rounds);
  if (j.contains("svm")) {
    const auto& s = j["svm"];
    spec.svm.c = s.value("C", spec.svm.c);
    spec.svm.degree = s.value("degree", spec.svm.degree);
    spec.svm.coef0 = s.value("coef0", spec.svm.coef0);
    spec.svm.gamma = s.value("gamma", spec.svm.gamma);
    spec.svm.tol = s.value("tol", spec.svm.tol);
    spec.svm.max_iterations = s.value("max_iterations", spec.svm.max_iterations);
  }
  if (j.contains("logreg")) {
    const auto& l = j["logreg"];
    spec.logreg.l2 = l.value("l2", spec.logreg.l2);
    spec.logreg.max_iterations = l.value("max_iterations", spec.logreg.max_iterations);
    spec.logreg.grad_tol = l.value("grad_tol", spec.logreg.grad_tol);
  }
  if (j.contains("mlp")) {
    const auto& m = j["mlp"];
    spec.mlp.hidden = m.value("hidden", spec.mlp.hidden);
    spec.mlp.dropout_after = m.value("dropout_after", spec.mlp.dropout_after);
    spec.mlp.dropout = m.value("dropout", spec.mlp.dropout);
  }
  if (j.contains("cnn")) {
    const auto& c = j["cnn"];
    spec.cnn.filters1 = c.value("filters1", spec.cnn.filters1);
    spec.cnn.kernel1 = c.value("kernel1", spec.cnn.kernel1);
    spec.cnn.filters2 = c.value("filters2", spec.cnn.filters2);
    spec.cnn.kernel2 = c.value("kernel2", spec.cnn.kernel2);
    spec.cnn.pool = c.value("pool", spec.cnn.pool);
    spec.cnn.dropout = c.value("dropout", spec.cnn.dropout);
    spec.cnn.dense = c.value("dense", spec.cnn.dense);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    spec.net.learning_rate = t.value("learning_rate", spec.net.learning_rate);
    spec.net.adam.beta1 = t.value("beta1", spec.net.adam.beta1);
    spec.net.adam.beta2 = t.value("beta2", spec.net.adam.beta2);
    spec.net.adam.epsilon = t.value("epsilon", spec.net.adam.epsilon);
    spec.net.epochs = t.value("epochs", spec.net.epochs);
    spec.net.batch_size = t.value("batch_size", spec.net.batch_size);
  }
  return spec;
}

TrainedModel train(const ModelSpec& spec, const Dataset& data) {
  if (data.classes_present() < 2) {
    throw DegenerateTrainingError("training data must contain at least two classes");
  }
  std::vector<FeatureVector> raw;
  raw.reserve(data.size());
  for (const auto& row : data.rows()) raw.push_back(vectorize(row.scan));

  TrainedModel model;
  model.spec = spec;
  model.transformer = fit_feature_transformer(raw);
  const Matrix x = transformed_matrix(model.transformer, raw);
  const std::vector<int> y = int_labels(data);

  json meta = {{"seed", spec.seed}, {"train_fingerprint", dataset_fingerprint(data)}, {"train_rows", data.size()}};
  switch (spec.variant) {
    case Variant::rf: {
      model.payload = ml::fit_forest(x, y, spec.rf, spec.seed);
      meta["features_per_split"] = spec.rf.features_per_split >= 0
                                       ? spec.rf.features_per_split
                                       : static_cast<int>(std::lround(std::sqrt(static_cast<double>(x.cols()))));
      break;
    }
    case Variant::adaboost: {
      ml::AdaBoostTrace trace;
      auto boosted = ml::fit_adaboost(x, y, spec.adaboost, spec.seed, &trace);
      meta["rounds_kept"] = boosted.stumps.size();
      model.payload = std::move(boosted);
      break;
    }
    case Variant::svm: {
      auto svm = ml::fit_svm(x, y, spec.svm);
      meta["converged"] = svm.converged;
      meta["gamma"] = svm.kernel.gamma;
      meta["support_vectors"] = svm.support.rows();
      model.payload = SvmPayload{std::move(svm)};
      break;
    }
    case Variant::logreg: {
      ml::LogRegTrace trace;
      model.payload = ml::train_logreg(x, y, spec.logreg, static_cast<int>(kClassCount), &trace);
      meta["converged"] = trace.converged;
      meta["iterations"] = trace.iterations;
      break;
    }
    case Variant::mlp:
    case Variant::cnn: {
      Rng rng(spec.seed);
      nn::Network net = spec.variant == Variant::mlp ? nn::build_mlp(x.cols(), kClassCount, spec.mlp, rng)
                                                     : nn::build_cnn(x.cols(), kClassCount, spec.cnn, rng);
      const Matrix xt = x.transpose();
      meta["epoch_losses"] = nn::train_network(net, xt, y, spec.net, rng);
      model.payload = NetworkPayload{std::move(net)};
      break;
    }
  }
  model.metadata = std::move(meta);
  return model;
}

namespace {

// Scores for a block of transformed rows (n x d); one row of class scores per input row.
Matrix batch_scores(const TrainedModel& model, const Matrix& x) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(kClassCount));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ml::Forest> || std::is_same_v<T, ml::AdaBoostModel>) {
          Vector row(x.cols());
          for (Eigen::Index i = 0; i < x.rows(); ++i) {
            row = x.row(i).transpose();
            const std::span<const double> r(row.data(), static_cast<std::size_t>(row.size()));
            std::array<double, kClassCount> s{};
            if constexpr (std::is_same_v<T, ml::Forest>) {
              s = p.vote_fractions(r);
            } else {
              s = p.class_scores(r);
            }
            for (std::size_t k = 0; k < kClassCount; ++k) out(i, static_cast<Eigen::Index>(k)) = s[k];
          }
        } else if constexpr (std::is_same_v<T, SvmPayload>) {
          out = p.model.decision_values(x);
        } else if constexpr (std::is_same_v<T, ml::SoftmaxLinear>) {
          out = p.scores(x);
        } else {
          out = p.network.infer(x.transpose()).transpose();
        }
      },
      model.payload);
  return out;
}

ProbabilityVector normalize_scores(const TrainedModel& model, const std::array<double, kClassCount>& scores) {
  if (std::holds_alternative<ml::Forest>(model.payload)) {
    double total = 0.0;
    for (double s : scores) total += s;
    ProbabilityVector p{};
    for (std::size_t k = 0; k < kClassCount; ++k) p[k] = scores[k] / total;
    return p;
  }
  return softmax(scores);
}

Matrix transform_scans(const TrainedModel& model, std::span<const Scan> scans) {
  std::vector<FeatureVector> raw;
  raw.reserve(scans.size());
  for (const auto& s : scans) raw.push_back(vectorize(s));
  return transformed_matrix(model.transformer, raw);
}

}  // namespace

std::array<double, kClassCount> decision_scores(const TrainedModel& model, std::span<const double> features) {
  const auto t = apply_transformer(model.transformer, features);
  Eigen::Map<const Eigen::RowVectorXd> row(t.data(), static_cast<Eigen::Index>(t.size()));
  return row_of(batch_scores(model, Matrix(row)), 0);
}

std::vector<ProbabilityVector> predict_proba_batch(const TrainedModel& model, std::span<const Scan> scans) {
  if (scans.empty()) return {};
  const Matrix scores = batch_scores(model, transform_scans(model, scans));
  std::vector<ProbabilityVector> out;
  out.reserve(scans.size());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) out.push_back(normalize_scores(model, row_of(scores, i)));
  return out;
}

ProbabilityVector predict_proba(const TrainedModel& model, const Scan& scan) {
  return predict_proba_batch(model, std::span<const Scan>(&scan, 1)).front();
}

ClassLabel label_from_proba(const ProbabilityVector& p) { return static_cast<ClassLabel>(argmax(p)); }

ClassLabel predict_label(const TrainedModel& model, const Scan& scan) {
  return label_from_proba(predict_proba(model, scan));
}

json model_to_json(const TrainedModel& model) {
  json payload;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ml::Forest>) {
          json trees = json::array();
          for (const auto& t : p.trees) trees.push_back(ml::tree_to_json(t));
          payload = {{"trees", trees}};
        } else if constexpr (std::is_same_v<T, ml::AdaBoostModel>) {
          json stumps = json::array();
          for (const auto& t : p.stumps) stumps.push_back(ml::tree_to_json(t));
          payload = {{"stumps", stumps}, {"alphas", p.alphas}};
        } else if constexpr (std::is_same_v<T, SvmPayload>) {
          const auto& m = p.model;
          payload = {{"gamma", m.kernel.gamma}, {"coef0", m.kernel.coef0}, {"degree", m.kernel.degree},
                     {"support", matrix_rows(m.support)}, {"coef", matrix_rows(m.coef)}, {"bias", m.bias},
                     {"converged", m.converged}};
        } else if constexpr (std::is_same_v<T, ml::SoftmaxLinear>) {
          payload = {{"weights", matrix_rows(p.weights)}, {"bias", matrix_rows(p.bias)}};
        } else {
          payload = p.network.to_json();
        }
      },
      model.payload);
  return {{"format_version", kModelFormatVersion},
          {"spec", spec_to_json(model.spec)},
          {"transformer", transformer_to_json(model.transformer)},
          {"payload", payload},
          {"metadata", model.metadata}};
}

TrainedModel model_from_json(const json& j) {
  if (j.value("format_version", 0) != kModelFormatVersion) {
    throw DataError("unsupported model format_version");
  }
  TrainedModel model;
  model.spec = spec_from_json(j.at("spec"));
  model.transformer = transformer_from_json(j.at("transformer"));
  model.metadata = j.value("metadata", json::object());
  const auto& p = j.at("payload");
  const auto dim = static_cast<Eigen::Index>(model.transformer.dimension());
  switch (model.spec.variant) {
    case Variant::rf: {
      ml::Forest forest;
      for (const auto& t : p.at("trees")) forest.trees.push_back(ml::tree_from_json(t));
      model.payload = std::move(forest);
      break;
    }
    case Variant::adaboost: {
      ml::AdaBoostModel boosted;
      for (const auto& t : p.at("stumps")) boosted.stumps.push_back(ml::tree_from_json(t));
      boosted.alphas = p.at("alphas").get<std::vector<double>>();
      model.payload = std::move(boosted);
      break;
    }
    case Variant::svm: {
      ml::SvmModel m;
      m.kernel = {p.at("gamma").get<double>(), p.at("coef0").get<double>(), p.at("degree").get<int>()};
      m.support = matrix_from_rows(p.at("support"), dim);
      m.coef = matrix_from_rows(p.at("coef"), static_cast<Eigen::Index>(kClassCount));
      m.bias = p.at("bias").get<std::array<double, kClassCount>>();
      m.converged = p.at("converged").get<std::array<bool, kClassCount>>();
      model.payload = SvmPayload{std::move(m)};
      break;
    }
    case Variant::logreg: {
      ml::SoftmaxLinear lin;
      lin.weights = matrix_from_rows(p.at("weights"), dim);
      lin.bias = matrix_from_rows(p.at("bias"), 1).col(0);
      model.payload = std::move(lin);
      break;
    }
    case Variant::mlp:
    case Variant::cnn:
      model.payload = NetworkPayload{nn::Network::from_json(p)};
      break;
  }
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model).dump() + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const json::exception& e) {
    throw DataError("model file '" + path.string() + "' is malformed: " + e.what());
  }
}

}  // namespace clutter
