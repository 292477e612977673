#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "clutter/adaboost.hpp"
#include "clutter/features.hpp"
#include "clutter/linalg.hpp"
#include "clutter/logreg.hpp"
#include "clutter/nn.hpp"
#include "clutter/svm.hpp"
#include "clutter/tree.hpp"

namespace clutter {

enum class Variant { rf, adaboost, svm, logreg, mlp, cnn };

inline constexpr std::array<Variant, 6> kAllVariants = {Variant::rf,     Variant::adaboost, Variant::svm,
                                                        Variant::logreg, Variant::mlp,      Variant::cnn};

std::string_view variant_name(Variant v);
// Throws UnknownLabelError-style DataError for unknown names.
Variant variant_from_string(std::string_view name);

// Hyperparameters for every variant; only the selected variant's block is
// used. Defaults are the standard configuration of each variant.
struct ModelSpec {
  Variant variant = Variant::rf;
  std::uint64_t seed = 42;
  ml::ForestParams rf;
  ml::AdaBoostParams adaboost;
  ml::SvmParams svm;
  ml::LogRegParams logreg;
  nn::MlpConfig mlp;
  nn::CnnConfig cnn;
  nn::TrainConfig net;

  static ModelSpec defaults(Variant v, std::uint64_t seed = 42);
};

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

struct SvmPayload {
  ml::SvmModel model;
};

struct NetworkPayload {
  nn::Network network;
};

using ModelPayload = std::variant<ml::Forest, ml::AdaBoostModel, SvmPayload, ml::SoftmaxLinear, NetworkPayload>;

struct TrainedModel {
  ModelSpec spec;
  FeatureTransformer transformer;
  ModelPayload payload;
  nlohmann::json metadata;
};

// Fits the transformer on `data`, then the selected learner. Throws
// DegenerateTrainingError when fewer than two classes are present.
TrainedModel train(const ModelSpec& spec, const Dataset& data);

// Raw per-class scores before normalization: vote fractions (rf), SAMME
// scores (adaboost), one-vs-rest decision values (svm), logits otherwise.
std::array<double, kClassCount> decision_scores(const TrainedModel& model, std::span<const double> features);

ProbabilityVector predict_proba(const TrainedModel& model, const Scan& scan);
// Row-wise probabilities for many scans in one pass.
std::vector<ProbabilityVector> predict_proba_batch(const TrainedModel& model, std::span<const Scan> scans);
ClassLabel predict_label(const TrainedModel& model, const Scan& scan);
// argmax with ties broken by the lowest class index.
ClassLabel label_from_proba(const ProbabilityVector& p);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

inline constexpr int kModelFormatVersion = 1;

}  // namespace clutter
