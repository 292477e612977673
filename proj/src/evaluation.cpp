#include "clutter/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "clutter/dataset_io.hpp"
#include "clutter/errors.hpp"

namespace clutter::eval {

using nlohmann::json;

std::vector<std::size_t> FoldAssignment::test_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::train_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) rows.push_back(i);
  }
  return rows;
}

FoldAssignment stratified_folds(std::span<const ClassLabel> labels, int k, std::uint64_t seed) {
  if (k < 2) throw StratificationError("need at least 2 folds, got " + std::to_string(k));
  std::array<std::vector<std::size_t>, kClassCount> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(label_index(labels[i]))].push_back(i);
  for (auto c : kAllLabels) {
    const auto n = members[static_cast<std::size_t>(label_index(c))].size();
    if (n > 0 && n < static_cast<std::size_t>(k)) {
      throw StratificationError("class " + std::string(label_name(c)) + " has " + std::to_string(n) +
                                " rows, fewer than the " + std::to_string(k) + " folds requested");
    }
  }
  FoldAssignment out;
  out.k = k;
  out.fold_of.assign(labels.size(), -1);
  const Rng root(seed);
  int next = 0;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    Rng rng = root.split(c);
    rng.shuffle(std::span<std::size_t>(members[c]));
    for (auto row : members[c]) {
      out.fold_of[row] = next;
      next = (next + 1) % k;
    }
  }
  return out;
}

double accuracy(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth) {
  if (predicted.size() != truth.size()) throw DimensionError(truth.size(), predicted.size());
  if (truth.empty()) throw DataError("accuracy of an empty prediction set is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const bool> positives) {
  if (scores.size() != positives.size()) throw DimensionError(positives.size(), scores.size());
  const auto total_pos = static_cast<std::size_t>(std::count(positives.begin(), positives.end(), true));
  if (total_pos == 0) throw UndefinedCurveError("precision-recall curve needs at least one positive row");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::vector<PrPoint> curve{{0.0, 1.0}};
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (positives[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.push_back({static_cast<double>(tp) / static_cast<double>(total_pos),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : curve) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

double average_precision(std::span<const double> scores, std::span<const bool> positives) {
  const auto curve = pr_curve(scores, positives);
  return average_precision(curve);
}

FoldStats fold_stats(std::span<const double> values) {
  FoldStats s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

VariantReport reduce_variant(std::string name, std::vector<double> folds, std::span<const ProbabilityVector> oof,
                             std::span<const ClassLabel> truth) {
  if (oof.size() != truth.size()) throw DimensionError(truth.size(), oof.size());
  VariantReport r;
  r.name = std::move(name);
  r.folds = std::move(folds);
  const auto stats = fold_stats(r.folds);
  r.mean = stats.mean;
  r.std = stats.std;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion[static_cast<std::size_t>(label_index(truth[i]))]
                 [static_cast<std::size_t>(label_index(label_from_proba(oof[i])))];
  }
  std::vector<double> scores(truth.size());
  std::unique_ptr<bool[]> positives(new bool[truth.size()]);
  for (auto c : kAllLabels) {
    ClassCurve cc;
    cc.label = c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      scores[i] = oof[i][static_cast<std::size_t>(label_index(c))];
      positives[i] = truth[i] == c;
    }
    const std::span<const bool> pos(positives.get(), truth.size());
    if (std::find(pos.begin(), pos.end(), true) != pos.end()) {
      cc.curve = pr_curve(scores, pos);
      cc.ap = average_precision(cc.curve);
      cc.defined = true;
    }
    r.per_class.push_back(std::move(cc));
  }
  r.oof_proba.assign(oof.begin(), oof.end());
  return r;
}

VariantReport cross_validate(const ModelSpec& spec, const Dataset& dataset, int k, std::uint64_t seed,
                             unsigned threads) {
  const auto labels = dataset.labels();
  const FoldAssignment folds = stratified_folds(labels, k, seed);
  std::vector<double> fold_acc(static_cast<std::size_t>(k), 0.0);
  std::vector<ProbabilityVector> oof(dataset.size());

  std::vector<Scan> scans;
  scans.reserve(dataset.size());
  for (const auto& row : dataset.rows()) scans.push_back(row.scan);

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int f = next++; f < k; f = next++) {
      try {
        const auto train_rows = folds.train_rows(f);
        const auto test_rows = folds.test_rows(f);
        ModelSpec fold_spec = spec;
        fold_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(f));
        const TrainedModel model = train(fold_spec, dataset.subset(train_rows));
        std::vector<Scan> test_scans;
        test_scans.reserve(test_rows.size());
        for (auto i : test_rows) test_scans.push_back(scans[i]);
        const auto proba = predict_proba_batch(model, test_scans);
        std::vector<ClassLabel> predicted;
        std::vector<ClassLabel> truth;
        for (std::size_t t = 0; t < test_rows.size(); ++t) {
          oof[test_rows[t]] = proba[t];
          predicted.push_back(label_from_proba(proba[t]));
          truth.push_back(labels[test_rows[t]]);
        }
        fold_acc[static_cast<std::size_t>(f)] = accuracy(predicted, truth);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!error) {
          try {
            throw Error("fold " + std::to_string(f + 1) + " of " + std::string(variant_name(spec.variant)) +
                        ": " + e.what());
          } catch (...) {
            error = std::current_exception();
          }
        }
      }
    }
  };
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(k));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  VariantReport report = reduce_variant(std::string(variant_name(spec.variant)), fold_acc, oof, labels);
  report.spec = spec_to_json(spec);
  return report;
}

Report run_report(std::span<const ModelSpec> specs, const Dataset& dataset, int k, std::uint64_t seed,
                  unsigned threads) {
  Report report;
  report.dataset_fingerprint = dataset_fingerprint(dataset);
  report.seed = seed;
  report.folds = k;
  report.config = {{"rows", dataset.size()},
                   {"std_estimator", "sample (n-1)"},
                   {"pr_pooling", "out-of-fold predictions pooled across folds"},
                   {"auc", "average precision, step-wise"}};
  for (const auto& spec : specs) report.variants.push_back(cross_validate(spec, dataset, k, seed, threads));
  return report;
}

json report_to_json(const Report& report) {
  json variants = json::array();
  for (const auto& v : report.variants) {
    json per_class = json::array();
    for (const auto& c : v.per_class) {
      json curve = json::array();
      for (const auto& p : c.curve) curve.push_back({p.recall, p.precision});
      per_class.push_back({{"label", label_name(c.label)}, {"ap", c.defined ? json(c.ap) : json(nullptr)}, {"curve", curve}});
    }
    json confusion = json::array();
    for (const auto& row : v.confusion) confusion.push_back(row);
    variants.push_back({{"name", v.name},
                        {"folds", v.folds},
                        {"mean", v.mean},
                        {"std", v.std},
                        {"per_class", per_class},
                        {"confusion", confusion},
                        {"spec", v.spec}});
  }
  return {{"dataset_fingerprint", report.dataset_fingerprint},
          {"seed", report.seed},
          {"k", report.folds},
          {"config", report.config},
          {"variants", variants}};
}

Report report_from_json(const json& j) {
  Report report;
  report.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.folds = j.value("k", 0);
  report.config = j.value("config", json::object());
  for (const auto& v : j.at("variants")) {
    VariantReport r;
    r.name = v.at("name").get<std::string>();
    r.folds = v.at("folds").get<std::vector<double>>();
    r.mean = v.at("mean").get<double>();
    r.std = v.at("std").get<double>();
    r.spec = v.value("spec", json::object());
    for (const auto& c : v.at("per_class")) {
      ClassCurve cc;
      cc.label = label_from_string(c.at("label").get<std::string>());
      cc.defined = !c.at("ap").is_null();
      cc.ap = cc.defined ? c.at("ap").get<double>() : 0.0;
      for (const auto& p : c.at("curve")) cc.curve.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      r.per_class.push_back(std::move(cc));
    }
    const auto& conf = v.at("confusion");
    for (std::size_t a = 0; a < kClassCount; ++a) {
      for (std::size_t b = 0; b < kClassCount; ++b) r.confusion[a][b] = conf.at(a).at(b).get<std::size_t>();
    }
    report.variants.push_back(std::move(r));
  }
  return report;
}

}  // namespace clutter::eval
