#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "clutter/dataset_io.hpp"
#include "clutter/errors.hpp"
#include "clutter/evaluation.hpp"
#include "clutter/report.hpp"
#include "test_support.hpp"

using namespace clutter;
using namespace clutter::eval;

namespace {

// std::vector<bool> is not contiguous, so positives live in a plain array.
class Flags {
 public:
  explicit Flags(std::size_t n) : data_(new bool[n]()), n_(n) {}
  Flags(std::initializer_list<bool> init) : Flags(init.size()) { std::copy(init.begin(), init.end(), data_.get()); }
  bool& operator[](std::size_t i) { return data_[i]; }
  bool operator[](std::size_t i) const { return data_[i]; }
  std::size_t size() const { return n_; }
  operator std::span<const bool>() const { return {data_.get(), n_}; }

 private:
  std::unique_ptr<bool[]> data_;
  std::size_t n_;
};

std::vector<ClassLabel> labels_with_counts(std::array<int, 4> counts, Rng& rng) {
  std::vector<ClassLabel> out;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) out.push_back(label_from_index(c));
  }
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
  return out;
}

// Brute force: threshold at every distinct score, counting everything >= t.
std::vector<PrPoint> pr_oracle(const std::vector<double>& s, const Flags& pos) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  const double total = static_cast<double>(std::ranges::count(std::span<const bool>(pos), true));
  std::vector<PrPoint> out = {{0.0, 1.0}};
  for (double t : thresholds) {
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (pos[i] ? tp : fp) += 1.0;
    }
    out.push_back({tp / total, tp / (tp + fp)});
  }
  return out;
}

double ap_oracle(const std::vector<PrPoint>& c) {
  double ap = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) ap += (c[i].recall - c[i - 1].recall) * c[i].precision;
  return ap;
}

ModelSpec quick_spec(Variant v) {
  ModelSpec spec = ModelSpec::defaults(v, 5);
  spec.rf.trees = 10;
  spec.adaboost.rounds = 10;
  spec.logreg.max_iterations = 100;
  spec.net.epochs = 2;
  return spec;
}

// Minimal XML well-formedness: balanced tags, attributes quoted.
bool balanced_xml(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = text.find('<', i)) != std::string::npos) {
    const std::size_t end = text.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = text.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
    if (tag.back() == '/') continue;
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      stack.push_back(tag.substr(0, tag.find_first_of(" \t\n")));
    }
  }
  return stack.empty();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t i = text.find(needle); i != std::string::npos; i = text.find(needle, i + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("balanced classes split evenly") {
  Rng rng(1);
  const auto labels = labels_with_counts({25, 25, 25, 25}, rng);
  const FoldAssignment f = stratified_folds(labels, 5, 42);
  for (int fold = 0; fold < 5; ++fold) {
    std::array<int, 4> per{};
    for (std::size_t r : f.test_rows(fold)) ++per[static_cast<std::size_t>(label_index(labels[r]))];
    CHECK(per == std::array<int, 4>{5, 5, 5, 5});
    CHECK(f.train_rows(fold).size() == 80);
  }
}

TEST_CASE("fold sizes differ by at most one, overall and per class") {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    std::array<int, 4> counts{};
    const int k = static_cast<int>(rng.uniform_int(2, 10));
    for (auto& c : counts) c = rng.bernoulli(0.2) ? 0 : static_cast<int>(rng.uniform_int(k, 60));
    if (std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; })) counts[0] = k;
    const auto labels = labels_with_counts(counts, rng);
    const FoldAssignment f = stratified_folds(labels, k, rng.next_u64());
    std::vector<std::array<int, 4>> per(static_cast<std::size_t>(k));
    std::vector<int> total(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const int fold = f.fold_of[r];
      REQUIRE((fold >= 0 && fold < k));
      ++per[static_cast<std::size_t>(fold)][static_cast<std::size_t>(label_index(labels[r]))];
      ++total[static_cast<std::size_t>(fold)];
    }
    CHECK(*std::max_element(total.begin(), total.end()) - *std::min_element(total.begin(), total.end()) <= 1);
    for (std::size_t c = 0; c < 4; ++c) {
      int lo = 1 << 30;
      int hi = 0;
      for (const auto& p : per) {
        lo = std::min(lo, p[c]);
        hi = std::max(hi, p[c]);
      }
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("uneven counts") {
  Rng rng(3);
  const auto labels = labels_with_counts({26, 26, 26, 25}, rng);
  const FoldAssignment f = stratified_folds(labels, 5, 42);
  for (int fold = 0; fold < 5; ++fold) {
    const auto n = f.test_rows(fold).size();
    CHECK((n == 20 || n == 21));
  }
}

TEST_CASE("fold assignment is deterministic and seed dependent") {
  Rng rng(4);
  const auto labels = labels_with_counts({30, 30, 30, 30}, rng);
  CHECK(stratified_folds(labels, 5, 42).fold_of == stratified_folds(labels, 5, 42).fold_of);
  CHECK(stratified_folds(labels, 5, 42).fold_of != stratified_folds(labels, 5, 43).fold_of);
}

TEST_CASE("too few rows for a class") {
  Rng rng(5);
  const auto labels = labels_with_counts({10, 3, 10, 10}, rng);
  try {
    (void)stratified_folds(labels, 5, 1);
    FAIL("expected StratificationError");
  } catch (const StratificationError& e) {
    CHECK(std::string(e.what()).find("staircase") != std::string::npos);
  }
  CHECK_THROWS_AS(stratified_folds(labels, 1, 1), DataError);
}

TEST_CASE("accuracy") {
  using L = ClassLabel;
  const std::vector<L> truth = {L::corridor, L::restroom, L::staircase, L::shared_space};
  CHECK(accuracy(truth, truth) == 1.0);
  const std::vector<L> half = {L::corridor, L::corridor, L::staircase, L::corridor};
  CHECK(accuracy(half, truth) == 0.5);
  CHECK_THROWS_AS(accuracy(std::vector<L>{L::corridor}, truth), DimensionError);
}

TEST_CASE("worked PR example") {
  const std::vector<double> s = {0.9, 0.8, 0.7, 0.1};
  const Flags pos = {true, false, true, false};
  const auto curve = pr_curve(s, pos);
  const std::vector<std::pair<double, double>> want = {{0, 1}, {0.5, 1}, {0.5, 0.5}, {1, 2.0 / 3.0}, {1, 0.5}};
  REQUIRE(curve.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(curve[i].recall == doctest::Approx(want[i].first));
    CHECK(curve[i].precision == doctest::Approx(want[i].second));
  }
  CHECK(average_precision(s, pos) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("pr curve matches exhaustive thresholding, including ties") {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 40));
    std::vector<double> s(n);
    Flags pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.uniform_int(0, 10)) / 10.0;
      pos[i] = rng.bernoulli(0.4);
    }
    pos[rng.below(n)] = true;
    const auto got = pr_curve(s, pos);
    const auto want = pr_oracle(s, pos);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].recall == doctest::Approx(want[i].recall).epsilon(1e-12));
      CHECK(got[i].precision == doctest::Approx(want[i].precision).epsilon(1e-12));
    }
    CHECK(average_precision(s, pos) == doctest::Approx(ap_oracle(want)).epsilon(1e-12));
  }
}

TEST_CASE("AP is invariant under strictly increasing score maps") {
  Rng rng(7);
  std::vector<double> s(300);
  Flags pos(300);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    pos[i] = rng.bernoulli(0.3 + 0.4 * s[i]);
  }
  std::vector<double> mapped(s.size());
  std::transform(s.begin(), s.end(), mapped.begin(), [](double v) { return std::exp(3.0 * v) - 7.0; });
  CHECK(average_precision(mapped, pos) == doctest::Approx(average_precision(s, pos)).epsilon(1e-12));
}

TEST_CASE("random scores give AP near prevalence") {
  Rng rng(8);
  std::vector<double> s(10000);
  Flags pos(10000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    pos[i] = rng.bernoulli(0.3);
  }
  CHECK(std::abs(average_precision(s, pos) - 0.3) <= 0.03);
}

TEST_CASE("no positives") {
  const std::vector<double> s = {0.1, 0.2};
  const Flags pos = {false, false};
  CHECK_THROWS_AS(pr_curve(s, pos), UndefinedCurveError);
}

TEST_CASE("fold statistics") {
  const std::vector<double> v = {0.907, 0.88, 0.94, 0.96, 0.94};
  const FoldStats st = fold_stats(v);
  double mean = 0.0;
  for (double x : v) mean += x / 5.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  CHECK(st.mean == doctest::Approx(0.9254).epsilon(1e-12));
  CHECK(st.std == doctest::Approx(std::sqrt(ss / 4.0)).epsilon(1e-12));
  CHECK(st.std == doctest::Approx(0.0317).epsilon(1e-3));
  const std::vector<double> one = {0.5};
  CHECK(fold_stats(one).std == 0.0);
}

TEST_CASE("each fold is trained on its training rows only") {
  const Dataset data = testsupport::separable_dataset(10, 9, 0.6);
  const ModelSpec spec = quick_spec(Variant::logreg);
  const VariantReport rep = cross_validate(spec, data, 4, 11, 1);
  std::vector<ClassLabel> labels;
  for (const auto& row : data.rows()) labels.push_back(row.label);
  const FoldAssignment folds = stratified_folds(labels, 4, 11);
  REQUIRE(rep.folds.size() == 4);
  for (int f = 0; f < 4; ++f) {
    ModelSpec fold_spec = spec;
    fold_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(f));
    const auto train_rows = folds.train_rows(f);
    const TrainedModel model = train(fold_spec, data.subset(train_rows));
    std::size_t correct = 0;
    const auto test_rows = folds.test_rows(f);
    std::vector<Scan> scans;
    for (std::size_t r : test_rows) scans.push_back(data.rows()[r].scan);
    const auto proba = predict_proba_batch(model, scans);
    for (std::size_t t = 0; t < test_rows.size(); ++t) {
      const std::size_t r = test_rows[t];
      correct += label_from_proba(proba[t]) == labels[r];
      CHECK(rep.oof_proba[r] == proba[t]);
    }
    CHECK(rep.folds[static_cast<std::size_t>(f)] ==
          static_cast<double>(correct) / static_cast<double>(test_rows.size()));
  }
}

TEST_CASE("cross validation does not depend on the thread count") {
  const Dataset data = testsupport::separable_dataset(8, 10, 0.8);
  const VariantReport a = cross_validate(quick_spec(Variant::rf), data, 4, 3, 1);
  const VariantReport b = cross_validate(quick_spec(Variant::rf), data, 4, 3, 3);
  CHECK(a.folds == b.folds);
  CHECK(a.oof_proba == b.oof_proba);
}

TEST_CASE("reducer rebuilds the variant summary") {
  const Dataset data = testsupport::separable_dataset(8, 12, 0.8);
  const VariantReport rep = cross_validate(quick_spec(Variant::adaboost), data, 4, 3, 1);
  std::vector<ClassLabel> truth;
  for (const auto& row : data.rows()) truth.push_back(row.label);
  const VariantReport again = reduce_variant(rep.name, rep.folds, rep.oof_proba, truth);
  CHECK(again.mean == rep.mean);
  CHECK(again.std == rep.std);
  CHECK(again.confusion == rep.confusion);
  REQUIRE(again.per_class.size() == rep.per_class.size());
  for (std::size_t c = 0; c < rep.per_class.size(); ++c) CHECK(again.per_class[c].ap == rep.per_class[c].ap);
  std::size_t total = 0;
  for (const auto& row : rep.confusion) {
    for (std::size_t n : row) total += n;
  }
  CHECK(total == data.size());
}

TEST_CASE("rendered report") {
  const Dataset data = testsupport::separable_dataset(6, 13, 0.8);
  std::vector<ModelSpec> specs;
  for (Variant v : kAllVariants) specs.push_back(quick_spec(v));
  const Report report = run_report(specs, data, 3, 42, 1);
  REQUIRE(report.variants.size() == 6);
  CHECK(report.dataset_fingerprint == dataset_fingerprint(data));

  testsupport::TempDir dir;
  const auto files = render_report(report, dir.path());
  CHECK(files.size() == 8);
  std::size_t svgs = 0;
  for (const auto& f : files) {
    CHECK(std::filesystem::exists(f));
    if (f.extension() == ".svg") {
      ++svgs;
      const std::string svg = read_file(f);
      CHECK(balanced_xml(svg));
      CHECK(count_of(svg, "<path") == 4);
      CHECK(count_of(svg, "AP=") == 4);
    }
  }
  CHECK(svgs == 6);

  std::istringstream csv(read_file(dir / "accuracy.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "classifier,fold1,fold2,fold3,mean,std");
  for (const auto& v : report.variants) {
    REQUIRE(std::getline(csv, line));
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    REQUIRE(cells.size() == 6);
    CHECK(cells[0] == v.name);
    std::vector<double> want = v.folds;
    want.push_back(v.mean);
    want.push_back(v.std);
    for (std::size_t i = 0; i < want.size(); ++i) {
      double got = 0.0;
      std::from_chars(cells[i + 1].data(), cells[i + 1].data() + cells[i + 1].size(), got);
      CHECK(got == want[i]);
    }
  }

  const auto j = nlohmann::json::parse(read_file(dir / "report.json"));
  CHECK(report_to_json(report_from_json(j)) == j);
  CHECK(j == report_to_json(report));
}

TEST_CASE("reducer with fold accuracies only") {
  const std::vector<double> folds = {0.907, 0.88, 0.94, 0.96, 0.94};
  const VariantReport r = reduce_variant("rf", folds, {}, {});
  CHECK(r.mean == doctest::Approx(0.9254));
  CHECK(r.per_class.size() == 4);
  CHECK_FALSE(r.per_class[0].defined);
  const std::vector<ProbabilityVector> one(1);
  CHECK_THROWS_AS(reduce_variant("rf", folds, one, {}), DimensionError);
}
