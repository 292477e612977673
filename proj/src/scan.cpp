#include "clutter/scan.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "clutter/errors.hpp"

namespace clutter {

namespace {

constexpr std::array<std::string_view, kClassCount> kNames = {"corridor", "staircase", "restroom",
                                                              "shared_space"};

std::string valid_labels_text() {
  return "valid labels: corridor, staircase, restroom, shared_space (or 0..3)";
}

}  // namespace

std::string_view label_name(ClassLabel c) { return kNames[static_cast<std::size_t>(label_index(c))]; }

ClassLabel label_from_string(std::string_view text) {
  std::string norm;
  norm.reserve(text.size());
  for (char ch : text) {
    if (ch == '-' || ch == ' ') {
      norm.push_back('_');
    } else {
      norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (norm == kNames[i]) return static_cast<ClassLabel>(i);
  }
  throw UnknownLabelError("unknown label '" + std::string(text) + "'; " + valid_labels_text());
}

ClassLabel label_from_index(long long index) {
  if (index < 0 || index >= static_cast<long long>(kClassCount)) {
    throw UnknownLabelError("unknown label index " + std::to_string(index) + "; " +
                            valid_labels_text());
  }
  return static_cast<ClassLabel>(index);
}

ClassLabel label_codec(const std::variant<std::string, long long>& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return label_from_string(*s);
  return label_from_index(std::get<long long>(value));
}

double beam_angle(std::size_t k) {
  return (kFirstBeamDeg + kBeamStepDeg * static_cast<double>(k)) * std::numbers::pi / 180.0;
}

double clip_range(double r) {
  if (!std::isfinite(r) || r > kMaxRange) return kMaxRange;
  if (r <= kMinRange) return kMinRange;
  return r;
}

Scan validate_scan(std::span<const double> raw, std::optional<double> height) {
  if (raw.size() != kBeamCount) throw DimensionError(kBeamCount, raw.size());
  if (height && (!std::isfinite(*height) || *height < 0.0)) {
    throw DataError("height_m must be a finite non-negative number");
  }
  std::vector<double> ranges(raw.size());
  std::transform(raw.begin(), raw.end(), ranges.begin(), clip_range);
  return Scan(std::move(ranges), height);
}

Dataset::Dataset(std::vector<LabeledScan> rows, std::string provenance)
    : rows_(std::move(rows)), provenance_(std::move(provenance)) {
  if (rows_.empty()) throw DataError("dataset must contain at least one row");
}

std::array<std::size_t, kClassCount> Dataset::class_counts() const {
  std::array<std::size_t, kClassCount> counts{};
  for (const auto& row : rows_) ++counts[static_cast<std::size_t>(label_index(row.label))];
  return counts;
}

std::size_t Dataset::classes_present() const {
  const auto counts = class_counts();
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto n) { return n > 0; }));
}

std::vector<ClassLabel> Dataset::labels() const {
  std::vector<ClassLabel> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(row.label);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<LabeledScan> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(rows_.at(i));
  return Dataset(std::move(picked), provenance_);
}

}  // namespace clutter
