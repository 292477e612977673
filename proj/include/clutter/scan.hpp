#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace clutter {

// Sensor geometry: 271 beams at 1 degree pitch covering -135..+135 degrees.
inline constexpr std::size_t kBeamCount = 271;
inline constexpr double kMinRange = 0.001;
inline constexpr double kMaxRange = 30.0;
inline constexpr double kFirstBeamDeg = -135.0;
inline constexpr double kBeamStepDeg = 1.0;

inline constexpr std::size_t kClassCount = 4;

enum class ClassLabel : int { corridor = 0, staircase = 1, restroom = 2, shared_space = 3 };

inline constexpr std::array<ClassLabel, kClassCount> kAllLabels = {
    ClassLabel::corridor, ClassLabel::staircase, ClassLabel::restroom, ClassLabel::shared_space};

inline constexpr int label_index(ClassLabel c) { return static_cast<int>(c); }

std::string_view label_name(ClassLabel c);

// Accepts canonical names case-insensitively with '-' or ' ' in place of '_'.
ClassLabel label_from_string(std::string_view text);
ClassLabel label_from_index(long long index);
ClassLabel label_codec(const std::variant<std::string, long long>& value);

// Bearing of beam k relative to the sensor heading, radians.
double beam_angle(std::size_t k);

// Clips one reading: <= kMinRange -> kMinRange, > kMaxRange or non-finite -> kMaxRange.
double clip_range(double r);

// A single 271-beam range slice. Beam order is taken as given: beam 0 is the
// most clockwise bearing when angles increase counter-clockwise.
class Scan {
 public:
  const std::vector<double>& ranges() const { return ranges_; }
  std::optional<double> height_m() const { return height_m_; }
  double operator[](std::size_t k) const { return ranges_[k]; }
  std::size_t size() const { return ranges_.size(); }

  friend bool operator==(const Scan&, const Scan&) = default;

 private:
  friend Scan validate_scan(std::span<const double> raw, std::optional<double> height);
  Scan(std::vector<double> r, std::optional<double> h) : ranges_(std::move(r)), height_m_(h) {}

  std::vector<double> ranges_;
  std::optional<double> height_m_;
};

// Throws DimensionError for wrong length and DataError for a negative or
// non-finite height. Out-of-range readings are clipped, never rejected.
Scan validate_scan(std::span<const double> raw, std::optional<double> height = std::nullopt);

struct LabeledScan {
  Scan scan;
  ClassLabel label;

  friend bool operator==(const LabeledScan&, const LabeledScan&) = default;
};

class Dataset {
 public:
  // Throws DataError when rows is empty.
  Dataset(std::vector<LabeledScan> rows, std::string provenance);

  const std::vector<LabeledScan>& rows() const { return rows_; }
  const std::string& provenance() const { return provenance_; }
  std::size_t size() const { return rows_.size(); }
  const LabeledScan& operator[](std::size_t i) const { return rows_[i]; }

  std::array<std::size_t, kClassCount> class_counts() const;
  std::size_t classes_present() const;
  std::vector<ClassLabel> labels() const;
  Dataset subset(std::span<const std::size_t> indices) const;

  // Provenance is a free-text tag and is not part of value equality.
  friend bool operator==(const Dataset& a, const Dataset& b) { return a.rows_ == b.rows_; }

 private:
  std::vector<LabeledScan> rows_;
  std::string provenance_;
};

}  // namespace clutter
