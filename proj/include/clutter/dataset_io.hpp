#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clutter/scan.hpp"

namespace clutter {

// Canonical CSV: header `label,height_m,d000,...,d270`, fixed 4-decimal
// numbers, '\n' line endings. On input the height_m column is optional and
// columns are matched by name.
Dataset parse_dataset(std::istream& in, std::string provenance = "csv");
Dataset parse_dataset_text(std::string_view text, std::string provenance = "csv");
void write_dataset(const Dataset& dataset, std::ostream& out);
std::string write_dataset_text(const Dataset& dataset);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

std::string canonical_header();
std::string format_fixed4(double value);

struct DatasetSummary {
  std::array<std::size_t, kClassCount> counts{};
  std::size_t total = 0;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> mean;
};

DatasetSummary summarize(const Dataset& dataset);
nlohmann::json summary_to_json(const DatasetSummary& summary);

// FNV-1a over the canonical CSV bytes, as 16 hex digits.
std::string dataset_fingerprint(const Dataset& dataset);
std::uint64_t fnv1a64(std::string_view bytes);

// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace clutter
