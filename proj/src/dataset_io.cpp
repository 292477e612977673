#include "clutter/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>

#include "clutter/errors.hpp"

namespace clutter {

namespace {

std::string beam_column(std::size_t k) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "d%03zu", k);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

struct ColumnMap {
  std::size_t label = 0;
  std::optional<std::size_t> height;
  std::array<std::size_t, kBeamCount> beams{};
  std::size_t width = 0;
};

ColumnMap map_header(std::string_view header_line) {
  const auto cols = split_commas(header_line);
  std::map<std::string, std::size_t, std::less<>> index;
  std::vector<std::string> unknown;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    std::string name(cols[i]);
    if (i == 0 && name.size() >= 3 && name.compare(0, 3, "\xEF\xBB\xBF") == 0) name.erase(0, 3);
    if (!index.emplace(name, i).second) throw SchemaError("duplicate column '" + name + "' in header");
  }
  ColumnMap map;
  map.width = cols.size();
  std::vector<std::string> missing;
  if (auto it = index.find("label"); it != index.end()) {
    map.label = it->second;
  } else {
    missing.emplace_back("label");
  }
  if (auto it = index.find("height_m"); it != index.end()) map.height = it->second;
  for (std::size_t k = 0; k < kBeamCount; ++k) {
    auto it = index.find(beam_column(k));
    if (it == index.end()) {
      missing.push_back(beam_column(k));
    } else {
      map.beams[k] = it->second;
    }
  }
  for (const auto& [name, _] : index) {
    bool known = name == "label" || name == "height_m";
    if (!known && name.size() == 4 && name[0] == 'd') {
      auto k = parse_number(std::string_view(name).substr(1));
      known = k && *k >= 0 && *k < static_cast<double>(kBeamCount) && beam_column(static_cast<std::size_t>(*k)) == name;
    }
    if (!known) unknown.push_back(name);
  }
  if (!missing.empty() || !unknown.empty()) {
    std::string msg = "malformed header;";
    if (!missing.empty()) {
      msg += " missing columns:";
      const std::size_t shown = std::min<std::size_t>(missing.size(), 12);
      for (std::size_t i = 0; i < shown; ++i) msg += " " + missing[i];
      if (missing.size() > shown) msg += " ... (" + std::to_string(missing.size()) + " total)";
      msg += ";";
    }
    if (!unknown.empty()) {
      msg += " unexpected columns:";
      for (const auto& u : unknown) msg += " " + u;
    }
    throw SchemaError(msg);
  }
  return map;
}

}  // namespace

std::string canonical_header() {
  std::string header = "label,height_m";
  for (std::size_t k = 0; k < kBeamCount; ++k) header += "," + beam_column(k);
  return header;
}

std::string format_fixed4(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 4);
  if (ec != std::errc()) throw Error("cannot format number");
  std::string out(buf, ptr);
  if (out == "-0.0000") out = "0.0000";
  return out;
}

Dataset parse_dataset(std::istream& in, std::string provenance) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<ColumnMap> columns;
  std::vector<LabeledScan> rows;
  std::vector<double> ranges(kBeamCount);
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!columns) {
      columns = map_header(line);
      continue;
    }
    const auto cells = split_commas(line);
    if (cells.size() != columns->width) {
      throw ParseError(line_no, "expected " + std::to_string(columns->width) + " fields, got " +
                                    std::to_string(cells.size()));
    }
    ClassLabel label;
    try {
      label = label_from_string(cells[columns->label]);
    } catch (const UnknownLabelError& e) {
      throw UnknownLabelError("line " + std::to_string(line_no) + ": " + e.what());
    }
    std::optional<double> height;
    if (columns->height && !cells[*columns->height].empty()) {
      height = parse_number(cells[*columns->height]);
      if (!height) throw ParseError(line_no, "unparseable height_m '" + std::string(cells[*columns->height]) + "'");
    }
    for (std::size_t k = 0; k < kBeamCount; ++k) {
      auto value = parse_number(cells[columns->beams[k]]);
      if (!value) {
        throw ParseError(line_no, "unparseable number '" + std::string(cells[columns->beams[k]]) +
                                      "' in column " + beam_column(k));
      }
      ranges[k] = *value;
    }
    try {
      rows.push_back({validate_scan(ranges, height), label});
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!columns) throw SchemaError("empty input: missing header");
  if (rows.empty()) throw DataError("dataset has a header but no data rows");
  return Dataset(std::move(rows), std::move(provenance));
}

Dataset parse_dataset_text(std::string_view text, std::string provenance) {
  std::istringstream in{std::string(text)};
  return parse_dataset(in, std::move(provenance));
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  out << canonical_header() << '\n';
  std::string line;
  for (const auto& row : dataset.rows()) {
    line.assign(label_name(row.label));
    line += ',';
    if (auto h = row.scan.height_m()) line += format_fixed4(*h);
    for (double r : row.scan.ranges()) {
      line += ',';
      line += format_fixed4(r);
    }
    line += '\n';
    out << line;
  }
}

std::string write_dataset_text(const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(dataset, out);
  return out.str();
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  try {
    return parse_dataset(in, path.string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  } catch (const UnknownLabelError& e) {
    throw UnknownLabelError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, write_dataset_text(dataset));
}

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary s;
  s.counts = dataset.class_counts();
  s.total = dataset.size();
  s.min.assign(kBeamCount, kMaxRange);
  s.max.assign(kBeamCount, kMinRange);
  s.mean.assign(kBeamCount, 0.0);
  for (const auto& row : dataset.rows()) {
    const auto& r = row.scan.ranges();
    for (std::size_t k = 0; k < kBeamCount; ++k) {
      s.min[k] = std::min(s.min[k], r[k]);
      s.max[k] = std::max(s.max[k], r[k]);
      s.mean[k] += r[k];
    }
  }
  for (std::size_t k = 0; k < kBeamCount; ++k) {
    s.mean[k] = std::clamp(s.mean[k] / static_cast<double>(s.total), s.min[k], s.max[k]);
  }
  return s;
}

nlohmann::json summary_to_json(const DatasetSummary& summary) {
  nlohmann::json counts = nlohmann::json::object();
  for (auto c : kAllLabels) counts[std::string(label_name(c))] = summary.counts[static_cast<std::size_t>(label_index(c))];
  return {{"total", summary.total},
          {"counts", counts},
          {"features", {{"min", summary.min}, {"max", summary.max}, {"mean", summary.mean}}}};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string dataset_fingerprint(const Dataset& dataset) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(write_dataset_text(dataset))));
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace clutter
