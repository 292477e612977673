#include "clutter/report.hpp"

#include <charconv>
#include <cstdio>

#include "clutter/dataset_io.hpp"

namespace clutter::eval {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

constexpr int kWidth = 800;
constexpr int kHeight = 600;
constexpr double kLeft = 80.0;
constexpr double kRight = 220.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 70.0;

constexpr const char* kColors[kClassCount] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

double px(double recall) { return kLeft + recall * (kWidth - kLeft - kRight); }
double py(double precision) { return kTop + (1.0 - precision) * (kHeight - kTop - kBottom); }

}  // namespace

std::string accuracy_csv(const Report& report) {
  std::size_t k = static_cast<std::size_t>(report.folds);
  for (const auto& v : report.variants) k = std::max(k, v.folds.size());
  std::string out = "classifier";
  for (std::size_t f = 1; f <= k; ++f) out += ",fold" + std::to_string(f);
  out += ",mean,std\n";
  for (const auto& v : report.variants) {
    out += v.name;
    for (std::size_t f = 0; f < k; ++f) out += "," + (f < v.folds.size() ? shortest(v.folds[f]) : std::string());
    out += "," + shortest(v.mean) + "," + shortest(v.std) + "\n";
  }
  return out;
}

std::string pr_svg(const VariantReport& variant) {
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) + "\" height=\"" +
       std::to_string(kHeight) + "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " + std::to_string(kHeight) +
       "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(kWidth) + "\" height=\"" + std::to_string(kHeight) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(0.5 * (kLeft + kWidth - kRight), 1) + "\" y=\"30\" text-anchor=\"middle\" " +
       "font-family=\"sans-serif\" font-size=\"18\">" + variant.name + ": precision-recall (out-of-fold)</text>\n";

  // Axes and ticks.
  s += "<g stroke=\"black\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + fixed(px(0), 1) + "\" y1=\"" + fixed(py(0), 1) + "\" x2=\"" + fixed(px(1), 1) + "\" y2=\"" +
       fixed(py(0), 1) + "\"/>\n";
  s += "<line x1=\"" + fixed(px(0), 1) + "\" y1=\"" + fixed(py(0), 1) + "\" x2=\"" + fixed(px(0), 1) + "\" y2=\"" +
       fixed(py(1), 1) + "\"/>\n";
  for (int t = 0; t <= 10; t += 2) {
    const double v = t / 10.0;
    s += "<line x1=\"" + fixed(px(v), 1) + "\" y1=\"" + fixed(py(0), 1) + "\" x2=\"" + fixed(px(v), 1) + "\" y2=\"" +
         fixed(py(0) + 5, 1) + "\"/>\n";
    s += "<line x1=\"" + fixed(px(0) - 5, 1) + "\" y1=\"" + fixed(py(v), 1) + "\" x2=\"" + fixed(px(0), 1) +
         "\" y2=\"" + fixed(py(v), 1) + "\"/>\n";
  }
  s += "</g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int t = 0; t <= 10; t += 2) {
    const double v = t / 10.0;
    s += "<text x=\"" + fixed(px(v), 1) + "\" y=\"" + fixed(py(0) + 20, 1) + "\" text-anchor=\"middle\">" +
         fixed(v, 1) + "</text>\n";
    s += "<text x=\"" + fixed(px(0) - 10, 1) + "\" y=\"" + fixed(py(v) + 4, 1) + "\" text-anchor=\"end\">" +
         fixed(v, 1) + "</text>\n";
  }
  s += "<text x=\"" + fixed(px(0.5), 1) + "\" y=\"" + fixed(kHeight - 20.0, 1) +
       "\" text-anchor=\"middle\" font-size=\"14\">Recall</text>\n";
  s += "<text x=\"20\" y=\"" + fixed(py(0.5), 1) + "\" text-anchor=\"middle\" font-size=\"14\" " +
       "transform=\"rotate(-90 20 " + fixed(py(0.5), 1) + ")\">Precision</text>\n</g>\n";

  // Step curves: precision holds until the next recall level is reached.
  for (std::size_t c = 0; c < variant.per_class.size() && c < kClassCount; ++c) {
    const auto& cc = variant.per_class[c];
    std::string d;
    if (cc.curve.empty()) {
      d = "M " + fixed(px(0), 2) + " " + fixed(py(1), 2);
    } else {
      d = "M " + fixed(px(cc.curve.front().recall), 2) + " " + fixed(py(cc.curve.front().precision), 2);
      for (std::size_t i = 1; i < cc.curve.size(); ++i) {
        d += " H " + fixed(px(cc.curve[i].recall), 2) + " V " + fixed(py(cc.curve[i].precision), 2);
      }
    }
    s += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + kColors[c] + "\" stroke-width=\"2\"/>\n";
  }

  s += "<g font-family=\"sans-serif\" font-size=\"13\">\n";
  for (std::size_t c = 0; c < variant.per_class.size() && c < kClassCount; ++c) {
    const auto& cc = variant.per_class[c];
    const double y = kTop + 20.0 + 24.0 * static_cast<double>(c);
    const double x = kWidth - kRight + 20.0;
    s += "<rect x=\"" + fixed(x, 1) + "\" y=\"" + fixed(y - 10, 1) + "\" width=\"14\" height=\"14\" fill=\"" +
         kColors[c] + "\"/>\n";
    s += "<text x=\"" + fixed(x + 20, 1) + "\" y=\"" + fixed(y + 2, 1) + "\">" + std::string(label_name(cc.label)) +
         " (AP=" + (cc.defined ? fixed(cc.ap, 3) : std::string("n/a")) + ")</text>\n";
  }
  s += "<text x=\"" + fixed(kWidth - kRight + 20.0, 1) + "\" y=\"" + fixed(kTop + 130.0, 1) +
       "\" font-size=\"11\" fill=\"#555\">AP: step-wise area</text>\n";
  s += "</g>\n</svg>\n";
  return s;
}

std::vector<std::filesystem::path> render_report(const Report& report, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  const auto json_path = dir / "report.json";
  write_file_atomic(json_path, report_to_json(report).dump(2) + "\n");
  written.push_back(json_path);
  const auto csv_path = dir / "accuracy.csv";
  write_file_atomic(csv_path, accuracy_csv(report));
  written.push_back(csv_path);
  for (const auto& v : report.variants) {
    const auto svg_path = dir / (v.name + "_pr.svg");
    write_file_atomic(svg_path, pr_svg(v));
    written.push_back(svg_path);
  }
  return written;
}

}  // namespace clutter::eval
