#include "clutter/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "clutter/dataset_io.hpp"
#include "clutter/errors.hpp"
#include "clutter/evaluation.hpp"
#include "clutter/model.hpp"
#include "clutter/report.hpp"
#include "clutter/simulator.hpp"

namespace clutter::cli {

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::optional<int> trees;
  std::optional<int> rounds;
  std::optional<double> svm_c;
  std::optional<double> l2;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;

  void apply(ModelSpec& spec) const {
    if (trees) spec.rf.trees = *trees;
    if (rounds) spec.adaboost.rounds = *rounds;
    if (svm_c) spec.svm.c = *svm_c;
    if (l2) spec.logreg.l2 = *l2;
    if (epochs) spec.net.epochs = *epochs;
    if (batch_size) spec.net.batch_size = *batch_size;
    if (learning_rate) spec.net.learning_rate = *learning_rate;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (trees) j["trees"] = *trees;
    if (rounds) j["rounds"] = *rounds;
    if (svm_c) j["svm_c"] = *svm_c;
    if (l2) j["l2"] = *l2;
    if (epochs) j["epochs"] = *epochs;
    if (batch_size) j["batch_size"] = *batch_size;
    if (learning_rate) j["learning_rate"] = *learning_rate;
    return j;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--trees", o.trees, "rf: number of trees [default 100]")->check(CLI::PositiveNumber);
  cmd->add_option("--rounds", o.rounds, "adaboost: boosting rounds [default 200]")->check(CLI::PositiveNumber);
  cmd->add_option("--svm-c", o.svm_c, "svm: box constraint C [default 1.0]")->check(CLI::PositiveNumber);
  cmd->add_option("--l2", o.l2, "logreg: L2 penalty on weights [default 1e-4]")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", o.epochs, "mlp/cnn: training epochs [default 30]")->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", o.batch_size, "mlp/cnn: minibatch size in rows [default 32]")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--learning-rate", o.learning_rate, "mlp/cnn: Adam step size [default 0.01]")
      ->check(CLI::PositiveNumber);
}

std::vector<double> parse_values(std::string_view line, std::size_t line_no) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t end = line.find(',', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string cell(line.substr(pos, end - pos));
    while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back()))) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && std::isspace(static_cast<unsigned char>(cell[start]))) ++start;
    cell = cell.substr(start);
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      values.push_back(v);
    } catch (const std::exception&) {
      throw ParseError(line_no, "not a number: '" + cell + "'");
    }
    pos = end + 1;
  }
  return values;
}

// A headed CSV (first data row is used) or a bare line of 271 numbers.
Scan read_scan(const fs::path& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string first;
  std::getline(in, first);
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
  if (first.find("d000") != std::string::npos) {
    std::vector<std::string> names;
    std::stringstream hs(first);
    for (std::string cell; std::getline(hs, cell, ',');) names.push_back(cell);
    std::string row;
    std::size_t line_no = 1;
    while (std::getline(in, row)) {
      ++line_no;
      if (!row.empty() && row.back() == '\r') row.pop_back();
      if (!row.empty()) break;
    }
    if (row.empty()) throw DataError(path.string() + ": no data row");
    std::vector<std::string> cells;
    std::stringstream rs(row);
    for (std::string cell; std::getline(rs, cell, ',');) cells.push_back(cell);
    if (!row.empty() && row.back() == ',') cells.emplace_back();
    if (cells.size() != names.size()) throw ParseError(line_no, "expected " + std::to_string(names.size()) + " fields");
    std::vector<double> ranges(kBeamCount, 0.0);
    std::vector<bool> seen(kBeamCount, false);
    std::optional<double> height;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string& n = names[i];
      if (n.size() == 4 && n[0] == 'd') {
        int b = -1;
        std::from_chars(n.data() + 1, n.data() + 4, b);
        if (b >= 0 && static_cast<std::size_t>(b) < kBeamCount) {
          ranges[b] = parse_values(cells[i], line_no).front();
          seen[b] = true;
        }
      } else if (n == "height_m" && !cells[i].empty()) {
        height = parse_values(cells[i], line_no).front();
      }
    }
    for (std::size_t b = 0; b < kBeamCount; ++b) {
      if (!seen[b]) throw SchemaError("missing column d" + std::string(b < 10 ? "00" : b < 100 ? "0" : "") + std::to_string(b));
    }
    return validate_scan(ranges, height);
  }
  return validate_scan(parse_values(first, 1));
}

nlohmann::json proba_json(const ProbabilityVector& p) {
  nlohmann::json probs = nlohmann::json::object();
  for (ClassLabel l : kAllLabels) probs[std::string(label_name(l))] = p[static_cast<std::size_t>(l)];
  return {{"label", label_name(label_from_proba(p))}, {"probabilities", probs}};
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw DataError(std::string(what) + " not found: " + p.string());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Indoor space classification from single 2D range scans", "clutter"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on standard error");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic labelled dataset as CSV");
  std::size_t per_class = 100;
  std::uint64_t sim_seed = 42;
  double noise_sigma = 0.01;
  bool no_noise = false;
  std::string sim_out;
  sim->add_option("--per-class", per_class, "Rows per class [rows]")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Generator seed")->capture_default_str();
  sim->add_option("--noise-sigma", noise_sigma, "Gaussian range noise std [m]")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sim->add_flag("--no-noise", no_noise, "Disable range noise");
  sim->add_option("--out", sim_out, "Output CSV path")->required();

  // summarize
  auto* sum = app.add_subcommand("summarize", "Print per-class counts and per-beam range statistics as JSON");
  std::string sum_data;
  sum->add_option("--data", sum_data, "Dataset CSV path")->required();

  // train
  auto* tr = app.add_subcommand("train", "Fit one classifier on a dataset and save it as JSON");
  std::string tr_model, tr_data, tr_out;
  std::uint64_t tr_seed = 42;
  Overrides tr_over;
  tr->add_option("--model", tr_model, "Classifier: rf|adaboost|svm|logreg|mlp|cnn")->required();
  tr->add_option("--data", tr_data, "Training CSV path")->required();
  tr->add_option("--seed", tr_seed, "Training seed")->capture_default_str();
  tr->add_option("--out", tr_out, "Output model path (JSON)")->required();
  add_overrides(tr, tr_over);

  // predict
  auto* pr = app.add_subcommand("predict", "Classify one scan; prints label and class probabilities as JSON");
  std::string pr_model, pr_scan;
  pr->add_option("--model", pr_model, "Model path written by train")->required();
  pr->add_option("--scan", pr_scan, "Scan file: CSV with header (first row) or 271 comma-separated ranges [m]")
      ->required();

  // crossval
  auto* cv = app.add_subcommand("crossval", "Stratified k-fold evaluation; writes report.json, accuracy.csv, PR plots");
  std::string cv_model = "all", cv_data, cv_out;
  int cv_folds = 5;
  std::uint64_t cv_seed = 42;
  unsigned cv_threads = 0;
  Overrides cv_over;
  cv->add_option("--model", cv_model, "Classifier name or 'all'")->capture_default_str();
  cv->add_option("--data", cv_data, "Dataset CSV path")->required();
  cv->add_option("--folds", cv_folds, "Number of folds k")->capture_default_str()->check(CLI::Range(2, 1000));
  cv->add_option("--seed", cv_seed, "Fold split and training seed")->capture_default_str();
  cv->add_option("--threads", cv_threads, "Worker threads for folds (0: all cores)")->capture_default_str();
  cv->add_option("--out", cv_out, "Output directory")->required();
  add_overrides(cv, cv_over);

  // report
  auto* rp = app.add_subcommand("report", "Re-render accuracy.csv and PR plots from an existing report.json");
  std::string rp_in, rp_out;
  rp->add_option("--input", rp_in, "report.json written by crossval")->required();
  rp->add_option("--out", rp_out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  auto log = [&](const std::string& msg) {
    if (verbose) err << msg << "\n";
  };

  try {
    if (sim->parsed()) {
      sim::SimConfig config;
      config.per_class.fill(per_class);
      config.seed = sim_seed;
      config.noise.enabled = !no_noise;
      config.noise.sigma = noise_sigma;
      const Dataset data = sim::generate_dataset(config);
      save_dataset(data, sim_out);
      log("wrote " + std::to_string(data.size()) + " rows to " + sim_out);
    } else if (sum->parsed()) {
      require_file(sum_data, "data file");
      out << summary_to_json(summarize(load_dataset(sum_data))).dump(2) << "\n";
    } else if (tr->parsed()) {
      const Variant v = variant_from_string(tr_model);
      require_file(tr_data, "data file");
      const Dataset data = load_dataset(tr_data);
      ModelSpec spec = ModelSpec::defaults(v, tr_seed);
      tr_over.apply(spec);
      log("training " + std::string(variant_name(v)) + " on " + std::to_string(data.size()) + " rows");
      save_model(train(spec, data), tr_out);
      log("wrote " + tr_out);
    } else if (pr->parsed()) {
      require_file(pr_model, "model file");
      require_file(pr_scan, "scan file");
      const TrainedModel model = load_model(pr_model);
      const Scan scan = read_scan(pr_scan);
      out << proba_json(predict_proba(model, scan)).dump() << "\n";
    } else if (cv->parsed()) {
      std::vector<ModelSpec> specs;
      if (cv_model == "all") {
        for (Variant v : kAllVariants) specs.push_back(ModelSpec::defaults(v, cv_seed));
      } else {
        specs.push_back(ModelSpec::defaults(variant_from_string(cv_model), cv_seed));
      }
      for (auto& s : specs) cv_over.apply(s);
      require_file(cv_data, "data file");
      const Dataset data = load_dataset(cv_data);
      fs::create_directories(cv_out);
      log("cross-validating " + std::to_string(specs.size()) + " variant(s), k=" + std::to_string(cv_folds));
      eval::Report report = eval::run_report(specs, data, cv_folds, cv_seed, cv_threads);
      for (const auto& v : report.variants) log("  " + v.name + " mean accuracy " + std::to_string(v.mean));
      report.config["overrides"] = cv_over.to_json();
      report.config["models"] = cv_model;
      for (const auto& p : eval::render_report(report, cv_out)) log("wrote " + p.string());
    } else if (rp->parsed()) {
      require_file(rp_in, "report file");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(rp_in));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(rp_in + ": " + e.what());
      }
      fs::create_directories(rp_out);
      for (const auto& p : eval::render_report(eval::report_from_json(j), rp_out)) log("wrote " + p.string());
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace clutter::cli
