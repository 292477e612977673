#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clutter/evaluation.hpp"

namespace clutter::eval {

// Accuracy table: `classifier,fold1..foldK,mean,std`, shortest round-trip
// decimal numbers.
std::string accuracy_csv(const Report& report);

// 800x600 plot of the four class-wise PR curves, axes [0,1]^2, one <path>
// per class, AP values in the legend.
std::string pr_svg(const VariantReport& variant);

// Writes report.json, accuracy.csv and <variant>_pr.svg into `dir`; returns
// the written paths.
std::vector<std::filesystem::path> render_report(const Report& report, const std::filesystem::path& dir);

}  // namespace clutter::eval
