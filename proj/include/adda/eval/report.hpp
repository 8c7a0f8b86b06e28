#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "adda/eval/metrics.hpp"

namespace adda {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

/// class,precision,recall,f1 per class, then a macro row. Comment lines
/// starting with '#' carry the instance count, config hash and seed.
std::string scores_csv(const EvalReport& report);
/// gold,<predicted labels...>; counts, or row-normalized rates.
std::string confusion_csv(const EvalReport& report, bool normalized);

/// Plain-text table: one row per system, per-class F1 and macro F1 in percent.
std::string summary_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

/// One line of a chart: per-point mean and standard error.
struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<MeanSe> y;
};

/// size,<series>_mean,<series>_se,... with one row per x of the first series.
std::string series_csv(const std::vector<Series>& series, const std::string& x_label);

/// Line chart with error bars of +-1 SE and a legend.
std::string series_svg(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

/// Creates parent directories; throws std::runtime_error naming the path.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Writes scores.csv, confusion.csv, confusion_normalized.csv under `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

}  // namespace adda
