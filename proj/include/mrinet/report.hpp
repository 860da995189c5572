#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrinet/csv.hpp"
#include "mrinet/metrics.hpp"

namespace mrinet {

struct RunHistory;

/// Written in place of a number when a metric is undefined.
inline constexpr const char* kUndefined = "undefined";

std::vector<csv::Row> metrics_rows(const MetricsReport& report);
std::vector<csv::Row> roc_rows(std::span<const RocPoint> curve);
std::vector<csv::Row> pr_rows(std::span<const PrPoint> curve);
std::vector<csv::Row> confusion_rows(const MetricsReport& report);
std::vector<csv::Row> history_rows(const RunHistory& history);

/// Standalone SVG: unit square, axis lines, ROC polyline. (0,1) maps to the
/// top-left corner of the plot area.
std::string render_roc_svg(std::span<const RocPoint> curve);

void write_history(const RunHistory& history, const std::filesystem::path& path);
RunHistory read_history(const std::filesystem::path& path);

/// Writes metrics.csv, roc.csv, pr.csv, confusion.csv, history.csv and
/// roc.svg. history.csv holds only its header when `history` is null.
void emit_report(const MetricsReport& report, const RunHistory* history,
                 const std::filesystem::path& out_dir);

}  // namespace mrinet
