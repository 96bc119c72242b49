#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvmocap/metrics.hpp"
#include "mvmocap/stats.hpp"

namespace mvmocap {

// Metric keys used across reports: "reprojection_error_px", "gc_<d>",
// "position_error_mm".
inline constexpr const char* kReprojectionKey = "reprojection_error_px";
inline constexpr const char* kPositionKey = "position_error_mm";
std::string gc_metric_key(double d);
std::string metric_label(const std::string& key);  // row label as printed in Table 1

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};
std::optional<MeanSd> mean_sd(const std::vector<double>& values);

// Methods as columns, metrics as rows, "mean ± sd" cells.
struct Table1 {
  struct Row {
    std::string metric;
    std::vector<std::optional<MeanSd>> values;  // one per method; empty -> N/A
    std::optional<double> omnibus_p;
  };
  std::string caption;
  std::vector<std::string> methods;
  std::vector<Row> rows;
};

// Marks a row label with "*" when its omnibus p-value is below alpha.
std::string format_table1_tsv(const Table1& table, double alpha = 0.05);
std::string format_table1_cell(const std::string& metric, const std::optional<MeanSd>& value);

Table1 parse_table1_fixture(const std::string& text);
Table1 load_table1_fixture(const std::filesystem::path& path);
std::filesystem::path default_table1_fixture_path();

// samples[metric][method] holds one value per statistical unit.
using MetricSamples = std::map<std::string, std::map<std::string, std::vector<double>>>;
Table1 build_table1(const std::vector<std::string>& methods, const std::vector<std::string>& metrics,
                    const MetricSamples& samples, const std::vector<stats::StatReport>& stat_reports);

std::string format_stats_tsv(const std::vector<stats::StatReport>& reports);
std::string format_stats_json(const std::vector<stats::StatReport>& reports);

// One row per trial and method.
std::string format_metrics_tsv(const std::vector<MetricReport>& reports, const std::vector<double>& gc_thresholds,
                               double lambda);
// Fig. 3 style: per method and keypoint, averaged over trials.
std::string format_per_keypoint_tsv(const std::vector<MetricReport>& reports, const std::vector<double>& gc_thresholds,
                                    double lambda);

}  // namespace mvmocap
