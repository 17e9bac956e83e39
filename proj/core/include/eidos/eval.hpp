#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eidos/metrics.hpp"

namespace eidos {

/// One results-table row. Distance fields are meaningful only when the
/// attack succeeded (failed attacks produce no adversarial cloud).
struct EvalRecord {
  std::string sample_id;
  std::string method;
  bool success = false;
  double l2 = 0.0, cd = 0.0, hd = 0.0, curv = 0.0, smooth = 0.0;
  double time_s = 0.0;
};

double record_distance(const EvalRecord& r, MetricId metric);

/// Fraction of records with success = true. Requires a nonempty list.
double success_rate(const std::vector<EvalRecord>& records);

struct OcCurve {
  std::vector<double> budget;  // D grid
  std::vector<double> p;       // fraction of all records that succeeded below D
  bool no_successes = false;
};

/// P(D) = |{successful records with distance < D}| / |records| at each grid
/// point, so the curve rises from P(0) = 0 to the overall success rate once
/// the grid passes the largest observed distance. Grid must be ascending and
/// reach at least the max distance among successes. With zero successes the
/// curve is empty and flagged.
OcCurve operating_characteristic(const std::vector<EvalRecord>& records,
                                 MetricId metric,
                                 const std::vector<double>& grid);

/// 200 evenly spaced budgets from 0 to 1.05x the max observed distance.
std::vector<double> default_grid(const std::vector<EvalRecord>& records,
                                 MetricId metric);

/// Table row matching the usual reporting scales: success rate in percent,
/// distance means over successes scaled by 1e-1 (L2), 1e-4 (CD), 1e-2 (HD),
/// 1e-2 (Curv), 1e-3 (Smooth), and mean wall time over all records.
struct SummaryRow {
  double p_suc_pct = 0.0;
  bool has_distances = false;  // false when no attack succeeded
  double l2 = 0.0, cd = 0.0, hd = 0.0, curv = 0.0, smooth = 0.0;  // scaled
  double mean_time_s = 0.0;
  int n_records = 0;
  int n_success = 0;
};

SummaryRow summarize(const std::vector<EvalRecord>& records);

/// Two text lines: a header naming columns and scales, then the values
/// (absent distance columns rendered as "-"). Parsing the row back recovers
/// the means exactly.
std::string format_summary(const SummaryRow& row);

// results CSV: header "sample_id,method,success,l2,cd,hd,curv,smooth,time_s",
// success as 0/1, distances of failed rows as nan. OC output: one
// "D<TAB>P" line per grid point.

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_results_csv(const std::filesystem::path& path);
void write_oc_tsv(const std::filesystem::path& path, const OcCurve& curve);

}  // namespace eidos
