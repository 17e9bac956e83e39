#include "eidos/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "eidos/geometry.hpp"

namespace eidos {

double record_distance(const EvalRecord& r, MetricId metric) {
  switch (metric) {
    case MetricId::L2: return r.l2;
    case MetricId::CD: return r.cd;
    case MetricId::HD: return r.hd;
    case MetricId::Curv: return r.curv;
    case MetricId::Smooth: return r.smooth;
  }
  throw std::invalid_argument("unknown metric id");
}

double success_rate(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("success_rate: no records");
  int n = 0;
  for (const auto& r : records) n += r.success ? 1 : 0;
  return static_cast<double>(n) / records.size();
}

OcCurve operating_characteristic(const std::vector<EvalRecord>& records,
                                 MetricId metric,
                                 const std::vector<double>& grid) {
  if (records.empty()) {
    throw std::invalid_argument("operating_characteristic: no records");
  }
  std::vector<double> dists;
  for (const auto& r : records) {
    if (r.success) dists.push_back(record_distance(r, metric));
  }
  OcCurve curve;
  if (dists.empty()) {
    curve.no_successes = true;
    return curve;
  }
  const double d_max = *std::max_element(dists.begin(), dists.end());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] >= grid[i - 1])) {
      throw std::invalid_argument("operating_characteristic: grid not ascending");
    }
  }
  if (grid.empty() || grid.back() < d_max) {
    throw std::invalid_argument(
        "operating_characteristic: grid must reach the max observed distance");
  }
  curve.budget = grid;
  curve.p.reserve(grid.size());
  for (double budget : grid) {
    int count = 0;
    for (double d : dists) count += (d < budget) ? 1 : 0;
    curve.p.push_back(static_cast<double>(count) / records.size());
  }
  return curve;
}

std::vector<double> default_grid(const std::vector<EvalRecord>& records,
                                 MetricId metric) {
  double d_max = 0.0;
  for (const auto& r : records) {
    if (r.success) d_max = std::max(d_max, record_distance(r, metric));
  }
  const double top = d_max > 0.0 ? 1.05 * d_max : 1e-12;
  std::vector<double> grid(200);
  for (int i = 0; i < 200; ++i) grid[i] = top * i / 199.0;
  return grid;
}

SummaryRow summarize(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  SummaryRow row;
  row.n_records = static_cast<int>(records.size());
  double l2 = 0, cd = 0, hd = 0, curv = 0, smooth = 0, time = 0;
  for (const auto& r : records) {
    time += r.time_s;
    if (!r.success) continue;
    ++row.n_success;
    l2 += r.l2;
    cd += r.cd;
    hd += r.hd;
    curv += r.curv;
    smooth += r.smooth;
  }
  row.p_suc_pct = 100.0 * row.n_success / row.n_records;
  row.mean_time_s = time / row.n_records;
  if (row.n_success > 0) {
    row.has_distances = true;
    row.l2 = (l2 / row.n_success) / 1e-1;
    row.cd = (cd / row.n_success) / 1e-4;
    row.hd = (hd / row.n_success) / 1e-2;
    row.curv = (curv / row.n_success) / 1e-2;
    row.smooth = (smooth / row.n_success) / 1e-3;
  }
  return row;
}

std::string format_summary(const SummaryRow& row) {
  std::ostringstream out;
  out << "P_suc(%)\tL2(1e-1)\tCD(1e-4)\tHD(1e-2)\tCurv(1e-2)\tSmooth(1e-3)\t"
         "time(s)\n";
  out << format_double(row.p_suc_pct) << '\t';
  if (row.has_distances) {
    out << format_double(row.l2) << '\t' << format_double(row.cd) << '\t'
        << format_double(row.hd) << '\t' << format_double(row.curv) << '\t'
        << format_double(row.smooth) << '\t';
  } else {
    out << "-\t-\t-\t-\t-\t";  // no successful attack, no adversarial clouds
  }
  out << format_double(row.mean_time_s) << '\n';
  return out.str();
}

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "sample_id,method,success,l2,cd,hd,curv,smooth,time_s\n";
  for (const auto& r : records) {
    out << r.sample_id << ',' << r.method << ',' << (r.success ? 1 : 0) << ',';
    if (r.success) {
      out << format_double(r.l2) << ',' << format_double(r.cd) << ','
          << format_double(r.hd) << ',' << format_double(r.curv) << ','
          << format_double(r.smooth) << ',';
    } else {
      out << "nan,nan,nan,nan,nan,";
    }
    out << format_double(r.time_s) << '\n';
  }
}

std::vector<EvalRecord> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "sample_id,method,success,l2,cd,hd,curv,smooth,time_s") {
    throw std::runtime_error("results csv: bad header in " + path.string());
  }
  std::vector<EvalRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        cols.push_back(line.substr(start));
        break;
      }
      cols.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (cols.size() != 9) {
      throw std::runtime_error("results csv: bad column count at line " +
                               std::to_string(lineno));
    }
    EvalRecord r;
    r.sample_id = cols[0];
    r.method = cols[1];
    try {
      r.success = std::stoi(cols[2]) != 0;
      r.l2 = std::stod(cols[3]);
      r.cd = std::stod(cols[4]);
      r.hd = std::stod(cols[5]);
      r.curv = std::stod(cols[6]);
      r.smooth = std::stod(cols[7]);
      r.time_s = std::stod(cols[8]);
    } catch (const std::exception&) {
      throw std::runtime_error("results csv: malformed value at line " +
                               std::to_string(lineno));
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_oc_tsv(const std::filesystem::path& path, const OcCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < curve.budget.size(); ++i) {
    out << format_double(curve.budget[i]) << '\t' << format_double(curve.p[i])
        << '\n';
  }
}

}  // namespace eidos
