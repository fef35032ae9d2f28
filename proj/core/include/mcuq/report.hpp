#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcuq/harness.hpp"
#include "mcuq/types.hpp"

namespace mcuq {

struct IntervalValue {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// One row of the comparison table: a (backend, dataset, estimator) cell
// under one metric. Missing strategies leave gaps (nullopt) and a note.
struct ReportRow {
  Metric metric = Metric::kAuroc;
  std::string backend;
  std::string dataset;
  Estimator estimator = Estimator::kDiscreteSemanticEntropy;

  std::optional<double> oracle_tau;
  std::optional<IntervalValue> oracle;
  std::optional<IntervalValue> mct;
  std::optional<double> best_avg_tau;
  std::optional<double> best_avg;
  std::optional<double> random;

  std::optional<double> delta_mct;
  std::optional<double> delta_best_avg;
  std::optional<double> delta_random;
  // MCT and oracle bootstrap intervals overlap.
  std::optional<bool> parity;

  std::string note;

  bool complete() const;
};

struct MetricSummary {
  Metric metric = Metric::kAuroc;
  int rows = 0;             // complete rows entering the summary
  int incomplete_rows = 0;  // rows with gaps, excluded
  double mean_delta_mct = 0.0;
  double mean_delta_best_avg = 0.0;
  double mean_delta_random = 0.0;
  double win_rate_mct_vs_best_avg = 0.0;
  double win_rate_mct_vs_random = 0.0;
  double parity_rate = 0.0;  // percent of rows flagged at parity
};

struct Report {
  std::vector<ReportRow> rows;
  std::vector<MetricSummary> summaries;
};

struct ReportOptions {
  RandomBaselineMode random;
};

// Builds the comparison table from evaluated outcomes. Fixed-temperature
// strategies ("fixed:<tau>") feed the oracle, best-on-average and random
// baselines; "mct" outcomes are the method under test. Oracles are chosen
// per metric.
Report build_report(std::span<const EvalOutcome> outcomes, const ReportOptions& options = {});

std::string report_csv(const Report& report);
std::string report_markdown(const Report& report);
std::string report_summary_json(const Report& report);

// Writes report.csv, report.md and summary.json into `dir`.
void write_report(const Report& report, const std::filesystem::path& dir);

}  // namespace mcuq
