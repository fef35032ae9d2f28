#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcuq/config.hpp"
#include "mcuq/report.hpp"

namespace mcuq {

struct GridResult {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  std::vector<EvalOutcome> outcomes;
  Report report;
  // Cells or estimators skipped (degenerate labels, missing capabilities).
  std::vector<std::string> notes;
};

// Directory name of a strategy's run, e.g. "fixed-0.325".
std::string strategy_dir_name(const Strategy& strategy);

// Runs every (backend, dataset, strategy) cell of the grid, evaluates the
// outcomes and writes outcomes.jsonl plus the report. With one seed
// everything lands in `out`; with several, in out/seed-<seed>/ each.
// Run directories live under runs/<backend>/<dataset>/<strategy>/ and are
// resumed when present.
std::vector<GridResult> run_grid(const ExperimentGrid& grid, const std::filesystem::path& out);

struct SyntheticModelSpec {
  std::string id;
  double logit_spread = 1.0;
  double skill = 1.0;
  double knowledge_sd = 1.0;
};

struct SyntheticDatasetSpec {
  std::string id;
  double difficulty = 0.0;
};

std::vector<SyntheticModelSpec> default_synthetic_models();
std::vector<SyntheticDatasetSpec> default_synthetic_datasets();

struct SimulateOptions {
  std::uint64_t seed = 0;
  int questions = 300;
  ScheduleParams schedule;
  int bootstrap_draws = 1000;
  std::vector<Estimator> estimators{std::begin(kAllEstimators), std::end(kAllEstimators)};
  std::vector<Metric> metrics{std::begin(kAllMetrics), std::end(kAllMetrics)};
  int concurrency = 1;
  std::vector<SyntheticModelSpec> models = default_synthetic_models();
  std::vector<SyntheticDatasetSpec> datasets = default_synthetic_datasets();
};

std::vector<Question> synthetic_questions(const std::string& dataset_id, int count);

// Writes the synthetic datasets to out/datasets/ and returns the grid that
// evaluates them (no I/O beyond that).
ExperimentGrid simulation_grid(const SimulateOptions& options, const std::filesystem::path& out);

// Self-contained synthetic experiment: datasets, runs, outcomes, report.
GridResult simulate(const SimulateOptions& options, const std::filesystem::path& out);

}  // namespace mcuq
