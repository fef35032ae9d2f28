#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcuq/backend.hpp"
#include "mcuq/clustering.hpp"
#include "mcuq/estimators.hpp"
#include "mcuq/metrics.hpp"
#include "mcuq/synthetic_backend.hpp"
#include "mcuq/temperature.hpp"
#include "mcuq/types.hpp"

namespace mcuq {

// File names inside one run directory.
namespace run_files {
inline constexpr const char* kManifest = "run.json";
inline constexpr const char* kGenerations = "generations.jsonl";
inline constexpr const char* kClusters = "clusters.jsonl";
inline constexpr const char* kLabels = "labels.jsonl";
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kOutcomes = "outcomes.jsonl";
}  // namespace run_files

// Everything that identifies one (backend, dataset, strategy) run.
struct RunSpec {
  std::string backend_id;
  std::string dataset_id;
  Strategy strategy;
  ScheduleParams schedule;
  std::uint64_t seed = 0;
  double correctness_temperature = kDefaultCorrectnessTemperature;
  std::vector<Estimator> estimators{std::begin(kAllEstimators), std::end(kAllEstimators)};
  Normalization normalization = Normalization::kLengthNormalized;
  int concurrency = 1;
  std::vector<FewShotExample> few_shot;

  void validate() const;
};

// Persisted next to the stage files so later stages (and resumed runs)
// know what produced them.
struct RunManifest {
  std::string backend_id;
  std::string dataset_id;
  std::string strategy;
  int k = 0;
  double tau_min = 0.0;
  double tau_max = 0.0;
  std::uint64_t seed = 0;
  double correctness_temperature = kDefaultCorrectnessTemperature;
  // Estimators that could not be computed for this run, with the reason.
  std::map<std::string, std::string> unavailable;

  static RunManifest from_spec(const RunSpec& spec);
  bool same_run(const RunManifest& other) const;
};

void save_manifest(const RunManifest& manifest, const std::filesystem::path& dir);
std::optional<RunManifest> load_manifest(const std::filesystem::path& dir);

// Stages. Each checkpoints per question into `dir` and skips questions that
// are already persisted, then rewrites its file in dataset order so the
// final bytes do not depend on interruption or thread scheduling.
std::vector<SampleSet> generate_stage(CompletionBackend& backend, std::span<const Question> questions,
                                      const RunSpec& spec, const std::filesystem::path& dir);

std::vector<ClusterPartition> cluster_stage(Judge& judge, std::span<const Question> questions,
                                            std::span<const SampleSet> generations, const std::filesystem::path& dir,
                                            int concurrency = 1, EntailmentCache* cache = nullptr);

std::vector<CorrectnessRecord> label_stage(Judge& judge, std::span<const Question> questions,
                                           std::span<const SampleSet> generations, const std::filesystem::path& dir,
                                           int concurrency = 1);

struct ScoreStageResult {
  std::vector<UQScore> scores;
  std::map<Estimator, std::string> unavailable;
};

// Estimators the inputs cannot support (no logprobs, no P(True)) are
// reported in `unavailable` instead of failing the run.
ScoreStageResult score_stage(std::span<const SampleSet> generations, std::span<const ClusterPartition> clusters,
                             std::span<const Estimator> estimators, Normalization normalization,
                             const std::filesystem::path& dir);

struct RunResult {
  std::vector<SampleSet> generations;
  std::vector<ClusterPartition> clusters;
  std::vector<CorrectnessRecord> labels;
  std::vector<UQScore> scores;
  std::map<Estimator, std::string> unavailable;
};

// Schedule, generate, cluster, score and judge every question of one run,
// persisting each stage under `dir`.
RunResult run_strategy(CompletionBackend& backend, Judge& entailment_judge, Judge& correctness_judge,
                       std::span<const Question> questions, const RunSpec& spec, const std::filesystem::path& dir);

struct EvaluateOptions {
  std::vector<Metric> metrics{std::begin(kAllMetrics), std::end(kAllMetrics)};
  BootstrapOptions bootstrap;
  int aurac_deciles = 10;
  // Skip (estimator, metric) pairs that are undefined on the data instead of
  // throwing DegenerateDataError.
  bool skip_degenerate = false;
};

// Joins scores with labels by question id and bootstraps each requested
// metric per estimator. The bootstrap seed is derived from options.seed
// and the outcome key.
std::vector<EvalOutcome> evaluate_run(std::span<const UQScore> scores, std::span<const CorrectnessRecord> labels,
                                      const OutcomeKey& run_key, const EvaluateOptions& options);

// ---------------------------------------------------------------------------
// Baselines over per-temperature metric values.

struct TemperatureValue {
  double tau = 0.0;
  double value = 0.0;
};

// Argmax over fixed temperatures; ties go to the lower temperature.
TemperatureValue oracle_select(std::span<const TemperatureValue> values);

struct CellId {
  std::string backend;
  std::string dataset;

  auto operator<=>(const CellId&) const = default;
};

// Read access to per-(cell, temperature) metric values. Listing cells and
// temperatures does not count as reading values.
class CellValueStore {
 public:
  virtual ~CellValueStore() = default;
  virtual std::vector<CellId> cells() const = 0;
  virtual std::vector<double> temperatures(const CellId& cell) const = 0;
  virtual double value(const CellId& cell, double tau) const = 0;
};

class MapValueStore : public CellValueStore {
 public:
  void set(const CellId& cell, double tau, double value);

  std::vector<CellId> cells() const override;
  std::vector<double> temperatures(const CellId& cell) const override;
  double value(const CellId& cell, double tau) const override;

 private:
  std::map<CellId, std::map<double, double>> values_;
};

// Leave-one-out best-on-average temperature: drops every cell sharing the
// test backend or the test dataset, averages each temperature over the
// rest, picks the best average (ties to lower temperature) and returns the
// test cell's value there. The test cell is read once, after the choice.
TemperatureValue best_avg_loocv(const CellValueStore& store, const CellId& test);

struct RandomBaselineMode {
  enum class Kind { kExact, kMonteCarlo };
  Kind kind = Kind::kExact;
  int draws = 100;
  std::uint64_t seed = 0;
};

// Expected metric of picking one grid temperature uniformly at random:
// the exact mean, or the average of `draws` seeded picks.
double random_baseline(std::span<const TemperatureValue> values, const RandomBaselineMode& mode = {});

}  // namespace mcuq
