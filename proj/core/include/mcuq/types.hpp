#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcuq {

// Temperature at which the extra answer whose correctness is judged is drawn.
inline constexpr double kDefaultCorrectnessTemperature = 0.1;

enum class Estimator {
  kNaiveEntropy,
  kSemanticEntropy,
  kDiscreteSemanticEntropy,
  kNumSemanticSets,
  kPTrue,
};

inline constexpr Estimator kAllEstimators[] = {
    Estimator::kNaiveEntropy, Estimator::kSemanticEntropy,
    Estimator::kDiscreteSemanticEntropy, Estimator::kNumSemanticSets,
    Estimator::kPTrue};

// "ne", "se", "dse", "numsets", "ptrue"
std::string_view to_string(Estimator estimator);
Estimator parse_estimator(std::string_view name);
std::vector<Estimator> parse_estimator_list(std::string_view csv);

// Whether the estimator needs per-token log-probabilities from the backend.
bool needs_logprobs(Estimator estimator);

enum class Metric { kAuroc, kPrAuc, kAurac };

inline constexpr Metric kAllMetrics[] = {Metric::kAuroc, Metric::kPrAuc, Metric::kAurac};

// "auroc", "prauc", "aurac"
std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);
std::vector<Metric> parse_metric_list(std::string_view csv);

struct Question {
  std::string id;
  std::string text;
  std::string reference_answer;

  bool operator==(const Question&) const = default;
};

struct GenerationSample {
  std::string text;
  double temperature = 1.0;
  // Natural-log probability of each generated token. Absent when the
  // provider does not expose likelihoods; that is a normal state.
  std::optional<std::vector<double>> token_logprobs;

  bool operator==(const GenerationSample&) const = default;
};

struct SampleSet {
  std::string question_id;
  std::string strategy;
  std::vector<GenerationSample> samples;
  GenerationSample low_temp_answer;
  std::optional<double> p_true_prob;

  bool operator==(const SampleSet&) const = default;
};

struct ClusterPartition {
  std::string question_id;
  std::vector<int> assignment;

  int num_clusters() const;

  bool operator==(const ClusterPartition&) const = default;
};

struct CorrectnessRecord {
  std::string question_id;
  bool correct = false;
  std::string judge_id;

  bool operator==(const CorrectnessRecord&) const = default;
};

struct UQScore {
  std::string question_id;
  Estimator estimator = Estimator::kDiscreteSemanticEntropy;
  double score = 0.0;

  bool operator==(const UQScore&) const = default;
};

struct OutcomeKey {
  std::string backend_id;
  std::string dataset_id;
  Estimator estimator = Estimator::kDiscreteSemanticEntropy;
  std::string strategy;

  bool operator==(const OutcomeKey&) const = default;
};

struct EvalOutcome {
  OutcomeKey key;
  Metric metric = Metric::kAuroc;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n = 0;
  int bootstrap_draws = 0;

  bool operator==(const EvalOutcome&) const = default;
};

// Invariant checks; each throws ValidationError describing the violation.
void validate(const Question& question);
void validate(const GenerationSample& sample);
void validate(const SampleSet& set);
void validate(const ClusterPartition& partition);
void validate(const CorrectnessRecord& record);
void validate(const UQScore& score);
void validate(const EvalOutcome& outcome);

// Additionally checks the low-temperature answer was drawn at the configured
// correctness temperature.
void validate(const SampleSet& set, double correctness_temperature);

}  // namespace mcuq
