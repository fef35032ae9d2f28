#include "mcuq/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "mcuq/error.hpp"

namespace mcuq {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T, typename Parse>
std::vector<T> parse_csv(std::string_view csv, Parse parse) {
  std::vector<T> out;
  while (!csv.empty()) {
    const auto comma = csv.find(',');
    const auto item = trim(csv.substr(0, comma));
    if (!item.empty()) {
      const T value = parse(item);
      if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(value);
    }
    if (comma == std::string_view::npos) break;
    csv.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

std::string_view to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::kNaiveEntropy: return "ne";
    case Estimator::kSemanticEntropy: return "se";
    case Estimator::kDiscreteSemanticEntropy: return "dse";
    case Estimator::kNumSemanticSets: return "numsets";
    case Estimator::kPTrue: return "ptrue";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  for (Estimator e : kAllEstimators) {
    if (to_string(e) == name) return e;
  }
  throw ParseError(fmt::format("unknown estimator '{}' (expected ne, se, dse, numsets, ptrue)", name));
}

std::vector<Estimator> parse_estimator_list(std::string_view csv) {
  return parse_csv<Estimator>(csv, parse_estimator);
}

bool needs_logprobs(Estimator estimator) {
  return estimator == Estimator::kNaiveEntropy || estimator == Estimator::kSemanticEntropy ||
         estimator == Estimator::kPTrue;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kAuroc: return "auroc";
    case Metric::kPrAuc: return "prauc";
    case Metric::kAurac: return "aurac";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  throw ParseError(fmt::format("unknown metric '{}' (expected auroc, prauc, aurac)", name));
}

std::vector<Metric> parse_metric_list(std::string_view csv) {
  return parse_csv<Metric>(csv, parse_metric);
}

int ClusterPartition::num_clusters() const {
  if (assignment.empty()) return 0;
  return *std::max_element(assignment.begin(), assignment.end()) + 1;
}

void validate(const Question& question) {
  if (question.id.empty()) throw ValidationError("question id is empty");
  if (question.text.empty()) {
    throw ValidationError(fmt::format("question '{}' has empty text", question.id));
  }
}

void validate(const GenerationSample& sample) {
  if (!(sample.temperature > 0.0) || !std::isfinite(sample.temperature)) {
    throw ValidationError(fmt::format("sample temperature must be > 0, got {}", sample.temperature));
  }
  if (sample.token_logprobs) {
    if (sample.token_logprobs->empty()) {
      throw ValidationError("token_logprobs present but empty");
    }
    for (double lp : *sample.token_logprobs) {
      if (std::isnan(lp) || lp > 0.0) {
        throw ValidationError(fmt::format("token logprob {} is not <= 0", lp));
      }
    }
  }
}

void validate(const SampleSet& set) {
  if (set.question_id.empty()) throw ValidationError("sample set has empty question_id");
  if (set.samples.size() < 2) {
    throw ValidationError(fmt::format("question '{}': sample set needs at least 2 samples, has {}",
                                      set.question_id, set.samples.size()));
  }
  for (const auto& s : set.samples) validate(s);
  validate(set.low_temp_answer);
  if (set.p_true_prob && !(*set.p_true_prob >= 0.0 && *set.p_true_prob <= 1.0)) {
    throw ValidationError(fmt::format("question '{}': p_true_prob {} outside [0, 1]",
                                      set.question_id, *set.p_true_prob));
  }
}

void validate(const SampleSet& set, double correctness_temperature) {
  validate(set);
  if (set.low_temp_answer.temperature != correctness_temperature) {
    throw ValidationError(fmt::format(
        "question '{}': low-temperature answer drawn at {}, expected {}", set.question_id,
        set.low_temp_answer.temperature, correctness_temperature));
  }
}

void validate(const ClusterPartition& partition) {
  if (partition.assignment.empty()) {
    throw ValidationError(fmt::format("question '{}': empty cluster assignment", partition.question_id));
  }
  // Indices must cover {0..m-1} with no gaps.
  const int m = partition.num_clusters();
  std::vector<bool> seen(static_cast<std::size_t>(std::max(m, 0)), false);
  for (int c : partition.assignment) {
    if (c < 0) {
      throw ValidationError(fmt::format("question '{}': negative cluster index {}", partition.question_id, c));
    }
    seen[static_cast<std::size_t>(c)] = true;
  }
  for (int c = 0; c < m; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw ValidationError(fmt::format("question '{}': cluster indices are not contiguous (missing {})",
                                        partition.question_id, c));
    }
  }
}

void validate(const CorrectnessRecord& record) {
  if (record.question_id.empty()) throw ValidationError("label has empty question_id");
}

void validate(const UQScore& score) {
  if (!std::isfinite(score.score)) {
    throw ValidationError(fmt::format("question '{}': {} score is not finite", score.question_id,
                                      to_string(score.estimator)));
  }
  switch (score.estimator) {
    case Estimator::kNaiveEntropy:
    case Estimator::kSemanticEntropy:
    case Estimator::kDiscreteSemanticEntropy:
      if (score.score < 0.0) {
        throw ValidationError(fmt::format("question '{}': entropy score {} < 0", score.question_id, score.score));
      }
      break;
    case Estimator::kNumSemanticSets:
      if (score.score < 1.0 || score.score != std::floor(score.score)) {
        throw ValidationError(fmt::format("question '{}': numsets score {} is not a positive integer",
                                          score.question_id, score.score));
      }
      break;
    case Estimator::kPTrue:
      if (score.score < 0.0 || score.score > 1.0) {
        throw ValidationError(fmt::format("question '{}': ptrue score {} outside [0, 1]", score.question_id,
                                          score.score));
      }
      break;
  }
}

void validate(const EvalOutcome& outcome) {
  const auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(outcome.point) || !in_unit(outcome.ci_low) || !in_unit(outcome.ci_high)) {
    throw ValidationError("outcome values must lie in [0, 1]");
  }
  if (!(outcome.ci_low <= outcome.point && outcome.point <= outcome.ci_high)) {
    throw ValidationError(fmt::format("outcome interval [{}, {}] does not contain point {}", outcome.ci_low,
                                      outcome.ci_high, outcome.point));
  }
}

}  // namespace mcuq
