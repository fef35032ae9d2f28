#include "mcuq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mcuq/error.hpp"

namespace mcuq {
namespace {

double entropy_of(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return std::max(h, 0.0);
}

}  // namespace

std::string_view to_string(Normalization mode) {
  return mode == Normalization::kJoint ? "joint" : "length-normalized";
}

Normalization parse_normalization(std::string_view name) {
  if (name == "joint") return Normalization::kJoint;
  if (name == "length-normalized" || name == "length") return Normalization::kLengthNormalized;
  throw ParseError(fmt::format("unknown normalization '{}' (expected joint, length-normalized)", name));
}

SampleProbabilities sequence_probabilities(std::span<const GenerationSample> samples, Normalization mode) {
  if (samples.empty()) throw DomainError("no samples to weight");
  std::vector<double> log_weights;
  log_weights.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& lp = samples[i].token_logprobs;
    if (!lp || lp->empty()) {
      throw CapabilityError(fmt::format("sample {} has no token logprobs; likelihood-based estimators unavailable", i));
    }
    double total = 0.0;
    for (double x : *lp) total += x;
    log_weights.push_back(mode == Normalization::kJoint ? total : total / static_cast<double>(lp->size()));
  }
  // Normalize in log space; the largest weight maps to exp(0).
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  SampleProbabilities probs;
  probs.mode = mode;
  probs.weights.resize(log_weights.size());
  if (top == -std::numeric_limits<double>::infinity()) {
    std::fill(probs.weights.begin(), probs.weights.end(), 1.0 / static_cast<double>(log_weights.size()));
    return probs;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    probs.weights[i] = std::exp(log_weights[i] - top);
    sum += probs.weights[i];
  }
  for (double& w : probs.weights) w /= sum;
  return probs;
}

double naive_entropy(const SampleProbabilities& probs) { return entropy_of(probs.weights); }

double semantic_entropy(const SampleProbabilities& probs, const ClusterPartition& partition) {
  if (probs.weights.size() != partition.assignment.size()) {
    throw DomainError(fmt::format("question '{}': {} weights but {} cluster assignments", partition.question_id,
                                  probs.weights.size(), partition.assignment.size()));
  }
  std::vector<double> mass(static_cast<std::size_t>(partition.num_clusters()), 0.0);
  for (std::size_t i = 0; i < probs.weights.size(); ++i) {
    mass[static_cast<std::size_t>(partition.assignment[i])] += probs.weights[i];
  }
  return entropy_of(mass);
}

double discrete_semantic_entropy(const ClusterPartition& partition) {
  if (partition.assignment.empty()) throw DomainError("empty partition");
  std::vector<double> freq(static_cast<std::size_t>(partition.num_clusters()), 0.0);
  for (int c : partition.assignment) freq[static_cast<std::size_t>(c)] += 1.0;
  const double n = static_cast<double>(partition.assignment.size());
  for (double& f : freq) f /= n;
  return entropy_of(freq);
}

int num_semantic_sets(const ClusterPartition& partition) {
  if (partition.assignment.empty()) throw DomainError("empty partition");
  return partition.num_clusters();
}

double p_true_score(const SampleSet& set) {
  if (!set.p_true_prob) {
    throw CapabilityError(fmt::format("question '{}': no P(True) probability recorded", set.question_id));
  }
  return 1.0 - *set.p_true_prob;
}

double estimate(Estimator estimator, const SampleSet& set, const ClusterPartition& partition, Normalization mode) {
  switch (estimator) {
    case Estimator::kNaiveEntropy:
      return naive_entropy(sequence_probabilities(set.samples, mode));
    case Estimator::kSemanticEntropy:
      return semantic_entropy(sequence_probabilities(set.samples, mode), partition);
    case Estimator::kDiscreteSemanticEntropy:
      return discrete_semantic_entropy(partition);
    case Estimator::kNumSemanticSets:
      return static_cast<double>(num_semantic_sets(partition));
    case Estimator::kPTrue:
      return p_true_score(set);
  }
  throw DomainError("unknown estimator");
}

}  // namespace mcuq
