#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "mcuq/types.hpp"

namespace mcuq {

// How per-token log-probabilities become a sequence weight.
//   kJoint:            exp(sum of token logprobs), the chain-rule probability
//   kLengthNormalized: exp(mean token logprob)
enum class Normalization { kJoint, kLengthNormalized };

std::string_view to_string(Normalization mode);
Normalization parse_normalization(std::string_view name);

// Sequence weights renormalized over the k sampled sequences. Duplicate
// texts stay separate support points.
struct SampleProbabilities {
  std::vector<double> weights;
  Normalization mode = Normalization::kLengthNormalized;
};

// Throws CapabilityError if any sample lacks token_logprobs.
SampleProbabilities sequence_probabilities(std::span<const GenerationSample> samples,
                                           Normalization mode = Normalization::kLengthNormalized);

// Entropies are in nats with 0 log 0 = 0.
double naive_entropy(const SampleProbabilities& probs);
double semantic_entropy(const SampleProbabilities& probs, const ClusterPartition& partition);
double discrete_semantic_entropy(const ClusterPartition& partition);
int num_semantic_sets(const ClusterPartition& partition);

// 1 - P(True), so that larger means more uncertain like the other scores.
double p_true_score(const SampleSet& set);

// Any estimator on one question. Throws CapabilityError when the inputs lack
// what the estimator needs (logprobs, P(True)).
double estimate(Estimator estimator, const SampleSet& set, const ClusterPartition& partition,
                Normalization mode = Normalization::kLengthNormalized);

}  // namespace mcuq
