#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "mcuq/error.hpp"
#include "mcuq/estimators.hpp"
#include "mcuq/rng.hpp"
#include "oracles.hpp"

using namespace mcuq;

namespace {

GenerationSample with_logprobs(std::vector<double> lp) { return {"x", 0.5, std::move(lp)}; }

ClusterPartition partition(std::vector<int> a) { return {"q", std::move(a)}; }

SampleProbabilities uniform(std::size_t k) {
  return {std::vector<double>(k, 1.0 / static_cast<double>(k)), Normalization::kLengthNormalized};
}

struct Instance {
  std::vector<std::vector<double>> logprobs;
  std::vector<int> labels;
};

Instance random_instance(Rng& rng, std::size_t max_k) {
  Instance inst;
  const std::size_t k = 2 + rng.index(max_k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> lp(1 + rng.index(5));
    for (double& x : lp) x = -4.0 * rng.uniform();
    inst.logprobs.push_back(lp);
  }
  // Random partition, relabelled contiguously by first appearance.
  std::vector<int> raw(k);
  for (auto& c : raw) c = static_cast<int>(rng.index(k));
  std::map<int, int> relabel;
  for (int c : raw) inst.labels.push_back(relabel.try_emplace(c, static_cast<int>(relabel.size())).first->second);
  return inst;
}

std::vector<GenerationSample> to_samples(const Instance& inst) {
  std::vector<GenerationSample> out;
  for (const auto& lp : inst.logprobs) out.push_back(with_logprobs(lp));
  return out;
}

}  // namespace

TEST(Weights, JointSymmetric) {
  const std::vector<GenerationSample> s{with_logprobs({std::log(0.2)}), with_logprobs({std::log(0.2)})};
  const auto p = sequence_probabilities(s, Normalization::kJoint);
  EXPECT_NEAR(p.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(p.weights[1], 0.5, 1e-12);
}

TEST(Weights, JointProportional) {
  const std::vector<GenerationSample> s{with_logprobs({std::log(0.4)}), with_logprobs({std::log(0.1)})};
  const auto p = sequence_probabilities(s, Normalization::kJoint);
  EXPECT_NEAR(p.weights[0], 0.8, 1e-12);
  EXPECT_NEAR(p.weights[1], 0.2, 1e-12);
}

TEST(Weights, LengthNormalizedVersusJoint) {
  const std::vector<GenerationSample> s{with_logprobs({std::log(0.25), std::log(0.25)}),
                                        with_logprobs({std::log(0.25)})};
  const auto ln = sequence_probabilities(s, Normalization::kLengthNormalized);
  EXPECT_NEAR(ln.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(ln.weights[1], 0.5, 1e-12);
  const auto joint = sequence_probabilities(s, Normalization::kJoint);
  EXPECT_NEAR(joint.weights[0], 0.2, 1e-12);
  EXPECT_NEAR(joint.weights[1], 0.8, 1e-12);
  EXPECT_EQ(sequence_probabilities(s).mode, Normalization::kLengthNormalized);
}

TEST(Weights, TinyProbabilitiesStayFinite) {
  const std::vector<GenerationSample> s{with_logprobs({-900.0}), with_logprobs({-901.0})};
  const auto p = sequence_probabilities(s, Normalization::kJoint);
  EXPECT_NEAR(p.weights[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(p.weights[0] + p.weights[1], 1.0, 1e-12);
}

TEST(Weights, MissingLogprobsIsCapabilityError) {
  const std::vector<GenerationSample> s{with_logprobs({-0.1}), {"y", 0.5, std::nullopt}};
  EXPECT_THROW(sequence_probabilities(s), CapabilityError);
}

TEST(NaiveEntropy, Examples) {
  EXPECT_EQ(naive_entropy({{1.0, 0, 0, 0, 0}, Normalization::kJoint}), 0.0);
  EXPECT_NEAR(naive_entropy({{0.5, 0.5}, Normalization::kJoint}), std::log(2.0), 1e-12);
  EXPECT_NEAR(naive_entropy({{0.8, 0.2}, Normalization::kJoint}), 0.500402, 1e-6);
}

TEST(SemanticEntropy, Examples) {
  EXPECT_EQ(semantic_entropy(uniform(5), partition({0, 0, 0, 0, 0})), 0.0);
  EXPECT_NEAR(semantic_entropy(uniform(4), partition({0, 0, 1, 1})), std::log(2.0), 1e-12);
  EXPECT_THROW(semantic_entropy(uniform(3), partition({0, 1})), DomainError);
}

TEST(DiscreteSemanticEntropy, Examples) {
  EXPECT_EQ(discrete_semantic_entropy(partition({0, 0, 0, 0, 0})), 0.0);
  EXPECT_NEAR(discrete_semantic_entropy(partition({0, 0, 0, 1, 1})), 0.673012, 1e-6);
  EXPECT_NEAR(discrete_semantic_entropy(partition({0, 1, 2, 3, 4})), std::log(5.0), 1e-12);
}

TEST(NumSemanticSets, Examples) {
  EXPECT_EQ(num_semantic_sets(partition({0, 0, 0, 0, 0})), 1);
  EXPECT_EQ(num_semantic_sets(partition({0, 1, 2, 3, 4})), 5);
  EXPECT_EQ(num_semantic_sets(partition({0, 1, 0, 1, 0})), 2);
}

TEST(PTrueScore, Complement) {
  SampleSet s;
  s.question_id = "q";
  for (auto [p, expected] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}, std::pair{0.9, 0.1}}) {
    s.p_true_prob = p;
    EXPECT_NEAR(p_true_score(s), expected, 1e-12);
  }
  s.p_true_prob.reset();
  EXPECT_THROW(p_true_score(s), CapabilityError);
}

TEST(Estimate, DispatchAndAvailability) {
  SampleSet s;
  s.question_id = "q";
  s.samples = {{"a", 0.1, std::nullopt}, {"b", 1.0, std::nullopt}};
  const auto p = partition({0, 1});
  EXPECT_NEAR(estimate(Estimator::kDiscreteSemanticEntropy, s, p), std::log(2.0), 1e-12);
  EXPECT_EQ(estimate(Estimator::kNumSemanticSets, s, p), 2.0);
  EXPECT_THROW(estimate(Estimator::kNaiveEntropy, s, p), CapabilityError);
  EXPECT_THROW(estimate(Estimator::kSemanticEntropy, s, p), CapabilityError);
  EXPECT_THROW(estimate(Estimator::kPTrue, s, p), CapabilityError);
}

TEST(Properties, MatchDirectSummationOracles) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = random_instance(rng, 6);
    const auto samples = to_samples(inst);
    const auto part = partition(inst.labels);
    for (auto mode : {Normalization::kJoint, Normalization::kLengthNormalized}) {
      const auto probs = sequence_probabilities(samples, mode);
      const auto w = oracle::weights(inst.logprobs, mode == Normalization::kLengthNormalized);
      for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(probs.weights[i], w[i], 1e-12);
      const double ne = naive_entropy(probs);
      const double se = semantic_entropy(probs, part);
      ASSERT_NEAR(ne, oracle::entropy(w), 1e-9);
      ASSERT_NEAR(se, oracle::semantic_entropy(w, inst.labels), 1e-9);
      ASSERT_LE(se, ne + 1e-12);
      ASSERT_GE(se, 0.0);
      ASSERT_LE(ne, std::log(static_cast<double>(w.size())) + 1e-12);
      ASSERT_LE(se, std::log(static_cast<double>(part.num_clusters())) + 1e-12);
    }
    ASSERT_NEAR(discrete_semantic_entropy(part), oracle::discrete_semantic_entropy(inst.labels), 1e-9);
    ASSERT_EQ(num_semantic_sets(part), oracle::num_sets(inst.labels));
    ASSERT_NEAR(semantic_entropy(uniform(inst.labels.size()), part), discrete_semantic_entropy(part), 1e-12);
  }
}

TEST(Properties, PermutationEquivariant) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instance(rng, 6);
    std::vector<std::size_t> order(inst.labels.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);

    Instance perm;
    std::map<int, int> relabel;
    for (std::size_t i : order) {
      perm.logprobs.push_back(inst.logprobs[i]);
      perm.labels.push_back(relabel.try_emplace(inst.labels[i], static_cast<int>(relabel.size())).first->second);
    }
    const auto a = sequence_probabilities(to_samples(inst));
    const auto b = sequence_probabilities(to_samples(perm));
    EXPECT_NEAR(naive_entropy(a), naive_entropy(b), 1e-12);
    EXPECT_NEAR(semantic_entropy(a, partition(inst.labels)), semantic_entropy(b, partition(perm.labels)), 1e-12);
    EXPECT_NEAR(discrete_semantic_entropy(partition(inst.labels)), discrete_semantic_entropy(partition(perm.labels)),
                1e-12);
    EXPECT_EQ(num_semantic_sets(partition(inst.labels)), num_semantic_sets(partition(perm.labels)));
  }
}
