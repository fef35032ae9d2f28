#include "mcuq/clustering.hpp"

#include <vector>

#include <fmt/format.h>

#include "mcuq/error.hpp"

namespace mcuq {

std::optional<bool> EntailmentCache::find(const std::string& question_id, std::string_view premise,
                                          std::string_view hypothesis) const {
  std::lock_guard lock(mutex_);
  const auto it = verdicts_.find(Key{question_id, std::string(premise), std::string(hypothesis)});
  if (it == verdicts_.end()) return std::nullopt;
  return it->second;
}

void EntailmentCache::insert(const std::string& question_id, std::string_view premise, std::string_view hypothesis,
                             bool verdict) {
  std::lock_guard lock(mutex_);
  verdicts_.emplace(Key{question_id, std::string(premise), std::string(hypothesis)}, verdict);
}

std::size_t EntailmentCache::size() const {
  std::lock_guard lock(mutex_);
  return verdicts_.size();
}

ClusterPartition cluster_samples(Judge& judge, const Question& question, std::span<const GenerationSample> samples,
                                 EntailmentCache* cache) {
  if (samples.empty()) {
    throw DomainError(fmt::format("question '{}': cannot cluster an empty sample list", question.id));
  }

  const auto entails = [&](std::size_t premise, std::size_t hypothesis) {
    const auto& a = samples[premise].text;
    const auto& b = samples[hypothesis].text;
    if (cache) {
      if (const auto hit = cache->find(question.id, a, b)) return *hit;
    }
    bool verdict = false;
    try {
      verdict = judge_entailment(judge, question.text, a, b);
    } catch (const Error& e) {
      rethrow_with_context(e, fmt::format("question '{}', entailment of sample {} -> sample {}", question.id,
                                          premise, hypothesis));
    }
    if (cache) cache->insert(question.id, a, b, verdict);
    return verdict;
  };

  ClusterPartition partition;
  partition.question_id = question.id;
  partition.assignment.reserve(samples.size());
  std::vector<std::size_t> representatives;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int cluster = -1;
    for (std::size_t c = 0; c < representatives.size(); ++c) {
      const std::size_t r = representatives[c];
      if (entails(i, r) && entails(r, i)) {
        cluster = static_cast<int>(c);
        break;
      }
    }
    if (cluster < 0) {
      cluster = static_cast<int>(representatives.size());
      representatives.push_back(i);
    }
    partition.assignment.push_back(cluster);
  }
  return partition;
}

}  // namespace mcuq
