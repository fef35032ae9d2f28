#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>

#include "mcuq/backend.hpp"
#include "mcuq/types.hpp"

namespace mcuq {

// Entailment verdicts keyed by (question id, premise, hypothesis). Entailment
// is directional, so (a, b) and (b, a) are separate entries.
class EntailmentCache {
 public:
  std::optional<bool> find(const std::string& question_id, std::string_view premise,
                           std::string_view hypothesis) const;
  void insert(const std::string& question_id, std::string_view premise, std::string_view hypothesis, bool verdict);
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  mutable std::mutex mutex_;
  std::map<Key, bool> verdicts_;
};

// Greedy bidirectional-entailment clustering. Samples are visited in order;
// each joins the first cluster whose first member r satisfies
// judge(sample, r) && judge(r, sample), otherwise it opens a new cluster.
// Judge failures propagate with the offending sample indices attached.
ClusterPartition cluster_samples(Judge& judge, const Question& question,
                                 std::span<const GenerationSample> samples, EntailmentCache* cache = nullptr);

}  // namespace mcuq
