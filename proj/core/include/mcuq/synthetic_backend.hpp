#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mcuq/backend.hpp"

namespace mcuq {

// Parameters of a seeded stand-in language model.
//
// Each question gets `vocab_per_question` candidate answers; candidate 0 is
// the reference answer. Candidate logits are
//
//   logit_0 = logit_spread * knowledge,   knowledge ~ N(skill - difficulty, knowledge_sd)
//   logit_j = logit_spread * z_j,         z_j ~ N(0, 1),  j >= 1
//
// drawn from a stream seeded by (seed, question id). A sample at temperature
// t picks a candidate from softmax(logits / t), so answer diversity grows
// with temperature and questions the model "knows" are both answered
// correctly and answered consistently.
struct SyntheticParams {
  std::uint64_t seed = 0;
  int vocab_per_question = 6;
  double logit_spread = 1.0;
  double skill = 1.0;
  double difficulty = 0.0;
  double knowledge_sd = 1.0;
  // Probability the correctness judge flips its verdict.
  double misjudge_rate = 0.0;
  bool logprobs = true;

  void validate() const;
};

class SyntheticWorld {
 public:
  explicit SyntheticWorld(SyntheticParams params);

  struct QuestionModel {
    std::vector<std::string> candidates;  // [0] is correct
    std::vector<double> logits;
  };

  const SyntheticParams& params() const { return params_; }

  QuestionModel model_for(const Question& question) const;

  // softmax(logits / temperature) over the question's candidates.
  std::vector<double> answer_distribution(const Question& question, double temperature) const;

 private:
  SyntheticParams params_;
};

class SyntheticBackend : public CompletionBackend {
 public:
  SyntheticBackend(std::string id, std::shared_ptr<const SyntheticWorld> world);

  std::string id() const override { return id_; }
  bool supports_logprobs() const override { return world_->params().logprobs; }

  // Draw `draw` of a question uses a uniform variate fixed by
  // (seed, question id, draw) and inverts the temperature-scaled CDF, so
  // runs at different temperatures share their random numbers.
  GenerationSample complete(const Question& question, double temperature, int draw) override;

  // Softmax probability at temperature 1 of `scored_answer` (0 when it is
  // not one of the question's candidates).
  double p_true(const Question& question, std::span<const std::string> candidates,
                std::string_view scored_answer, std::span<const FewShotExample> few_shot) override;

 private:
  std::string id_;
  std::shared_ptr<const SyntheticWorld> world_;
};

// Exact-string-equality entailment; correctness is equality with the
// reference answer, flipped with probability misjudge_rate.
class SyntheticJudge : public Judge {
 public:
  SyntheticJudge(std::string id, std::shared_ptr<const SyntheticWorld> world);

  std::string id() const override { return id_; }
  bool entails(std::string_view question_text, std::string_view answer_a, std::string_view answer_b) override;
  bool is_correct(const Question& question, std::string_view answer) override;

 private:
  std::string id_;
  std::shared_ptr<const SyntheticWorld> world_;
};

}  // namespace mcuq
