#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcuq/backend.hpp"

namespace mcuq {

// Scripted completion backend for tests and dry runs.
//
// Scripted questions return their texts in draw order (cycling when the
// schedule is longer than the script); the low-temperature answer returns
// the scripted answer if set, else the reference answer. Unscripted
// questions echo the reference answer for every draw.
class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(std::string id = "mock", bool logprobs = true);

  void script(const std::string& question_id, std::vector<std::string> texts);
  void script_logprobs(const std::string& question_id, std::vector<std::vector<double>> token_logprobs);
  void script_answer(const std::string& question_id, std::string answer);
  // Natural-log probability of the (A) token returned by p_true.
  void script_p_true_logprob(const std::string& question_id, double logprob);

  std::string id() const override { return id_; }
  bool supports_logprobs() const override { return logprobs_; }
  GenerationSample complete(const Question& question, double temperature, int draw) override;
  double p_true(const Question& question, std::span<const std::string> candidates,
                std::string_view scored_answer, std::span<const FewShotExample> few_shot) override;

  int calls() const;

 private:
  struct Script {
    std::vector<std::string> texts;
    std::vector<std::vector<double>> logprobs;
    std::optional<std::string> answer;
    std::optional<double> p_true_logprob;
  };

  std::string id_;
  bool logprobs_;
  mutable std::mutex mutex_;
  std::map<std::string, Script> scripts_;
  int calls_ = 0;
};

// Scripted judge. Entailment defaults to exact string equality; individual
// ordered pairs can be overridden. Correctness verdicts come from a
// scripted queue when one is set, else from equality with the reference.
class MockJudge : public Judge {
 public:
  explicit MockJudge(std::string id = "mock-judge");

  void script_entailment(std::string answer_a, std::string answer_b, bool verdict);
  void script_verdicts(std::vector<bool> verdicts);
  // Makes every entailment call throw JudgeParseError (simulates an
  // unparseable reply).
  void fail_entailment(bool fail) { fail_entailment_ = fail; }

  std::string id() const override { return id_; }
  bool entails(std::string_view question_text, std::string_view answer_a, std::string_view answer_b) override;
  bool is_correct(const Question& question, std::string_view answer) override;

  int entailment_calls() const;
  int correctness_calls() const;

 private:
  std::string id_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, bool> entailment_;
  std::vector<bool> verdicts_;
  std::size_t next_verdict_ = 0;
  bool fail_entailment_ = false;
  int entailment_calls_ = 0;
  int correctness_calls_ = 0;
};

}  // namespace mcuq
