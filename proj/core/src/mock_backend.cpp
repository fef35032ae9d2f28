#include "mcuq/mock_backend.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mcuq/error.hpp"

namespace mcuq {

MockBackend::MockBackend(std::string id, bool logprobs) : id_(std::move(id)), logprobs_(logprobs) {}

void MockBackend::script(const std::string& question_id, std::vector<std::string> texts) {
  std::lock_guard lock(mutex_);
  scripts_[question_id].texts = std::move(texts);
}

void MockBackend::script_logprobs(const std::string& question_id,
                                  std::vector<std::vector<double>> token_logprobs) {
  std::lock_guard lock(mutex_);
  scripts_[question_id].logprobs = std::move(token_logprobs);
}

void MockBackend::script_answer(const std::string& question_id, std::string answer) {
  std::lock_guard lock(mutex_);
  scripts_[question_id].answer = std::move(answer);
}

void MockBackend::script_p_true_logprob(const std::string& question_id, double logprob) {
  std::lock_guard lock(mutex_);
  scripts_[question_id].p_true_logprob = logprob;
}

int MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

GenerationSample MockBackend::complete(const Question& question, double temperature, int draw) {
  std::lock_guard lock(mutex_);
  ++calls_;
  GenerationSample sample;
  sample.temperature = temperature;
  sample.text = question.reference_answer;
  const auto it = scripts_.find(question.id);
  if (it != scripts_.end()) {
    const Script& s = it->second;
    if (draw == kAnswerDraw) {
      if (s.answer) sample.text = *s.answer;
    } else if (!s.texts.empty()) {
      sample.text = s.texts[static_cast<std::size_t>(draw) % s.texts.size()];
    }
    if (logprobs_ && draw != kAnswerDraw && !s.logprobs.empty()) {
      sample.token_logprobs = s.logprobs[static_cast<std::size_t>(draw) % s.logprobs.size()];
    }
  }
  if (logprobs_ && !sample.token_logprobs) sample.token_logprobs = std::vector<double>{std::log(0.5)};
  return sample;
}

double MockBackend::p_true(const Question& question, std::span<const std::string>, std::string_view,
                           std::span<const FewShotExample>) {
  if (!logprobs_) {
    throw CapabilityError(fmt::format("backend '{}' exposes no token probabilities; P(True) unavailable", id_));
  }
  std::lock_guard lock(mutex_);
  ++calls_;
  const auto it = scripts_.find(question.id);
  const double lp = (it != scripts_.end() && it->second.p_true_logprob) ? *it->second.p_true_logprob
                                                                        : std::log(0.5);
  return std::exp(lp);
}

MockJudge::MockJudge(std::string id) : id_(std::move(id)) {}

void MockJudge::script_entailment(std::string answer_a, std::string answer_b, bool verdict) {
  std::lock_guard lock(mutex_);
  entailment_[{std::move(answer_a), std::move(answer_b)}] = verdict;
}

void MockJudge::script_verdicts(std::vector<bool> verdicts) {
  std::lock_guard lock(mutex_);
  verdicts_ = std::move(verdicts);
  next_verdict_ = 0;
}

bool MockJudge::entails(std::string_view, std::string_view answer_a, std::string_view answer_b) {
  std::lock_guard lock(mutex_);
  ++entailment_calls_;
  if (fail_entailment_) throw JudgeParseError("scripted judge reply did not start with yes/no");
  const auto it = entailment_.find({std::string(answer_a), std::string(answer_b)});
  if (it != entailment_.end()) return it->second;
  return answer_a == answer_b;
}

bool MockJudge::is_correct(const Question& question, std::string_view answer) {
  std::lock_guard lock(mutex_);
  ++correctness_calls_;
  if (next_verdict_ < verdicts_.size()) return verdicts_[next_verdict_++];
  return answer == question.reference_answer;
}

int MockJudge::entailment_calls() const {
  std::lock_guard lock(mutex_);
  return entailment_calls_;
}

int MockJudge::correctness_calls() const {
  std::lock_guard lock(mutex_);
  return correctness_calls_;
}

}  // namespace mcuq
