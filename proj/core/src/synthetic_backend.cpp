#include "mcuq/synthetic_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mcuq/error.hpp"
#include "mcuq/rng.hpp"

namespace mcuq {
namespace {

constexpr const char* kFillerWords[] = {"perhaps", "roughly", "the", "famous", "old", "northern",
                                        "second", "small", "red", "early"};

std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
  std::vector<double> p(logits.size());
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - top) / temperature);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

std::size_t count_words(const std::string& text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return std::max<std::size_t>(words, 1);
}

}  // namespace

void SyntheticParams::validate() const {
  if (vocab_per_question < 2) {
    throw ConfigError(fmt::format("synthetic vocab_per_question must be >= 2, got {}", vocab_per_question));
  }
  if (!(logit_spread > 0.0)) throw ConfigError("synthetic logit_spread must be > 0");
  if (!(knowledge_sd >= 0.0)) throw ConfigError("synthetic knowledge_sd must be >= 0");
  if (!(misjudge_rate >= 0.0 && misjudge_rate <= 1.0)) {
    throw ConfigError("synthetic misjudge_rate must be in [0, 1]");
  }
}

SyntheticWorld::SyntheticWorld(SyntheticParams params) : params_(params) { params_.validate(); }

SyntheticWorld::QuestionModel SyntheticWorld::model_for(const Question& question) const {
  Rng rng(derive_seed(params_.seed, question.id));
  const auto m = static_cast<std::size_t>(params_.vocab_per_question);
  QuestionModel model;
  model.candidates.reserve(m);
  model.logits.reserve(m);
  model.candidates.push_back(question.reference_answer);
  const double knowledge = rng.normal(params_.skill - params_.difficulty, params_.knowledge_sd);
  model.logits.push_back(params_.logit_spread * knowledge);
  for (std::size_t j = 1; j < m; ++j) {
    // Distractors of varying token length so length normalization matters.
    std::string text = fmt::format("option {}", j);
    const std::size_t fillers = rng.index(3);
    for (std::size_t w = 0; w < fillers; ++w) {
      text = fmt::format("{} {}", kFillerWords[rng.index(std::size(kFillerWords))], text);
    }
    if (text == question.reference_answer) text += " (alt)";
    model.candidates.push_back(std::move(text));
    model.logits.push_back(params_.logit_spread * rng.normal());
  }
  return model;
}

std::vector<double> SyntheticWorld::answer_distribution(const Question& question, double temperature) const {
  if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
  return softmax(model_for(question).logits, temperature);
}

SyntheticBackend::SyntheticBackend(std::string id, std::shared_ptr<const SyntheticWorld> world)
    : id_(std::move(id)), world_(std::move(world)) {}

GenerationSample SyntheticBackend::complete(const Question& question, double temperature, int draw) {
  if (!(temperature > 0.0)) throw DomainError(fmt::format("temperature must be > 0, got {}", temperature));
  const auto model = world_->model_for(question);
  const auto p = softmax(model.logits, temperature);

  Rng rng(derive_seed(derive_seed(world_->params().seed ^ 0x5a17ULL, question.id),
                      static_cast<std::uint64_t>(static_cast<std::int64_t>(draw) + 2)));
  const double u = rng.uniform();
  std::size_t pick = p.size() - 1;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) {
      pick = i;
      break;
    }
  }

  GenerationSample sample;
  sample.text = model.candidates[pick];
  sample.temperature = temperature;
  if (supports_logprobs()) {
    const double total = std::log(std::max(p[pick], 1e-300));
    const std::size_t tokens = count_words(sample.text);
    sample.token_logprobs = std::vector<double>(tokens, std::min(0.0, total / static_cast<double>(tokens)));
  }
  return sample;
}

double SyntheticBackend::p_true(const Question& question, std::span<const std::string> candidates,
                                std::string_view scored_answer, std::span<const FewShotExample>) {
  if (!supports_logprobs()) {
    throw CapabilityError(fmt::format("backend '{}' exposes no token probabilities; P(True) unavailable", id_));
  }
  if (candidates.empty()) throw DomainError("P(True) needs at least one candidate answer");
  const auto model = world_->model_for(question);
  const auto p = softmax(model.logits, 1.0);
  for (std::size_t i = 0; i < model.candidates.size(); ++i) {
    if (model.candidates[i] == scored_answer) return p[i];
  }
  return 0.0;
}

SyntheticJudge::SyntheticJudge(std::string id, std::shared_ptr<const SyntheticWorld> world)
    : id_(std::move(id)), world_(std::move(world)) {}

bool SyntheticJudge::entails(std::string_view, std::string_view answer_a, std::string_view answer_b) {
  return answer_a == answer_b;
}

bool SyntheticJudge::is_correct(const Question& question, std::string_view answer) {
  const bool verdict = answer == question.reference_answer;
  const double rate = world_->params().misjudge_rate;
  if (rate <= 0.0) return verdict;
  Rng rng(derive_seed(derive_seed(world_->params().seed ^ 0x7u, question.id), answer));
  return rng.uniform() < rate ? !verdict : verdict;
}

}  // namespace mcuq
