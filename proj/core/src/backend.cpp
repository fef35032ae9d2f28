#include "mcuq/backend.hpp"

#include <cstdlib>

#include <fmt/format.h>

#include "mcuq/error.hpp"
#include "mcuq/http_backend.hpp"
#include "mcuq/mock_backend.hpp"
#include "mcuq/synthetic_backend.hpp"

namespace mcuq {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kHttp: return "http";
    case BackendKind::kMock: return "mock";
    case BackendKind::kSynthetic: return "synthetic";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "http") return BackendKind::kHttp;
  if (name == "mock") return BackendKind::kMock;
  if (name == "synthetic") return BackendKind::kSynthetic;
  throw ParseError(fmt::format("unknown backend kind '{}' (expected http, mock, synthetic)", name));
}

void BackendConfig::validate() const {
  if (kind == BackendKind::kHttp && (!base_url || base_url->empty())) {
    throw ConfigError("http backend requires base_url");
  }
  if (max_parallel < 1) throw ConfigError(fmt::format("max_parallel must be >= 1, got {}", max_parallel));
  if (request_timeout.count() <= 0) throw ConfigError("request_timeout must be positive");
  if (model_name.empty()) throw ConfigError("model name must not be empty");
}

namespace {

BackendConfig with_env_base_url(BackendConfig config) {
  if (config.kind == BackendKind::kHttp && (!config.base_url || config.base_url->empty())) {
    if (const char* base = std::getenv("UQ_API_BASE"); base && *base) config.base_url = base;
  }
  return config;
}

}  // namespace

double CompletionBackend::p_true(const Question&, std::span<const std::string>, std::string_view,
                                 std::span<const FewShotExample>) {
  throw CapabilityError(fmt::format("backend '{}' does not support P(True)", id()));
}

SampleSet generate(CompletionBackend& backend, const Question& question, const TemperatureSchedule& schedule,
                   std::string_view strategy_tag, const GenerateOptions& options) {
  try {
    if (schedule.values.size() < 2) {
      throw DomainError(fmt::format("schedule has {} entries; multi-sample estimation needs k >= 2",
                                    schedule.values.size()));
    }
    SampleSet set;
    set.question_id = question.id;
    set.strategy = std::string(strategy_tag);
    set.samples.reserve(schedule.values.size());
    const bool logprobs = backend.supports_logprobs();
    for (std::size_t i = 0; i < schedule.values.size(); ++i) {
      auto sample = backend.complete(question, schedule.values[i], static_cast<int>(i));
      sample.temperature = schedule.values[i];
      if (!logprobs) sample.token_logprobs.reset();
      set.samples.push_back(std::move(sample));
    }
    set.low_temp_answer = backend.complete(question, options.correctness_temperature, kAnswerDraw);
    set.low_temp_answer.temperature = options.correctness_temperature;
    set.low_temp_answer.token_logprobs.reset();

    if (options.query_p_true && logprobs) {
      std::vector<std::string> candidates;
      candidates.reserve(set.samples.size());
      for (const auto& s : set.samples) candidates.push_back(s.text);
      set.p_true_prob = p_true_query(backend, question, candidates, set.low_temp_answer.text, options.few_shot);
    }
    validate(set, options.correctness_temperature);
    return set;
  } catch (const Error& e) {
    rethrow_with_context(e, fmt::format("question '{}'", question.id));
  }
}

bool judge_entailment(Judge& judge, std::string_view question_text, std::string_view answer_a,
                      std::string_view answer_b) {
  return judge.entails(question_text, answer_a, answer_b);
}

CorrectnessRecord judge_correctness(Judge& judge, const Question& question, std::string_view answer_text) {
  try {
    return CorrectnessRecord{question.id, judge.is_correct(question, answer_text), judge.id()};
  } catch (const Error& e) {
    rethrow_with_context(e, fmt::format("question '{}'", question.id));
  }
}

double p_true_query(CompletionBackend& backend, const Question& question,
                    std::span<const std::string> candidate_answers, std::string_view scored_answer,
                    std::span<const FewShotExample> few_shot) {
  if (!backend.supports_logprobs()) {
    throw CapabilityError(fmt::format("backend '{}' exposes no token probabilities; P(True) unavailable",
                                      backend.id()));
  }
  if (candidate_answers.empty()) throw DomainError("P(True) needs at least one candidate answer");
  const double p = backend.p_true(question, candidate_answers, scored_answer, few_shot);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(fmt::format("P(True) probability {} outside [0, 1]", p));
  }
  return p;
}

std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& requested, std::uint64_t seed) {
  const BackendConfig config = with_env_base_url(requested);
  config.validate();
  switch (config.kind) {
    case BackendKind::kHttp:
      return std::make_unique<HttpBackend>(HttpOptions::from_config(config));
    case BackendKind::kMock:
      return std::make_unique<MockBackend>(config.model_name, config.wants_logprobs);
    case BackendKind::kSynthetic: {
      SyntheticParams params;
      params.seed = seed;
      params.logprobs = config.wants_logprobs;
      return std::make_unique<SyntheticBackend>(config.model_name,
                                                std::make_shared<const SyntheticWorld>(params));
    }
  }
  throw ConfigError("unknown backend kind");
}

std::unique_ptr<Judge> make_judge(const BackendConfig& requested, std::uint64_t seed) {
  const BackendConfig config = with_env_base_url(requested);
  config.validate();
  switch (config.kind) {
    case BackendKind::kHttp:
      return std::make_unique<HttpJudge>(HttpOptions::from_config(config));
    case BackendKind::kMock:
      return std::make_unique<MockJudge>(config.model_name);
    case BackendKind::kSynthetic: {
      SyntheticParams params;
      params.seed = seed;
      return std::make_unique<SyntheticJudge>(config.model_name, std::make_shared<const SyntheticWorld>(params));
    }
  }
  throw ConfigError("unknown backend kind");
}

}  // namespace mcuq
