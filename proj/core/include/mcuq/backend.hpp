#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcuq/temperature.hpp"
#include "mcuq/types.hpp"

namespace mcuq {

enum class BackendKind { kHttp, kMock, kSynthetic };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::kSynthetic;
  std::optional<std::string> base_url;
  std::string model_name = "synthetic";
  int max_parallel = 4;
  std::chrono::milliseconds request_timeout{30000};
  bool wants_logprobs = true;

  // Http needs base_url; max_parallel >= 1. Throws ConfigError.
  void validate() const;
};

// A worked example for the P(True) prompt.
struct FewShotExample {
  std::string question;
  std::string answer;
  bool is_true = true;
};

// Draw index used for the extra low-temperature answer.
inline constexpr int kAnswerDraw = -1;

// A completion provider: real API, scripted mock, or synthetic model.
// Implementations must be safe to call from several threads at once.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  virtual std::string id() const = 0;
  virtual bool supports_logprobs() const = 0;

  // One completion of `question` at `temperature`. `draw` is the sample slot
  // (0..k-1, or kAnswerDraw); seeded backends use it to stay deterministic.
  virtual GenerationSample complete(const Question& question, double temperature, int draw) = 0;

  // Probability the model assigns to choice (A) "True" for `scored_answer`.
  // Throws CapabilityError when the backend exposes no token probabilities.
  virtual double p_true(const Question& question, std::span<const std::string> candidates,
                        std::string_view scored_answer, std::span<const FewShotExample> few_shot);
};

// LLM-as-judge roles: directional entailment and correctness against the
// reference answer. Implementations must be reentrant.
class Judge {
 public:
  virtual ~Judge() = default;

  virtual std::string id() const = 0;

  // True iff `answer_a`, in the context of the question, entails `answer_b`.
  virtual bool entails(std::string_view question_text, std::string_view answer_a,
                       std::string_view answer_b) = 0;

  virtual bool is_correct(const Question& question, std::string_view answer) = 0;
};

struct GenerateOptions {
  double correctness_temperature = kDefaultCorrectnessTemperature;
  // Query P(True) for the low-temperature answer when the backend supports it.
  bool query_p_true = false;
  std::vector<FewShotExample> few_shot;
};

// Draws one sample per schedule entry plus the low-temperature answer whose
// correctness is judged. P(True) scores the low-temperature answer against
// the k sampled candidates. Failures carry the question id.
SampleSet generate(CompletionBackend& backend, const Question& question,
                   const TemperatureSchedule& schedule, std::string_view strategy_tag,
                   const GenerateOptions& options = {});

bool judge_entailment(Judge& judge, std::string_view question_text, std::string_view answer_a,
                      std::string_view answer_b);

CorrectnessRecord judge_correctness(Judge& judge, const Question& question, std::string_view answer_text);

double p_true_query(CompletionBackend& backend, const Question& question,
                    std::span<const std::string> candidate_answers, std::string_view scored_answer,
                    std::span<const FewShotExample> few_shot = {});

// Builds a completion backend / judge from a config. Synthetic and Mock
// backends built this way use default world parameters seeded by `seed`.
std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& config, std::uint64_t seed);
std::unique_ptr<Judge> make_judge(const BackendConfig& config, std::uint64_t seed);

}  // namespace mcuq
