#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "mcuq/backend.hpp"

namespace mcuq {

struct HttpOptions {
  // e.g. "http://localhost:8000/v1"; requests go to <base_url>/completions.
  std::string base_url;
  std::string api_key;  // sent as a Bearer token when non-empty
  std::string model;
  int max_parallel = 4;
  std::chrono::milliseconds request_timeout{30000};
  bool logprobs = true;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  int max_tokens = 64;

  // Fills base_url and api_key from UQ_API_BASE / UQ_API_KEY when unset.
  static HttpOptions from_config(const BackendConfig& config);
};

// Minimal client for the OpenAI-compatible completions endpoint.
// Transport failures, 429 and 5xx are retried with exponential backoff;
// other 4xx responses are reported as refusals without retrying. In-flight
// requests are capped at max_parallel.
class CompletionClient {
 public:
  explicit CompletionClient(HttpOptions options);
  ~CompletionClient();

  struct Reply {
    std::string text;
    std::vector<double> token_logprobs;
    // Top alternatives for the first generated token, as (token, logprob).
    std::vector<std::pair<std::string, double>> first_token_top;
  };

  Reply complete(const std::string& prompt, double temperature, int max_tokens, int top_logprobs);

  const HttpOptions& options() const { return options_; }

 private:
  struct Impl;
  HttpOptions options_;
  std::unique_ptr<Impl> impl_;
};

class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(HttpOptions options);

  std::string id() const override { return client_.options().model; }
  bool supports_logprobs() const override { return client_.options().logprobs; }
  GenerationSample complete(const Question& question, double temperature, int draw) override;
  double p_true(const Question& question, std::span<const std::string> candidates,
                std::string_view scored_answer, std::span<const FewShotExample> few_shot) override;

 private:
  CompletionClient client_;
};

// Judge backed by a completions endpoint; replies must start with yes/no.
class HttpJudge : public Judge {
 public:
  explicit HttpJudge(HttpOptions options, double temperature = 0.0);

  std::string id() const override;
  bool entails(std::string_view question_text, std::string_view answer_a, std::string_view answer_b) override;
  bool is_correct(const Question& question, std::string_view answer) override;

 private:
  CompletionClient client_;
  double temperature_;
};

}  // namespace mcuq
