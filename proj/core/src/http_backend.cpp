#include "mcuq/http_backend.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "mcuq/error.hpp"
#include "mcuq/prompts.hpp"

namespace mcuq {
namespace prompts {
namespace {

std::string substitute(std::string_view tmpl, std::initializer_list<std::pair<std::string_view, std::string_view>> vars) {
  std::string out;
  out.reserve(tmpl.size() + 64);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const auto name = tmpl.substr(open + 1, close - open - 1);
    bool matched = false;
    for (const auto& [key, value] : vars) {
      if (key == name) {
        out.append(value);
        matched = true;
        break;
      }
    }
    if (!matched) out.append(tmpl.substr(open, close - open + 1));
    pos = close + 1;
  }
  out.append(tmpl.substr(pos));
  return out;
}

}  // namespace

std::string render_answer(std::string_view question) {
  return substitute(kAnswerTemplate, {{"question", question}});
}

std::string render_entailment(std::string_view question, std::string_view answer_a, std::string_view answer_b) {
  return substitute(kEntailmentTemplate, {{"question", question}, {"answer_a", answer_a}, {"answer_b", answer_b}});
}

std::string render_correctness(std::string_view question, std::string_view reference, std::string_view answer) {
  return substitute(kCorrectnessTemplate, {{"question", question}, {"reference", reference}, {"answer", answer}});
}

std::string render_p_true(std::string_view question, std::span<const std::string> candidates,
                          std::string_view answer, std::span<const FewShotExample> few_shot) {
  std::string examples;
  for (const auto& ex : few_shot) {
    examples += fmt::format(
        "Question: {}\nPossible answer: {}\nIs the possible answer:\n (A) True\n (B) False\n"
        "The possible answer is: {}\n\n",
        ex.question, ex.answer, ex.is_true ? "(A)" : "(B)");
  }
  std::string joined;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) joined += "; ";
    joined += candidates[i];
  }
  return substitute(kPTrueTemplate,
                    {{"examples", examples}, {"question", question}, {"candidates", joined}, {"answer", answer}});
}

bool parse_yes_no(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && (std::isspace(static_cast<unsigned char>(reply[i])) ||
                              std::ispunct(static_cast<unsigned char>(reply[i])))) {
    ++i;
  }
  std::string head;
  for (; i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i])); ++i) {
    head += static_cast<char>(std::tolower(static_cast<unsigned char>(reply[i])));
  }
  if (head == "yes") return true;
  if (head == "no") return false;
  throw JudgeParseError(fmt::format("judge reply does not start with yes/no: '{}'", reply.substr(0, 80)));
}

}  // namespace prompts

namespace {

using Json = nlohmann::json;

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError(fmt::format("base url '{}' must start with http:// or https://", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

std::string strip_choice_token(std::string token) {
  std::string out;
  for (char c : token) {
    if (c != ' ' && c != '(' && c != ')' && c != '\n') out += c;
  }
  return out;
}

}  // namespace

HttpOptions HttpOptions::from_config(const BackendConfig& config) {
  HttpOptions options;
  options.base_url = config.base_url.value_or(env_or_empty("UQ_API_BASE"));
  options.api_key = env_or_empty("UQ_API_KEY");
  options.model = config.model_name;
  options.max_parallel = config.max_parallel;
  options.request_timeout = config.request_timeout;
  options.logprobs = config.wants_logprobs;
  if (options.base_url.empty()) {
    throw ConfigError("http backend needs a base url (config base_url or UQ_API_BASE)");
  }
  return options;
}

struct CompletionClient::Impl {
  explicit Impl(int max_parallel) : in_flight(max_parallel) {}
  std::counting_semaphore<4096> in_flight;
  SplitUrl url;
};

CompletionClient::CompletionClient(HttpOptions options)
    : options_(std::move(options)), impl_(std::make_unique<Impl>(std::max(1, options_.max_parallel))) {
  if (options_.max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (options_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  impl_->url = split_url(options_.base_url);
}

CompletionClient::~CompletionClient() = default;

CompletionClient::Reply CompletionClient::complete(const std::string& prompt, double temperature, int max_tokens,
                                                   int top_logprobs) {
  Json request;
  request["model"] = options_.model;
  request["prompt"] = prompt;
  request["temperature"] = temperature;
  request["max_tokens"] = max_tokens;
  request["n"] = 1;
  if (options_.logprobs) request["logprobs"] = std::max(1, top_logprobs);
  const std::string body = request.dump();

  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.request_timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options_.request_timeout - seconds);

  std::string last_failure;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    httplib::Result result = [&] {
      impl_->in_flight.acquire();
      httplib::Client client(impl_->url.origin);
      client.set_connection_timeout(seconds.count(), micros.count());
      client.set_read_timeout(seconds.count(), micros.count());
      client.set_write_timeout(seconds.count(), micros.count());
      auto r = client.Post(impl_->url.path + "/completions", headers, body, "application/json");
      impl_->in_flight.release();
      return r;
    }();

    if (!result) {
      last_failure = fmt::format("request failed: {}", httplib::to_string(result.error()));
    } else if (result->status == 429 || result->status >= 500) {
      last_failure = fmt::format("HTTP {}: {}", result->status, result->body.substr(0, 200));
    } else if (result->status >= 400) {
      throw TransportError(fmt::format("provider refused request (HTTP {}): {}", result->status,
                                       result->body.substr(0, 200)));
    } else {
      Json reply;
      try {
        reply = Json::parse(result->body);
        const auto& choice = reply.at("choices").at(0);
        Reply out;
        out.text = choice.at("text").get<std::string>();
        if (const auto lp = choice.find("logprobs"); lp != choice.end() && !lp->is_null()) {
          if (const auto t = lp->find("token_logprobs"); t != lp->end() && t->is_array()) {
            for (const auto& v : *t) {
              if (v.is_number()) out.token_logprobs.push_back(std::min(0.0, v.get<double>()));
            }
          }
          if (const auto top = lp->find("top_logprobs"); top != lp->end() && top->is_array() && !top->empty() &&
                                                          (*top)[0].is_object()) {
            for (const auto& [token, value] : (*top)[0].items()) {
              out.first_token_top.emplace_back(token, value.get<double>());
            }
          }
        }
        return out;
      } catch (const nlohmann::json::exception& e) {
        throw TransportError(fmt::format("malformed completion response: {}", e.what()));
      }
    }
    if (attempt < options_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(fmt::format("{} after {} attempts", last_failure, options_.max_attempts));
}

HttpBackend::HttpBackend(HttpOptions options) : client_(std::move(options)) {}

GenerationSample HttpBackend::complete(const Question& question, double temperature, int) {
  const auto reply =
      client_.complete(prompts::render_answer(question.text), temperature, client_.options().max_tokens, 1);
  GenerationSample sample;
  sample.text = reply.text;
  // Trim the whitespace most completion endpoints prepend.
  const auto first = sample.text.find_first_not_of(" \n\t");
  const auto last = sample.text.find_last_not_of(" \n\t");
  sample.text = first == std::string::npos ? std::string() : sample.text.substr(first, last - first + 1);
  sample.temperature = temperature;
  if (supports_logprobs()) {
    if (reply.token_logprobs.empty()) {
      throw CapabilityError(fmt::format("backend '{}' returned no token logprobs", id()));
    }
    sample.token_logprobs = reply.token_logprobs;
  }
  return sample;
}

double HttpBackend::p_true(const Question& question, std::span<const std::string> candidates,
                           std::string_view scored_answer, std::span<const FewShotExample> few_shot) {
  if (!supports_logprobs()) {
    throw CapabilityError(fmt::format("backend '{}' exposes no token probabilities; P(True) unavailable", id()));
  }
  const auto prompt = prompts::render_p_true(question.text, candidates, scored_answer, few_shot);
  const auto reply = client_.complete(prompt, 0.0, 1, 5);
  double probability = 0.0;
  for (const auto& [token, logprob] : reply.first_token_top) {
    if (strip_choice_token(token) == "A") probability += std::exp(logprob);
  }
  if (reply.first_token_top.empty() && strip_choice_token(reply.text) == "A" && !reply.token_logprobs.empty()) {
    probability = std::exp(reply.token_logprobs.front());
  }
  return std::clamp(probability, 0.0, 1.0);
}

HttpJudge::HttpJudge(HttpOptions options, double temperature)
    : client_([&] {
        options.logprobs = false;
        options.max_tokens = 8;
        return std::move(options);
      }()),
      temperature_(temperature) {}

std::string HttpJudge::id() const { return fmt::format("{}@{}", client_.options().model, prompts::kVersion); }

bool HttpJudge::entails(std::string_view question_text, std::string_view answer_a, std::string_view answer_b) {
  const auto reply = client_.complete(prompts::render_entailment(question_text, answer_a, answer_b), temperature_,
                                      client_.options().max_tokens, 0);
  return prompts::parse_yes_no(reply.text);
}

bool HttpJudge::is_correct(const Question& question, std::string_view answer) {
  const auto reply = client_.complete(prompts::render_correctness(question.text, question.reference_answer, answer),
                                      temperature_, client_.options().max_tokens, 0);
  return prompts::parse_yes_no(reply.text);
}

}  // namespace mcuq
