#include "mcuq/records.hpp"

#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "mcuq/error.hpp"

namespace mcuq {
namespace {

using Json = nlohmann::ordered_json;

template <typename T>
T require(const Json& j, const char* key) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(fmt::format("missing field '{}'", key));
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(fmt::format("field '{}' has the wrong type", key));
  }
}

Json sample_to_json(const GenerationSample& s, bool with_logprobs) {
  Json j;
  j["text"] = s.text;
  j["temperature"] = s.temperature;
  if (with_logprobs) {
    j["token_logprobs"] = s.token_logprobs ? Json(*s.token_logprobs) : Json(nullptr);
  }
  return j;
}

GenerationSample sample_from_json(const Json& j) {
  GenerationSample s;
  s.text = require<std::string>(j, "text");
  s.temperature = require<double>(j, "temperature");
  if (const auto it = j.find("token_logprobs"); it != j.end() && !it->is_null()) {
    try {
      s.token_logprobs = it->get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError("field 'token_logprobs' must be a list of numbers or null");
    }
  }
  return s;
}

Json to_json(const Question& q) {
  Json j;
  j["id"] = q.id;
  j["question"] = q.text;
  j["reference_answer"] = q.reference_answer;
  return j;
}

Json to_json(const SampleSet& s) {
  Json j;
  j["question_id"] = s.question_id;
  j["strategy"] = s.strategy;
  Json samples = Json::array();
  for (const auto& sample : s.samples) samples.push_back(sample_to_json(sample, true));
  j["samples"] = std::move(samples);
  j["low_temp_answer"] = sample_to_json(s.low_temp_answer, false);
  j["p_true_prob"] = s.p_true_prob ? Json(*s.p_true_prob) : Json(nullptr);
  return j;
}

Json to_json(const ClusterPartition& p) {
  Json j;
  j["question_id"] = p.question_id;
  j["assignment"] = p.assignment;
  return j;
}

Json to_json(const CorrectnessRecord& r) {
  Json j;
  j["question_id"] = r.question_id;
  j["correct"] = r.correct;
  j["judge_id"] = r.judge_id;
  return j;
}

Json to_json(const UQScore& s) {
  Json j;
  j["question_id"] = s.question_id;
  j["estimator"] = std::string(to_string(s.estimator));
  j["score"] = s.score;
  return j;
}

Json to_json(const EvalOutcome& o) {
  Json j;
  j["backend"] = o.key.backend_id;
  j["dataset"] = o.key.dataset_id;
  j["estimator"] = std::string(to_string(o.key.estimator));
  j["strategy"] = o.key.strategy;
  j["metric"] = std::string(to_string(o.metric));
  j["point"] = o.point;
  j["ci_low"] = o.ci_low;
  j["ci_high"] = o.ci_high;
  j["n"] = o.n;
  j["bootstrap_draws"] = o.bootstrap_draws;
  return j;
}

template <typename Record>
Record from_json(const Json& j);

template <>
Question from_json<Question>(const Json& j) {
  Question q;
  q.id = require<std::string>(j, "id");
  q.text = require<std::string>(j, "question");
  q.reference_answer = require<std::string>(j, "reference_answer");
  return q;
}

template <>
SampleSet from_json<SampleSet>(const Json& j) {
  SampleSet s;
  s.question_id = require<std::string>(j, "question_id");
  s.strategy = require<std::string>(j, "strategy");
  const auto samples = require<Json>(j, "samples");
  if (!samples.is_array()) throw ParseError("field 'samples' must be a list");
  for (const auto& item : samples) s.samples.push_back(sample_from_json(item));
  s.low_temp_answer = sample_from_json(require<Json>(j, "low_temp_answer"));
  if (const auto it = j.find("p_true_prob"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw ParseError("field 'p_true_prob' must be a number or null");
    s.p_true_prob = it->get<double>();
  }
  return s;
}

template <>
ClusterPartition from_json<ClusterPartition>(const Json& j) {
  ClusterPartition p;
  p.question_id = require<std::string>(j, "question_id");
  p.assignment = require<std::vector<int>>(j, "assignment");
  return p;
}

template <>
CorrectnessRecord from_json<CorrectnessRecord>(const Json& j) {
  CorrectnessRecord r;
  r.question_id = require<std::string>(j, "question_id");
  r.correct = require<bool>(j, "correct");
  r.judge_id = require<std::string>(j, "judge_id");
  return r;
}

template <>
UQScore from_json<UQScore>(const Json& j) {
  UQScore s;
  s.question_id = require<std::string>(j, "question_id");
  s.estimator = parse_estimator(require<std::string>(j, "estimator"));
  s.score = require<double>(j, "score");
  return s;
}

template <>
EvalOutcome from_json<EvalOutcome>(const Json& j) {
  EvalOutcome o;
  o.key.backend_id = require<std::string>(j, "backend");
  o.key.dataset_id = require<std::string>(j, "dataset");
  o.key.estimator = parse_estimator(require<std::string>(j, "estimator"));
  o.key.strategy = require<std::string>(j, "strategy");
  o.metric = parse_metric(require<std::string>(j, "metric"));
  o.point = require<double>(j, "point");
  o.ci_low = require<double>(j, "ci_low");
  o.ci_high = require<double>(j, "ci_high");
  o.n = require<int>(j, "n");
  o.bootstrap_draws = require<int>(j, "bootstrap_draws");
  return o;
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

template <typename Record>
std::vector<Record> parse_lines(const std::filesystem::path& path, std::string_view content,
                                bool tolerate_torn_tail) {
  std::vector<Record> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto end = content.find('\n', pos);
    const bool terminated = end != std::string_view::npos;
    const auto line = content.substr(pos, terminated ? end - pos : std::string_view::npos);
    pos = terminated ? end + 1 : content.size();
    ++line_no;
    if (is_blank(line)) continue;
    try {
      out.push_back(parse_jsonl_line<Record>(line));
    } catch (const Error& e) {
      if (tolerate_torn_tail && !terminated) break;
      rethrow_with_context(e, fmt::format("{}:{}", path.string(), line_no));
    }
  }
  return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomically(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot move '{}' into place: {}", path.string(), ec.message()));
}

template <typename Record>
std::string to_jsonl_line(const Record& record) {
  return to_json(record).dump();
}

template <typename Record>
Record parse_jsonl_line(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("invalid JSON: {}", e.what()));
  }
  Record record = from_json<Record>(j);
  validate(record);
  return record;
}

template <typename Record>
void save_records(std::span<const Record> records, const std::filesystem::path& path) {
  std::string text;
  for (const auto& r : records) {
    text += to_jsonl_line(r);
    text += '\n';
  }
  write_file_atomically(path, text);
}

template <typename Record>
std::vector<Record> load_records(const std::filesystem::path& path) {
  return parse_lines<Record>(path, read_file(path), false);
}

template <typename Record>
std::vector<Record> load_records_for_resume(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return parse_lines<Record>(path, read_file(path), true);
}

template <typename Record>
JsonlAppender<Record>::JsonlAppender(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // A torn last line from an interrupted run would merge with the next
  // append; terminate it first.
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    const auto content = read_file(path);
    if (content.back() != '\n') {
      std::ofstream fix(path, std::ios::binary | std::ios::app);
      fix << '\n';
    }
  }
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw IoError(fmt::format("cannot open '{}' for appending", path.string()));
}

template <typename Record>
void JsonlAppender<Record>::append(const Record& record) {
  const auto line = to_jsonl_line(record);
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw IoError(fmt::format("append to '{}' failed", path_.string()));
}

std::vector<Question> load_dataset(const std::filesystem::path& path) {
  auto questions = load_records<Question>(path);
  std::unordered_set<std::string> ids;
  for (const auto& q : questions) {
    if (!ids.insert(q.id).second) {
      throw ValidationError(fmt::format("{}: duplicate question id '{}'", path.string(), q.id));
    }
  }
  return questions;
}

#define MCUQ_INSTANTIATE_RECORD(Record)                                                        \
  template std::string to_jsonl_line<Record>(const Record&);                                   \
  template Record parse_jsonl_line<Record>(std::string_view);                                  \
  template void save_records<Record>(std::span<const Record>, const std::filesystem::path&);   \
  template std::vector<Record> load_records<Record>(const std::filesystem::path&);             \
  template std::vector<Record> load_records_for_resume<Record>(const std::filesystem::path&);  \
  template class JsonlAppender<Record>;

MCUQ_INSTANTIATE_RECORD(Question)
MCUQ_INSTANTIATE_RECORD(SampleSet)
MCUQ_INSTANTIATE_RECORD(ClusterPartition)
MCUQ_INSTANTIATE_RECORD(CorrectnessRecord)
MCUQ_INSTANTIATE_RECORD(UQScore)
MCUQ_INSTANTIATE_RECORD(EvalOutcome)

#undef MCUQ_INSTANTIATE_RECORD

}  // namespace mcuq
