#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcuq/types.hpp"

namespace mcuq {

// JSONL persistence. One record per line, keys in a fixed order, so the
// same records always produce the same bytes.
//
//   dataset      {"id","question","reference_answer"}
//   generations  {"question_id","strategy","samples":[{"text","temperature","token_logprobs"|null}],
//                 "low_temp_answer":{"text","temperature"},"p_true_prob"|null}
//   clusters     {"question_id","assignment":[...]}
//   labels       {"question_id","correct","judge_id"}
//   scores       {"question_id","estimator","score"}
//   outcomes     {"backend","dataset","estimator","strategy","metric","point","ci_low","ci_high",
//                 "n","bootstrap_draws"}
//
// Supported Record types: Question, SampleSet, ClusterPartition,
// CorrectnessRecord, UQScore, EvalOutcome.

// Reads a dataset file. Questions come back in file order. Malformed lines
// raise ParseError naming the line; a repeated id raises ValidationError.
std::vector<Question> load_dataset(const std::filesystem::path& path);

template <typename Record>
std::string to_jsonl_line(const Record& record);

// Parses and validates one line. Throws ParseError on schema mismatch and
// ValidationError on invariant violations.
template <typename Record>
Record parse_jsonl_line(std::string_view line);

// Writes via a temporary file and rename, so readers never see a partial file.
template <typename Record>
void save_records(std::span<const Record> records, const std::filesystem::path& path);

template <typename Record>
void save_records(const std::vector<Record>& records, const std::filesystem::path& path) {
  save_records(std::span<const Record>(records), path);
}

// Missing file is an IoError; blank lines are skipped.
template <typename Record>
std::vector<Record> load_records(const std::filesystem::path& path);

// Like load_records, but a missing file yields an empty list and a torn
// final line (no trailing newline, unparseable) is dropped. Used to resume
// interrupted runs.
template <typename Record>
std::vector<Record> load_records_for_resume(const std::filesystem::path& path);

// Thread-safe line appender for incremental checkpointing.
template <typename Record>
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path);

  void append(const Record& record);

 private:
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
};

// Writes `text` to `path` through a temporary file and rename.
void write_file_atomically(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

}  // namespace mcuq
