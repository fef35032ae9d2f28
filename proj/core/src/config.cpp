#include "mcuq/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mcuq/error.hpp"
#include "mcuq/records.hpp"

namespace mcuq {
namespace {

class LineParser {
 public:
  LineParser(std::string_view text, int line) : text_(text), line_(line) {}

  ConfigValue value() {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') return array_value();
    return bare_value();
  }

  void expect_end() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] != '#') fail(fmt::format("unexpected '{}'", text_.substr(pos_)));
  }

 private:
  [[noreturn]] void fail(const std::string& why) const { throw ParseError(fmt::format("line {}: {}", line_, why)); }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  ConfigValue string_value() {
    const char quote = text_[pos_++];
    ConfigValue v;
    v.type = ConfigValue::Type::kString;
    v.line = line_;
    while (pos_ < text_.size() && text_[pos_] != quote) {
      char c = text_[pos_++];
      if (c == '\\' && quote == '"' && pos_ < text_.size()) {
        const char e = text_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(fmt::format("unsupported escape '\\{}'", e));
        }
      }
      v.text += c;
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;
    return v;
  }

  ConfigValue array_value() {
    ++pos_;
    ConfigValue v;
    v.type = ConfigValue::Type::kArray;
    v.line = line_;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      ConfigValue item = value();
      if (item.type == ConfigValue::Type::kArray) fail("nested arrays are not supported");
      v.items.push_back(std::move(item));
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
    }
  }

  ConfigValue bare_value() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '#' &&
           text_[pos_] != ' ' && text_[pos_] != '\t') {
      ++pos_;
    }
    const std::string_view word = text_.substr(start, pos_ - start);
    ConfigValue v;
    v.line = line_;
    v.text = std::string(word);
    if (word == "true" || word == "false") {
      v.type = ConfigValue::Type::kBool;
      v.boolean = word == "true";
      return v;
    }
    std::string digits;
    for (char c : word) {
      if (c != '_') digits += c;
    }
    const char* begin = digits.data();
    if (!digits.empty() && digits.front() == '+') ++begin;
    const auto [end, ec] = std::from_chars(begin, digits.data() + digits.size(), v.number);
    if (ec != std::errc() || end != digits.data() + digits.size() || digits.empty()) {
      fail(fmt::format("'{}' is not a string, number, boolean or array (quote strings)", word));
    }
    v.type = ConfigValue::Type::kNumber;
    v.text = digits;
    return v;
  }

  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

// Typed, strict access to one table: every key must be consumed.
class TableReader {
 public:
  TableReader(const ConfigTable& table, std::string where) : table_(table), where_(std::move(where)) {}

  const ConfigValue* find(const std::string& key) {
    used_.insert(key);
    const auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

  std::optional<std::string> string(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (v->type != ConfigValue::Type::kString) fail(*v, key, "a string");
    return v->text;
  }

  std::optional<double> number(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (v->type != ConfigValue::Type::kNumber) fail(*v, key, "a number");
    return v->number;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    return as_integer(*v, key);
  }

  std::optional<bool> boolean(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (v->type != ConfigValue::Type::kBool) fail(*v, key, "true or false");
    return v->boolean;
  }

  // Accepts an array of strings or one comma-separated string.
  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    std::vector<std::string> out;
    if (v->type == ConfigValue::Type::kString) {
      out.push_back(v->text);
      return out;
    }
    if (v->type != ConfigValue::Type::kArray) fail(*v, key, "an array of strings");
    for (const auto& item : v->items) {
      if (item.type != ConfigValue::Type::kString) fail(item, key, "an array of strings");
      out.push_back(item.text);
    }
    return out;
  }

  std::optional<std::vector<std::uint64_t>> unsigned_list(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    std::vector<std::uint64_t> out;
    const auto one = [&](const ConfigValue& item) {
      if (item.type != ConfigValue::Type::kNumber) fail(item, key, "non-negative integers");
      std::uint64_t x = 0;
      const auto [end, ec] = std::from_chars(item.text.data(), item.text.data() + item.text.size(), x);
      if (ec != std::errc() || end != item.text.data() + item.text.size()) {
        fail(item, key, "non-negative integers");
      }
      out.push_back(x);
    };
    if (v->type == ConfigValue::Type::kArray) {
      for (const auto& item : v->items) one(item);
    } else {
      one(*v);
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : table_) {
      if (!used_.contains(key)) {
        throw ConfigError(fmt::format("line {}: unknown key '{}' in {}", value.line, key, where_));
      }
    }
  }

 private:
  [[noreturn]] void fail(const ConfigValue& v, const std::string& key, const char* expected) const {
    throw ConfigError(fmt::format("line {}: '{}' in {} must be {}", v.line, key, where_, expected));
  }

  std::int64_t as_integer(const ConfigValue& v, const std::string& key) const {
    if (v.type != ConfigValue::Type::kNumber) fail(v, key, "an integer");
    std::int64_t x = 0;
    const auto [end, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), x);
    if (ec != std::errc() || end != v.text.data() + v.text.size()) fail(v, key, "an integer");
    return x;
  }

  const ConfigTable& table_;
  std::string where_;
  std::set<std::string> used_;
};

int to_int(std::int64_t x, const char* what) {
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(fmt::format("{} out of range", what));
  }
  return static_cast<int>(x);
}

BackendConfig read_backend_config(TableReader& r, const std::string& default_model) {
  BackendConfig c;
  if (auto kind = r.string("kind")) c.kind = parse_backend_kind(*kind);
  c.base_url = r.string("base_url");
  c.model_name = r.string("model").value_or(default_model);
  if (auto v = r.integer("max_parallel")) c.max_parallel = to_int(*v, "max_parallel");
  if (auto v = r.integer("timeout_ms")) c.request_timeout = std::chrono::milliseconds(*v);
  if (auto v = r.boolean("logprobs")) c.wants_logprobs = *v;
  return c;
}

}  // namespace

ConfigDocument parse_config(std::string_view text) {
  ConfigDocument doc;
  ConfigTable* current = &doc.root;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) throw ParseError(fmt::format("line {}: unterminated section", line_no));
      const auto name = trim(line.substr(1, close - 1));
      LineParser(line.substr(close + 1), line_no).expect_end();
      if (!valid_key(name)) throw ParseError(fmt::format("line {}: bad section name '{}'", line_no, name));
      const auto [it, inserted] = doc.sections.try_emplace(std::string(name));
      if (!inserted) throw ParseError(fmt::format("line {}: section [{}] appears twice", line_no, name));
      current = &it->second;
    } else {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(fmt::format("line {}: expected key = value", line_no));
      const auto key = trim(line.substr(0, eq));
      if (!valid_key(key)) throw ParseError(fmt::format("line {}: bad key '{}'", line_no, key));
      LineParser parser(line.substr(eq + 1), line_no);
      ConfigValue value = parser.value();
      parser.expect_end();
      if (!current->try_emplace(std::string(key), std::move(value)).second) {
        throw ParseError(fmt::format("line {}: key '{}' appears twice", line_no, key));
      }
    }
    if (end == text.size()) break;
  }
  return doc;
}

std::vector<Strategy> ExperimentGrid::effective_strategies() const {
  if (!strategies.empty()) return strategies;
  std::vector<Strategy> out{Strategy::mct()};
  for (double tau : mct_grid(schedule.tau_min, schedule.tau_max, schedule.k)) out.push_back(Strategy::fixed(tau));
  return out;
}

void ExperimentGrid::validate() const {
  if (backends.empty()) throw ConfigError("experiment needs at least one backend");
  if (datasets.empty()) throw ConfigError("experiment needs at least one dataset");
  if (estimators.empty()) throw ConfigError("experiment needs at least one estimator");
  if (metrics.empty()) throw ConfigError("experiment needs at least one metric");
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (bootstrap_draws < 1) throw ConfigError(fmt::format("bootstrap_draws must be >= 1, got {}", bootstrap_draws));
  if (concurrency < 1) throw ConfigError(fmt::format("concurrency must be >= 1, got {}", concurrency));
  if (aurac_deciles < 1) throw ConfigError("aurac_deciles must be >= 1");
  if (!(correctness_temperature > 0.0)) throw ConfigError("correctness_temperature must be > 0");

  const auto grid = mct_grid(schedule.tau_min, schedule.tau_max, schedule.k);
  std::set<std::string> ids;
  for (const auto& b : backends) {
    if (!ids.insert("b:" + b.id).second) throw ConfigError(fmt::format("backend '{}' listed twice", b.id));
    if (b.config.kind == BackendKind::kSynthetic) b.synthetic.validate();
    if (b.config.kind != BackendKind::kSynthetic && (!entailment_judge || !correctness_judge)) {
      throw ConfigError(fmt::format(
          "backend '{}' is not synthetic; configure [judge.entailment] and [judge.correctness]", b.id));
    }
  }
  for (const auto& d : datasets) {
    if (!ids.insert("d:" + d.id).second) throw ConfigError(fmt::format("dataset '{}' listed twice", d.id));
  }

  std::vector<double> fixed;
  for (const auto& s : effective_strategies()) {
    validate_schedule_params(s, schedule);
    if (s.kind == StrategyKind::kFixed) fixed.push_back(s.tau);
  }
  std::sort(fixed.begin(), fixed.end());
  bool same = fixed.size() == grid.size();
  for (std::size_t i = 0; same && i < grid.size(); ++i) same = std::abs(fixed[i] - grid[i]) <= 1e-9;
  if (!same) {
    throw ConfigError(fmt::format("fixed-temperature strategies must be exactly the MCT grid {{{}}}",
                                  fmt::join(grid, ", ")));
  }
}

ExperimentGrid grid_from_config(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
  ExperimentGrid grid;
  TableReader root(doc.root, "the top level");
  if (auto v = root.integer("k")) grid.schedule.k = to_int(*v, "k");
  if (auto v = root.number("tau_min")) grid.schedule.tau_min = *v;
  if (auto v = root.number("tau_max")) grid.schedule.tau_max = *v;
  if (auto v = root.unsigned_list("seeds")) grid.seeds = *v;
  if (auto v = root.unsigned_list("seed")) grid.seeds = *v;
  if (auto v = root.strings("estimators")) {
    grid.estimators.clear();
    for (const auto& name : *v) {
      const Estimator e = parse_estimator(name);
      if (std::find(grid.estimators.begin(), grid.estimators.end(), e) == grid.estimators.end()) {
        grid.estimators.push_back(e);
      }
    }
  }
  if (auto v = root.strings("metrics")) {
    grid.metrics.clear();
    for (const auto& name : *v) {
      const Metric m = parse_metric(name);
      if (std::find(grid.metrics.begin(), grid.metrics.end(), m) == grid.metrics.end()) grid.metrics.push_back(m);
    }
  }
  if (auto v = root.strings("strategies")) {
    for (const auto& tag : *v) grid.strategies.push_back(Strategy::parse(tag));
  }
  if (auto v = root.integer("bootstrap_draws")) grid.bootstrap_draws = to_int(*v, "bootstrap_draws");
  if (auto v = root.number("correctness_temperature")) grid.correctness_temperature = *v;
  if (auto v = root.string("normalization")) grid.normalization = parse_normalization(*v);
  if (auto v = root.integer("concurrency")) grid.concurrency = to_int(*v, "concurrency");
  if (auto v = root.integer("aurac_deciles")) grid.aurac_deciles = to_int(*v, "aurac_deciles");
  root.finish();

  for (const auto& [name, table] : doc.sections) {
    const auto dot = name.find('.');
    const std::string kind = name.substr(0, dot);
    const std::string id = dot == std::string::npos ? std::string() : name.substr(dot + 1);
    TableReader r(table, "[" + name + "]");
    if (kind == "backend" && !id.empty()) {
      BackendEntry b;
      b.id = id;
      b.config = read_backend_config(r, id);
      if (auto v = r.integer("vocab")) b.synthetic.vocab_per_question = to_int(*v, "vocab");
      if (auto v = r.number("logit_spread")) b.synthetic.logit_spread = *v;
      if (auto v = r.number("skill")) b.synthetic.skill = *v;
      if (auto v = r.number("knowledge_sd")) b.synthetic.knowledge_sd = *v;
      if (auto v = r.number("misjudge_rate")) b.synthetic.misjudge_rate = *v;
      b.synthetic.logprobs = b.config.wants_logprobs;
      grid.backends.push_back(std::move(b));
    } else if (kind == "dataset" && !id.empty()) {
      DatasetEntry d;
      d.id = id;
      const auto path = r.string("path");
      if (!path) throw ConfigError(fmt::format("[{}] needs a path", name));
      d.path = std::filesystem::path(*path);
      if (d.path.is_relative() && !base_dir.empty()) d.path = base_dir / d.path;
      if (auto v = r.number("difficulty")) d.difficulty = *v;
      grid.datasets.push_back(std::move(d));
    } else if (name == "judge.entailment") {
      grid.entailment_judge = read_backend_config(r, "judge");
    } else if (name == "judge.correctness") {
      grid.correctness_judge = read_backend_config(r, "judge");
    } else if (name == "random") {
      if (auto v = r.string("mode")) {
        if (*v == "exact") {
          grid.random.kind = RandomBaselineMode::Kind::kExact;
        } else if (*v == "monte-carlo") {
          grid.random.kind = RandomBaselineMode::Kind::kMonteCarlo;
        } else {
          throw ConfigError(fmt::format("[random] mode must be \"exact\" or \"monte-carlo\", got \"{}\"", *v));
        }
      }
      if (auto v = r.integer("draws")) grid.random.draws = to_int(*v, "draws");
      if (auto v = r.unsigned_list("seed")) {
        if (v->size() != 1) throw ConfigError("[random] seed must be a single integer");
        grid.random.seed = v->front();
      }
    } else {
      throw ConfigError(fmt::format("unknown section [{}]", name));
    }
    r.finish();
  }
  grid.validate();
  return grid;
}

ExperimentGrid load_grid(const std::filesystem::path& path) {
  try {
    return grid_from_config(parse_config(read_file(path)), path.parent_path());
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

}  // namespace mcuq
