#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcuq/backend.hpp"
#include "mcuq/estimators.hpp"
#include "mcuq/harness.hpp"
#include "mcuq/synthetic_backend.hpp"
#include "mcuq/temperature.hpp"
#include "mcuq/types.hpp"

namespace mcuq {

// A small TOML subset: `key = value` pairs under optional `[section]` or
// `[section.name]` headers, `#` comments, and values that are quoted
// strings, numbers, booleans or single-line arrays of those.
struct ConfigValue {
  enum class Type { kString, kNumber, kBool, kArray };
  Type type = Type::kString;
  std::string text;  // string contents, or the number's source spelling
  double number = 0.0;
  bool boolean = false;
  std::vector<ConfigValue> items;
  int line = 0;
};

using ConfigTable = std::map<std::string, ConfigValue>;

struct ConfigDocument {
  ConfigTable root;
  // Keyed by the full header, e.g. "backend.falcon".
  std::map<std::string, ConfigTable> sections;
};

ConfigDocument parse_config(std::string_view text);

struct BackendEntry {
  std::string id;
  BackendConfig config;
  // Used when config.kind is synthetic; difficulty comes from the dataset.
  SyntheticParams synthetic;
};

struct DatasetEntry {
  std::string id;
  std::filesystem::path path;
  // Shifts the synthetic world's knowledge distribution for this dataset.
  double difficulty = 0.0;
};

struct ExperimentGrid {
  std::vector<BackendEntry> backends;
  std::vector<DatasetEntry> datasets;
  std::vector<Estimator> estimators{std::begin(kAllEstimators), std::end(kAllEstimators)};
  std::vector<Metric> metrics{std::begin(kAllMetrics), std::end(kAllMetrics)};
  // Empty means: mct plus one fixed strategy per grid temperature.
  std::vector<Strategy> strategies;
  ScheduleParams schedule;
  std::vector<std::uint64_t> seeds{0};
  int bootstrap_draws = 1000;
  double correctness_temperature = kDefaultCorrectnessTemperature;
  Normalization normalization = Normalization::kLengthNormalized;
  int concurrency = 1;
  int aurac_deciles = 10;
  RandomBaselineMode random;
  // Judges for non-synthetic backends. Synthetic backends judge with their
  // own world unless these are set.
  std::optional<BackendConfig> entailment_judge;
  std::optional<BackendConfig> correctness_judge;

  std::vector<Strategy> effective_strategies() const;
  // Throws ConfigError (or DomainError for an undefined grid).
  void validate() const;
};

// Relative dataset paths resolve against `base_dir`.
ExperimentGrid grid_from_config(const ConfigDocument& doc, const std::filesystem::path& base_dir = {});
ExperimentGrid load_grid(const std::filesystem::path& path);

}  // namespace mcuq
