#include "mcuq/harness.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "mcuq/error.hpp"
#include "mcuq/parallel.hpp"
#include "mcuq/records.hpp"
#include "mcuq/rng.hpp"

namespace mcuq {
namespace {

using Json = nlohmann::ordered_json;

std::unordered_map<std::string, const Question*> index_questions(std::span<const Question> questions) {
  std::unordered_map<std::string, const Question*> by_id;
  for (const auto& q : questions) by_id.emplace(q.id, &q);
  return by_id;
}

const Question& lookup(const std::unordered_map<std::string, const Question*>& by_id, const std::string& id) {
  const auto it = by_id.find(id);
  if (it == by_id.end()) {
    throw ValidationError(fmt::format("question '{}' appears in run files but not in the dataset", id));
  }
  return *it->second;
}

// Shared resume loop: loads what `path` already holds, computes the rest in
// parallel with checkpointing, and rewrites the file in `ids` order.
template <typename Record, typename Compute, typename Accept>
std::vector<Record> resumable_stage(const std::vector<std::string>& ids, const std::filesystem::path& path,
                                    int concurrency, Compute compute, Accept accept_existing) {
  std::unordered_map<std::string, Record> done;
  for (auto& r : load_records_for_resume<Record>(path)) {
    if (accept_existing(r)) done.insert_or_assign(r.question_id, std::move(r));
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!done.contains(ids[i])) todo.push_back(i);
  }
  std::vector<std::optional<Record>> fresh(ids.size());
  if (!todo.empty()) {
    JsonlAppender<Record> appender(path);
    parallel_for(todo.size(), concurrency, [&](std::size_t t) {
      const std::size_t i = todo[t];
      Record record = compute(i);
      appender.append(record);
      fresh[i] = std::move(record);
    });
  }
  std::vector<Record> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (fresh[i]) {
      out.push_back(std::move(*fresh[i]));
    } else {
      out.push_back(std::move(done.at(ids[i])));
    }
  }
  save_records(out, path);
  return out;
}

std::string outcome_seed_tag(const OutcomeKey& key, Metric metric) {
  // Strategy is left out so every strategy of a cell uses the same
  // resample indices (a paired bootstrap).
  return fmt::format("{}|{}|{}|{}", key.backend_id, key.dataset_id, to_string(key.estimator), to_string(metric));
}

}  // namespace

void RunSpec::validate() const {
  if (backend_id.empty()) throw ConfigError("run needs a backend id");
  if (dataset_id.empty()) throw ConfigError("run needs a dataset id");
  validate_schedule_params(strategy, schedule);
  if (!(correctness_temperature > 0.0)) {
    throw ConfigError(fmt::format("correctness temperature must be > 0, got {}", correctness_temperature));
  }
  if (estimators.empty()) throw ConfigError("no estimators requested");
  if (concurrency < 1) throw ConfigError(fmt::format("concurrency must be >= 1, got {}", concurrency));
}

RunManifest RunManifest::from_spec(const RunSpec& spec) {
  RunManifest m;
  m.backend_id = spec.backend_id;
  m.dataset_id = spec.dataset_id;
  m.strategy = spec.strategy.tag();
  m.k = spec.schedule.k;
  m.tau_min = spec.schedule.tau_min;
  m.tau_max = spec.schedule.tau_max;
  m.seed = spec.seed;
  m.correctness_temperature = spec.correctness_temperature;
  return m;
}

bool RunManifest::same_run(const RunManifest& other) const {
  return backend_id == other.backend_id && dataset_id == other.dataset_id && strategy == other.strategy &&
         k == other.k && tau_min == other.tau_min && tau_max == other.tau_max && seed == other.seed &&
         correctness_temperature == other.correctness_temperature;
}

void save_manifest(const RunManifest& m, const std::filesystem::path& dir) {
  Json j;
  j["backend"] = m.backend_id;
  j["dataset"] = m.dataset_id;
  j["strategy"] = m.strategy;
  j["k"] = m.k;
  j["tau_min"] = m.tau_min;
  j["tau_max"] = m.tau_max;
  j["seed"] = m.seed;
  j["correctness_temperature"] = m.correctness_temperature;
  Json unavailable = Json::object();
  for (const auto& [name, reason] : m.unavailable) unavailable[name] = reason;
  j["unavailable"] = std::move(unavailable);
  write_file_atomically(dir / run_files::kManifest, j.dump(2) + "\n");
}

std::optional<RunManifest> load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / run_files::kManifest;
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    const auto j = Json::parse(read_file(path));
    RunManifest m;
    m.backend_id = j.at("backend").get<std::string>();
    m.dataset_id = j.at("dataset").get<std::string>();
    m.strategy = j.at("strategy").get<std::string>();
    m.k = j.at("k").get<int>();
    m.tau_min = j.at("tau_min").get<double>();
    m.tau_max = j.at("tau_max").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.correctness_temperature = j.at("correctness_temperature").get<double>();
    if (const auto it = j.find("unavailable"); it != j.end()) {
      for (const auto& [name, reason] : it->items()) m.unavailable[name] = reason.get<std::string>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: malformed run manifest: {}", path.string(), e.what()));
  }
}

std::vector<SampleSet> generate_stage(CompletionBackend& backend, std::span<const Question> questions,
                                      const RunSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::filesystem::create_directories(dir);
  const auto manifest = RunManifest::from_spec(spec);
  if (const auto existing = load_manifest(dir); existing && !existing->same_run(manifest)) {
    throw ConfigError(fmt::format("'{}' already holds a different run ({} / {} / {} seed {}); use another --out",
                                  dir.string(), existing->backend_id, existing->dataset_id, existing->strategy,
                                  existing->seed));
  } else if (!existing) {
    save_manifest(manifest, dir);
  }

  GenerateOptions options;
  options.correctness_temperature = spec.correctness_temperature;
  options.query_p_true =
      std::find(spec.estimators.begin(), spec.estimators.end(), Estimator::kPTrue) != spec.estimators.end();
  options.few_shot = spec.few_shot;
  const std::string tag = spec.strategy.tag();

  std::vector<std::string> ids;
  for (const auto& q : questions) ids.push_back(q.id);
  return resumable_stage<SampleSet>(
      ids, dir / run_files::kGenerations, spec.concurrency,
      [&](std::size_t i) {
        const auto schedule = make_schedule(spec.strategy, spec.schedule, spec.seed, questions[i].id);
        return generate(backend, questions[i], schedule, tag, options);
      },
      [&](const SampleSet& s) {
        return s.strategy == tag && s.samples.size() == static_cast<std::size_t>(spec.schedule.k);
      });
}

std::vector<ClusterPartition> cluster_stage(Judge& judge, std::span<const Question> questions,
                                            std::span<const SampleSet> generations, const std::filesystem::path& dir,
                                            int concurrency, EntailmentCache* cache) {
  const auto by_id = index_questions(questions);
  std::unordered_map<std::string, std::size_t> sizes;
  std::vector<std::string> ids;
  for (const auto& g : generations) {
    ids.push_back(g.question_id);
    sizes[g.question_id] = g.samples.size();
  }
  return resumable_stage<ClusterPartition>(
      ids, dir / run_files::kClusters, concurrency,
      [&](std::size_t i) {
        return cluster_samples(judge, lookup(by_id, generations[i].question_id), generations[i].samples, cache);
      },
      [&](const ClusterPartition& p) {
        const auto it = sizes.find(p.question_id);
        return it != sizes.end() && it->second == p.assignment.size();
      });
}

std::vector<CorrectnessRecord> label_stage(Judge& judge, std::span<const Question> questions,
                                           std::span<const SampleSet> generations, const std::filesystem::path& dir,
                                           int concurrency) {
  const auto by_id = index_questions(questions);
  std::vector<std::string> ids;
  for (const auto& g : generations) ids.push_back(g.question_id);
  return resumable_stage<CorrectnessRecord>(
      ids, dir / run_files::kLabels, concurrency,
      [&](std::size_t i) {
        return judge_correctness(judge, lookup(by_id, generations[i].question_id),
                                 generations[i].low_temp_answer.text);
      },
      [&](const CorrectnessRecord& r) { return r.judge_id == judge.id(); });
}

ScoreStageResult score_stage(std::span<const SampleSet> generations, std::span<const ClusterPartition> clusters,
                             std::span<const Estimator> estimators, Normalization normalization,
                             const std::filesystem::path& dir) {
  std::unordered_map<std::string, const ClusterPartition*> partition_of;
  for (const auto& p : clusters) partition_of.emplace(p.question_id, &p);

  ScoreStageResult result;
  std::vector<std::vector<double>> per_estimator(estimators.size());
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    auto& column = per_estimator[e];
    try {
      for (const auto& g : generations) {
        const auto it = partition_of.find(g.question_id);
        if (it == partition_of.end()) {
          throw ValidationError(fmt::format("question '{}' has generations but no clusters", g.question_id));
        }
        column.push_back(estimate(estimators[e], g, *it->second, normalization));
      }
    } catch (const CapabilityError& err) {
      result.unavailable.emplace(estimators[e], err.what());
      column.clear();
    }
  }
  for (std::size_t i = 0; i < generations.size(); ++i) {
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      if (result.unavailable.contains(estimators[e])) continue;
      UQScore s{generations[i].question_id, estimators[e], per_estimator[e][i]};
      validate(s);
      result.scores.push_back(std::move(s));
    }
  }
  std::filesystem::create_directories(dir);
  save_records(result.scores, dir / run_files::kScores);
  if (auto manifest = load_manifest(dir)) {
    manifest->unavailable.clear();
    for (const auto& [e, reason] : result.unavailable) manifest->unavailable[std::string(to_string(e))] = reason;
    save_manifest(*manifest, dir);
  }
  return result;
}

RunResult run_strategy(CompletionBackend& backend, Judge& entailment_judge, Judge& correctness_judge,
                       std::span<const Question> questions, const RunSpec& spec, const std::filesystem::path& dir) {
  RunResult result;
  result.generations = generate_stage(backend, questions, spec, dir);
  EntailmentCache cache;
  result.clusters = cluster_stage(entailment_judge, questions, result.generations, dir, spec.concurrency, &cache);
  result.labels = label_stage(correctness_judge, questions, result.generations, dir, spec.concurrency);
  auto scored = score_stage(result.generations, result.clusters, spec.estimators, spec.normalization, dir);
  result.scores = std::move(scored.scores);
  result.unavailable = std::move(scored.unavailable);
  return result;
}

std::vector<EvalOutcome> evaluate_run(std::span<const UQScore> scores, std::span<const CorrectnessRecord> labels,
                                      const OutcomeKey& run_key, const EvaluateOptions& options) {
  std::unordered_map<std::string, bool> incorrect;
  for (const auto& l : labels) incorrect[l.question_id] = !l.correct;

  std::vector<EvalOutcome> outcomes;
  for (Estimator estimator : kAllEstimators) {
    std::vector<ScoredLabel> items;
    for (const auto& s : scores) {
      if (s.estimator != estimator) continue;
      const auto it = incorrect.find(s.question_id);
      if (it == incorrect.end()) {
        throw ValidationError(fmt::format("question '{}' has a {} score but no correctness label", s.question_id,
                                          to_string(estimator)));
      }
      items.push_back({s.question_id, s.score, it->second});
    }
    if (items.empty()) continue;

    OutcomeKey key = run_key;
    key.estimator = estimator;
    for (Metric metric : options.metrics) {
      BootstrapOptions boot = options.bootstrap;
      boot.seed = derive_seed(options.bootstrap.seed, outcome_seed_tag(key, metric));
      try {
        const auto report = bootstrap_ci(items, metric, metric_function(metric, options.aurac_deciles), boot);
        outcomes.push_back(EvalOutcome{key, metric, report.point, report.ci_low, report.ci_high, report.n,
                                       report.bootstrap_draws});
      } catch (const DegenerateDataError& e) {
        if (options.skip_degenerate) continue;
        rethrow_with_context(e, fmt::format("{} / {} / {} / {}", key.backend_id, key.dataset_id, key.strategy,
                                            to_string(estimator)));
      }
    }
  }
  return outcomes;
}

TemperatureValue oracle_select(std::span<const TemperatureValue> values) {
  if (values.empty()) throw DomainError("oracle selection needs at least one temperature");
  std::vector<TemperatureValue> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });
  TemperatureValue best = sorted.front();
  for (const auto& tv : sorted) {
    if (tv.value > best.value) best = tv;
  }
  return best;
}

void MapValueStore::set(const CellId& cell, double tau, double value) { values_[cell][tau] = value; }

std::vector<CellId> MapValueStore::cells() const {
  std::vector<CellId> out;
  for (const auto& [cell, _] : values_) out.push_back(cell);
  return out;
}

std::vector<double> MapValueStore::temperatures(const CellId& cell) const {
  std::vector<double> out;
  if (const auto it = values_.find(cell); it != values_.end()) {
    for (const auto& [tau, _] : it->second) out.push_back(tau);
  }
  return out;
}

double MapValueStore::value(const CellId& cell, double tau) const {
  const auto it = values_.find(cell);
  if (it == values_.end()) throw DomainError(fmt::format("no values for cell {} / {}", cell.backend, cell.dataset));
  const auto jt = it->second.find(tau);
  if (jt == it->second.end()) {
    throw DomainError(fmt::format("cell {} / {} has no value at temperature {}", cell.backend, cell.dataset, tau));
  }
  return jt->second;
}

TemperatureValue best_avg_loocv(const CellValueStore& store, const CellId& test) {
  std::map<double, std::pair<double, int>> sums;
  int pooled = 0;
  for (const auto& cell : store.cells()) {
    if (cell.backend == test.backend || cell.dataset == test.dataset) continue;
    ++pooled;
    for (double tau : store.temperatures(cell)) {
      auto& [sum, count] = sums[tau];
      sum += store.value(cell, tau);
      ++count;
    }
  }
  if (pooled == 0 || sums.empty()) {
    throw ConfigError(fmt::format(
        "leave-one-out pool is empty for {} / {}: needs another backend and another dataset", test.backend,
        test.dataset));
  }
  std::vector<TemperatureValue> averages;
  for (const auto& [tau, sc] : sums) averages.push_back({tau, sc.first / sc.second});
  const double chosen = oracle_select(averages).tau;
  return {chosen, store.value(test, chosen)};
}

double random_baseline(std::span<const TemperatureValue> values, const RandomBaselineMode& mode) {
  if (values.empty()) throw DomainError("random baseline needs at least one temperature");
  if (mode.kind == RandomBaselineMode::Kind::kExact) {
    double sum = 0.0;
    for (const auto& tv : values) sum += tv.value;
    return sum / static_cast<double>(values.size());
  }
  if (mode.draws < 1) throw DomainError("random baseline needs draws >= 1");
  Rng rng(mode.seed);
  std::vector<int> picks(values.size(), 0);
  for (int d = 0; d < mode.draws; ++d) ++picks[rng.index(values.size())];
  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (picks[i] > 0) mean += (static_cast<double>(picks[i]) / mode.draws) * values[i].value;
  }
  return mean;
}

}  // namespace mcuq
