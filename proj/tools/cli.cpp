#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mcuq/backend.hpp"
#include "mcuq/config.hpp"
#include "mcuq/error.hpp"
#include "mcuq/harness.hpp"
#include "mcuq/records.hpp"
#include "mcuq/report.hpp"
#include "mcuq/simulation.hpp"

namespace mcuq::cli {
namespace fs = std::filesystem;
namespace {

struct Flags {
  std::string dataset;
  std::string backend = "synthetic";
  std::string model = "synthetic";
  std::string strategy = "mct";
  int k = 5;
  double tmin = 0.1;
  double tmax = 1.0;
  std::uint64_t seed = 0;
  std::string estimators = "ne,se,dse,numsets,ptrue";
  std::string metrics = "auroc,prauc,aurac";
  int bootstrap = 1000;
  int concurrency = 1;
  std::string out;
  std::string config;
  int questions = 300;
};

// Adds one documented flag per name to `cmd`.
class FlagSet {
 public:
  FlagSet(CLI::App& cmd, Flags& f) : cmd_(cmd), f_(f) {}

  FlagSet& dataset(bool required = true) {
    auto* o = cmd_.add_option("--dataset", f_.dataset, "Dataset JSONL file (id, question, reference_answer)");
    if (required) o->required();
    return *this;
  }
  FlagSet& backend() {
    cmd_.add_option("--backend", f_.backend, "Backend kind")
        ->check(CLI::IsMember({"http", "mock", "synthetic"}))
        ->capture_default_str();
    cmd_.add_option("--model", f_.model, "Model name sent to the backend; also the backend id in outputs")
        ->capture_default_str();
    return *this;
  }
  FlagSet& strategy() {
    cmd_.add_option("--strategy", f_.strategy, "Temperature strategy: mct, fixed:<tau> or random-fixed")
        ->capture_default_str();
    return *this;
  }
  FlagSet& grid() {
    cmd_.add_option("--k", f_.k, "Samples per question")->capture_default_str();
    cmd_.add_option("--tmin", f_.tmin, "Lowest grid temperature")->capture_default_str();
    cmd_.add_option("--tmax", f_.tmax, "Highest grid temperature")->capture_default_str();
    return *this;
  }
  FlagSet& seed() {
    cmd_.add_option("--seed", f_.seed, "Run seed")->capture_default_str();
    return *this;
  }
  FlagSet& estimators() {
    cmd_.add_option("--estimators", f_.estimators, "Comma-separated estimators (ne,se,dse,numsets,ptrue)")
        ->capture_default_str();
    return *this;
  }
  FlagSet& metrics() {
    cmd_.add_option("--metrics", f_.metrics, "Comma-separated metrics (auroc,prauc,aurac)")->capture_default_str();
    return *this;
  }
  FlagSet& bootstrap() {
    cmd_.add_option("--bootstrap", f_.bootstrap, "Bootstrap draws per confidence interval")->capture_default_str();
    return *this;
  }
  FlagSet& concurrency() {
    cmd_.add_option("--concurrency", f_.concurrency, "Maximum parallel backend calls / worker threads")
        ->capture_default_str();
    return *this;
  }
  FlagSet& out() {
    cmd_.add_option("--out", f_.out, "Output directory")->required();
    return *this;
  }

 private:
  CLI::App& cmd_;
  Flags& f_;
};

void check_positive(int value, const char* flag) {
  if (value < 1) throw ValidationError(fmt::format("{} must be >= 1, got {}", flag, value));
}

BackendConfig backend_config(const Flags& f) {
  BackendConfig c;
  c.kind = parse_backend_kind(f.backend);
  c.model_name = f.model;
  c.max_parallel = f.concurrency;
  return c;
}

std::string dataset_id(const Flags& f) {
  return f.dataset.empty() ? std::string("dataset") : fs::path(f.dataset).stem().string();
}

int generate_cmd(const Flags& f, std::ostream& out) {
  check_positive(f.concurrency, "--concurrency");
  RunSpec spec;
  spec.backend_id = f.model;
  spec.dataset_id = dataset_id(f);
  spec.strategy = Strategy::parse(f.strategy);
  spec.schedule = ScheduleParams{f.k, f.tmin, f.tmax};
  spec.seed = f.seed;
  spec.estimators = parse_estimator_list(f.estimators);
  spec.concurrency = f.concurrency;
  spec.validate();
  auto backend = make_backend(backend_config(f), f.seed);

  const auto questions = load_dataset(f.dataset);
  const auto gens = generate_stage(*backend, questions, spec, f.out);
  fmt::print(out, "generated {} sample sets ({} / {} / {}) -> {}\n", gens.size(), spec.backend_id, spec.dataset_id,
             spec.strategy.tag(), (fs::path(f.out) / run_files::kGenerations).string());
  return kExitOk;
}

int cluster_cmd(const Flags& f, std::ostream& out) {
  check_positive(f.concurrency, "--concurrency");
  auto judge = make_judge(backend_config(f), f.seed);

  const auto questions = load_dataset(f.dataset);
  const auto gens = load_records<SampleSet>(fs::path(f.out) / run_files::kGenerations);
  EntailmentCache cache;
  const auto clusters = cluster_stage(*judge, questions, gens, f.out, f.concurrency, &cache);
  fmt::print(out, "clustered {} questions ({} entailment verdicts) -> {}\n", clusters.size(), cache.size(),
             (fs::path(f.out) / run_files::kClusters).string());
  return kExitOk;
}

int label_cmd(const Flags& f, std::ostream& out) {
  check_positive(f.concurrency, "--concurrency");
  auto judge = make_judge(backend_config(f), f.seed);

  const auto questions = load_dataset(f.dataset);
  const auto gens = load_records<SampleSet>(fs::path(f.out) / run_files::kGenerations);
  const auto labels = label_stage(*judge, questions, gens, f.out, f.concurrency);
  const auto correct = std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.correct; });
  fmt::print(out, "labelled {} answers, {} correct -> {}\n", labels.size(), correct,
             (fs::path(f.out) / run_files::kLabels).string());
  return kExitOk;
}

int score_cmd(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto estimators = parse_estimator_list(f.estimators);

  const fs::path dir(f.out);
  const auto gens = load_records<SampleSet>(dir / run_files::kGenerations);
  const auto clusters = load_records<ClusterPartition>(dir / run_files::kClusters);
  const auto result = score_stage(gens, clusters, estimators, Normalization::kLengthNormalized, dir);
  for (const auto& [e, reason] : result.unavailable) fmt::print(err, "{} unavailable: {}\n", to_string(e), reason);
  fmt::print(out, "wrote {} scores -> {}\n", result.scores.size(), (dir / run_files::kScores).string());
  return kExitOk;
}

int evaluate_cmd(const Flags& f, std::ostream& out) {
  check_positive(f.bootstrap, "--bootstrap");
  check_positive(f.concurrency, "--concurrency");
  EvaluateOptions options;
  options.metrics = parse_metric_list(f.metrics);
  options.bootstrap.draws = f.bootstrap;
  options.bootstrap.seed = f.seed;
  options.bootstrap.threads = f.concurrency;
  OutcomeKey key{f.model, dataset_id(f), Estimator::kNaiveEntropy, Strategy::parse(f.strategy).tag()};

  const fs::path dir(f.out);
  if (const auto manifest = load_manifest(dir)) {
    key.backend_id = manifest->backend_id;
    key.dataset_id = manifest->dataset_id;
    key.strategy = manifest->strategy;
  }
  const auto scores = load_records<UQScore>(dir / run_files::kScores);
  const auto labels = load_records<CorrectnessRecord>(dir / run_files::kLabels);
  const auto outcomes = evaluate_run(scores, labels, key, options);
  save_records(outcomes, dir / run_files::kOutcomes);
  for (const auto& o : outcomes) {
    fmt::print(out, "{:<8} {:<7} {:.4f} [{:.4f}, {:.4f}] n={}\n", to_string(o.key.estimator), to_string(o.metric),
               o.point, o.ci_low, o.ci_high, o.n);
  }
  return kExitOk;
}

// Every outcomes.jsonl below `root`, in path order; exact duplicates (for
// example a grid total next to per-run files) are merged.
std::vector<EvalOutcome> collect_outcomes(const fs::path& root) {
  std::vector<fs::path> files;
  if (!fs::is_directory(root)) throw IoError(fmt::format("'{}' is not a directory", root.string()));
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == run_files::kOutcomes) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError(fmt::format("no {} found under '{}'", run_files::kOutcomes, root.string()));

  std::map<std::tuple<std::string, std::string, Estimator, std::string, Metric>, EvalOutcome> merged;
  for (const auto& path : files) {
    for (auto& o : load_records<EvalOutcome>(path)) {
      const auto id = std::make_tuple(o.key.backend_id, o.key.dataset_id, o.key.estimator, o.key.strategy, o.metric);
      const auto [it, inserted] = merged.try_emplace(id, o);
      if (!inserted && !(it->second == o)) {
        throw ValidationError(fmt::format("{}: conflicting outcome for {} / {} / {} / {} / {}", path.string(),
                                          o.key.backend_id, o.key.dataset_id, to_string(o.key.estimator),
                                          o.key.strategy, to_string(o.metric)));
      }
    }
  }
  std::vector<EvalOutcome> out;
  for (auto& [_, o] : merged) out.push_back(std::move(o));
  return out;
}

void print_summary(const Report& report, std::ostream& out) {
  for (const auto& s : report.summaries) {
    fmt::print(out, "{:<6} rows={} mean delta: mct {:.2f}% best-avg {:.2f}% random {:.2f}%; mct wins {:.1f}% vs "
               "best-avg, {:.1f}% vs random; parity {:.1f}%\n",
               to_string(s.metric), s.rows, s.mean_delta_mct, s.mean_delta_best_avg, s.mean_delta_random,
               s.win_rate_mct_vs_best_avg, s.win_rate_mct_vs_random, s.parity_rate);
  }
}

int report_cmd(const Flags& f, std::ostream& out) {
  const auto outcomes = collect_outcomes(f.out);
  const auto report = build_report(outcomes);
  write_report(report, f.out);
  print_summary(report, out);
  return kExitOk;
}

int simulate_cmd(const Flags& f, std::ostream& out, std::ostream& err) {
  std::vector<GridResult> results;
  if (!f.config.empty()) {
    const auto grid = load_grid(f.config);
    results = run_grid(grid, f.out);
  } else {
    check_positive(f.questions, "--questions");
    check_positive(f.bootstrap, "--bootstrap");
    check_positive(f.concurrency, "--concurrency");
    SimulateOptions options;
    options.seed = f.seed;
    options.questions = f.questions;
    options.schedule = ScheduleParams{f.k, f.tmin, f.tmax};
    options.bootstrap_draws = f.bootstrap;
    options.estimators = parse_estimator_list(f.estimators);
    options.metrics = parse_metric_list(f.metrics);
    options.concurrency = f.concurrency;
    validate_schedule_params(Strategy::mct(), options.schedule);
    results.push_back(simulate(options, f.out));
  }
  for (const auto& r : results) {
    for (const auto& note : r.notes) fmt::print(err, "note: {}\n", note);
    if (results.size() > 1) fmt::print(out, "seed {} ({}):\n", r.seed, r.dir.string());
    print_summary(r.report, out);
  }
  fmt::print(out, "report written to {}\n", fs::path(f.out).string());
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCapability:
    case ErrorKind::kTransport:
    case ErrorKind::kJudgeParse:
      return kExitBackend;
    case ErrorKind::kDegenerateData:
      return kExitDegenerate;
    default:
      return kExitInvalid;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Monte Carlo Temperature uncertainty-quantification harness", "mcuq"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mcuq 0.1.0");

  auto* generate = app.add_subcommand("generate", "Sample k answers per question plus the low-temperature answer");
  FlagSet(*generate, f).dataset().backend().strategy().grid().seed().estimators().concurrency().out();

  auto* cluster = app.add_subcommand("cluster", "Group each question's samples by bidirectional entailment");
  FlagSet(*cluster, f).dataset().backend().seed().concurrency().out();

  auto* label = app.add_subcommand("label", "Judge the low-temperature answer against the reference");
  FlagSet(*label, f).dataset().backend().seed().concurrency().out();

  auto* score = app.add_subcommand("score", "Compute uncertainty estimators from generations and clusters");
  FlagSet(*score, f).estimators().out();

  auto* evaluate = app.add_subcommand("evaluate", "Bootstrap AUROC / PR-AUC / AURAC of scores against labels");
  FlagSet(*evaluate, f).dataset(false).backend().strategy().grid().seed().metrics().bootstrap().concurrency().out();

  auto* report = app.add_subcommand("report", "Build report.csv, report.md and summary.json from outcomes");
  FlagSet(*report, f).out();

  auto* simulate = app.add_subcommand("simulate", "Run the seeded synthetic grid end to end (no network)");
  FlagSet(*simulate, f).grid().seed().estimators().metrics().bootstrap().concurrency().out();
  simulate->add_option("--questions", f.questions, "Questions per synthetic dataset")->capture_default_str();
  simulate->add_option("--config", f.config, "Run the experiment grid described by this TOML-style file instead")
      ->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (generate->parsed()) return generate_cmd(f, out);
    if (cluster->parsed()) return cluster_cmd(f, out);
    if (label->parsed()) return label_cmd(f, out);
    if (score->parsed()) return score_cmd(f, out, err);
    if (evaluate->parsed()) return evaluate_cmd(f, out);
    if (report->parsed()) return report_cmd(f, out);
    if (simulate->parsed()) return simulate_cmd(f, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace mcuq::cli
