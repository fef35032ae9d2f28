#include "mcuq/simulation.hpp"

#include <algorithm>
#include <memory>

#include <fmt/format.h>

#include "mcuq/error.hpp"
#include "mcuq/parallel.hpp"
#include "mcuq/records.hpp"
#include "mcuq/rng.hpp"

namespace mcuq {
namespace {

struct Job {
  std::size_t backend = 0;
  std::size_t dataset = 0;
  Strategy strategy;
};

struct JobOutput {
  std::vector<EvalOutcome> outcomes;
  std::vector<std::string> notes;
};

// Backends and judges for one (backend, dataset) cell.
struct CellModels {
  std::shared_ptr<CompletionBackend> backend;
  std::shared_ptr<Judge> entailment;
  std::shared_ptr<Judge> correctness;
};

GridResult run_one_seed(const ExperimentGrid& grid, std::uint64_t seed, const std::filesystem::path& root) {
  std::vector<std::vector<Question>> datasets;
  for (const auto& d : grid.datasets) datasets.push_back(load_dataset(d.path));

  std::shared_ptr<Judge> shared_entailment;
  std::shared_ptr<Judge> shared_correctness;
  if (grid.entailment_judge) shared_entailment = make_judge(*grid.entailment_judge, seed);
  if (grid.correctness_judge) shared_correctness = make_judge(*grid.correctness_judge, seed);

  std::vector<std::vector<CellModels>> cells(grid.backends.size());
  for (std::size_t b = 0; b < grid.backends.size(); ++b) {
    const auto& entry = grid.backends[b];
    std::shared_ptr<CompletionBackend> shared_backend;
    if (entry.config.kind != BackendKind::kSynthetic) shared_backend = make_backend(entry.config, seed);
    for (const auto& d : grid.datasets) {
      CellModels m{shared_backend, shared_entailment, shared_correctness};
      if (entry.config.kind == BackendKind::kSynthetic) {
        SyntheticParams params = entry.synthetic;
        params.seed = derive_seed(seed, entry.id);
        params.difficulty = d.difficulty;
        auto world = std::make_shared<const SyntheticWorld>(params);
        m.backend = std::make_shared<SyntheticBackend>(entry.id, world);
        if (!m.entailment) m.entailment = std::make_shared<SyntheticJudge>("synthetic-judge", world);
        if (!m.correctness) m.correctness = std::make_shared<SyntheticJudge>("synthetic-judge", world);
      }
      cells[b].push_back(std::move(m));
    }
  }

  std::vector<Job> jobs;
  for (std::size_t b = 0; b < grid.backends.size(); ++b) {
    for (std::size_t d = 0; d < grid.datasets.size(); ++d) {
      for (const auto& s : grid.effective_strategies()) jobs.push_back({b, d, s});
    }
  }

  std::vector<JobOutput> outputs(jobs.size());
  parallel_for(jobs.size(), grid.concurrency, [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& backend_entry = grid.backends[job.backend];
    const auto& dataset_entry = grid.datasets[job.dataset];
    const auto& models = cells[job.backend][job.dataset];
    const std::string cell = fmt::format("{} / {} / {}", backend_entry.id, dataset_entry.id, job.strategy.tag());
    try {
      RunSpec spec;
      spec.backend_id = backend_entry.id;
      spec.dataset_id = dataset_entry.id;
      spec.strategy = job.strategy;
      spec.schedule = grid.schedule;
      spec.seed = seed;
      spec.correctness_temperature = grid.correctness_temperature;
      spec.estimators = grid.estimators;
      spec.normalization = grid.normalization;
      spec.concurrency = backend_entry.config.kind == BackendKind::kHttp ? backend_entry.config.max_parallel : 1;

      const auto dir = root / "runs" / backend_entry.id / dataset_entry.id / strategy_dir_name(job.strategy);
      const auto run = run_strategy(*models.backend, *models.entailment, *models.correctness, datasets[job.dataset],
                                    spec, dir);
      for (const auto& [estimator, reason] : run.unavailable) {
        outputs[j].notes.push_back(fmt::format("{}: {} unavailable: {}", cell, to_string(estimator), reason));
      }

      EvaluateOptions eval;
      eval.metrics = grid.metrics;
      eval.bootstrap.draws = grid.bootstrap_draws;
      eval.bootstrap.seed = seed;
      eval.aurac_deciles = grid.aurac_deciles;
      eval.skip_degenerate = true;
      OutcomeKey key{backend_entry.id, dataset_entry.id, Estimator::kNaiveEntropy, job.strategy.tag()};
      outputs[j].outcomes = evaluate_run(run.scores, run.labels, key, eval);
      const std::size_t expected = (grid.estimators.size() - run.unavailable.size()) * grid.metrics.size();
      if (outputs[j].outcomes.size() < expected) {
        outputs[j].notes.push_back(
            fmt::format("{}: {} metric value(s) undefined on these labels", cell, expected - outputs[j].outcomes.size()));
      }
    } catch (const Error& e) {
      rethrow_with_context(e, cell);
    }
  });

  GridResult result;
  result.seed = seed;
  result.dir = root;
  for (auto& o : outputs) {
    result.outcomes.insert(result.outcomes.end(), o.outcomes.begin(), o.outcomes.end());
    result.notes.insert(result.notes.end(), o.notes.begin(), o.notes.end());
  }
  save_records(result.outcomes, root / run_files::kOutcomes);
  ReportOptions report_options;
  report_options.random = grid.random;
  result.report = build_report(result.outcomes, report_options);
  write_report(result.report, root);
  return result;
}

}  // namespace

std::string strategy_dir_name(const Strategy& strategy) {
  std::string name = strategy.tag();
  std::replace(name.begin(), name.end(), ':', '-');
  return name;
}

std::vector<GridResult> run_grid(const ExperimentGrid& grid, const std::filesystem::path& out) {
  grid.validate();
  std::vector<GridResult> results;
  for (std::uint64_t seed : grid.seeds) {
    const auto root = grid.seeds.size() == 1 ? out : out / fmt::format("seed-{}", seed);
    std::filesystem::create_directories(root);
    results.push_back(run_one_seed(grid, seed, root));
  }
  return results;
}

std::vector<SyntheticModelSpec> default_synthetic_models() {
  return {
      {"synth-small", 1.0, 0.5, 1.0},
      {"synth-medium", 1.5, 1.0, 1.0},
      {"synth-large", 2.0, 1.5, 1.0},
      {"synth-sharp", 3.0, 1.0, 1.0},
  };
}

std::vector<SyntheticDatasetSpec> default_synthetic_datasets() {
  return {
      {"easy", -0.5}, {"medium", 0.0}, {"mixed", 0.25}, {"hard", 0.5}, {"harder", 1.0},
  };
}

std::vector<Question> synthetic_questions(const std::string& dataset_id, int count) {
  if (count < 1) throw DomainError(fmt::format("need at least one question, got {}", count));
  std::vector<Question> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(Question{fmt::format("{}-{:04d}", dataset_id, i), fmt::format("Synthetic question {} of {}?", i,
                                                                               dataset_id),
                           fmt::format("answer {}", i)});
  }
  return out;
}

ExperimentGrid simulation_grid(const SimulateOptions& options, const std::filesystem::path& out) {
  if (options.models.empty() || options.datasets.empty()) {
    throw ConfigError("simulation needs at least one model and one dataset");
  }
  if (options.questions < 1) throw ConfigError(fmt::format("need at least one question, got {}", options.questions));
  ExperimentGrid grid;
  grid.schedule = options.schedule;
  grid.seeds = {options.seed};
  grid.bootstrap_draws = options.bootstrap_draws;
  grid.estimators = options.estimators;
  grid.metrics = options.metrics;
  grid.concurrency = options.concurrency;
  for (const auto& m : options.models) {
    BackendEntry b;
    b.id = m.id;
    b.config.kind = BackendKind::kSynthetic;
    b.config.model_name = m.id;
    b.synthetic.logit_spread = m.logit_spread;
    b.synthetic.skill = m.skill;
    b.synthetic.knowledge_sd = m.knowledge_sd;
    grid.backends.push_back(std::move(b));
  }

  for (const auto& d : options.datasets) grid.datasets.push_back({d.id, out / "datasets" / (d.id + ".jsonl"), d.difficulty});
  grid.validate();

  const auto dataset_dir = out / "datasets";
  std::filesystem::create_directories(dataset_dir);
  for (const auto& d : grid.datasets) save_records(synthetic_questions(d.id, options.questions), d.path);
  return grid;
}

GridResult simulate(const SimulateOptions& options, const std::filesystem::path& out) {
  return run_grid(simulation_grid(options, out), out).front();
}

}  // namespace mcuq
