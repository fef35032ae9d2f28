#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "mcuq/config.hpp"
#include "mcuq/error.hpp"
#include "mcuq/harness.hpp"
#include "mcuq/mock_backend.hpp"
#include "mcuq/records.hpp"
#include "mcuq/report.hpp"
#include "mcuq/simulation.hpp"
#include "mcuq/synthetic_backend.hpp"
#include "test_support.hpp"

using namespace mcuq;

namespace {

struct SyntheticRig {
  std::shared_ptr<const SyntheticWorld> world;
  SyntheticBackend backend;
  SyntheticJudge judge;

  explicit SyntheticRig(std::uint64_t seed, bool logprobs = true)
      : world(make_world(seed, logprobs)), backend("synth", world), judge("synth-judge", world) {}

  static std::shared_ptr<const SyntheticWorld> make_world(std::uint64_t seed, bool logprobs) {
    SyntheticParams p;
    p.seed = seed;
    p.logprobs = logprobs;
    return std::make_shared<const SyntheticWorld>(p);
  }
};

RunSpec spec_for(Strategy strategy, std::uint64_t seed = 4) {
  RunSpec spec;
  spec.backend_id = "synth";
  spec.dataset_id = "toy";
  spec.strategy = strategy;
  spec.seed = seed;
  return spec;
}

std::vector<TemperatureValue> tv(std::initializer_list<std::pair<double, double>> xs) {
  std::vector<TemperatureValue> out;
  for (auto [tau, value] : xs) out.push_back({tau, value});
  return out;
}

// Records every value read so tests can prove which cells were touched.
class TracingStore : public CellValueStore {
 public:
  explicit TracingStore(const MapValueStore& inner) : inner_(inner) {}
  std::vector<CellId> cells() const override { return inner_.cells(); }
  std::vector<double> temperatures(const CellId& cell) const override { return inner_.temperatures(cell); }
  double value(const CellId& cell, double tau) const override {
    reads.push_back(cell);
    return inner_.value(cell, tau);
  }
  mutable std::vector<CellId> reads;

 private:
  const MapValueStore& inner_;
};

EvalOutcome outcome(const std::string& backend, const std::string& dataset, const std::string& strategy,
                    double point, double half_width = 0.01) {
  EvalOutcome o;
  o.key = {backend, dataset, Estimator::kDiscreteSemanticEntropy, strategy};
  o.metric = Metric::kAuroc;
  o.point = point;
  o.ci_low = point - half_width;
  o.ci_high = point + half_width;
  o.n = 100;
  o.bootstrap_draws = 1000;
  return o;
}

void add_fixed(std::vector<EvalOutcome>& out, const std::string& b, const std::string& d,
               const std::vector<double>& values) {
  const auto grid = mct_grid(0.1, 1.0, 5);
  for (std::size_t i = 0; i < grid.size(); ++i) out.push_back(outcome(b, d, Strategy::fixed(grid[i]).tag(), values[i]));
}

}  // namespace

TEST(RunStrategy, OneScorePerQuestionPerEstimator) {
  TempDir tmp;
  SyntheticRig rig(1);
  const auto questions = synthetic_questions("toy", 50);
  const auto result = run_strategy(rig.backend, rig.judge, rig.judge, questions, spec_for(Strategy::mct()), tmp.path());
  EXPECT_EQ(result.generations.size(), 50u);
  EXPECT_EQ(result.labels.size(), 50u);
  EXPECT_TRUE(result.unavailable.empty());
  for (Estimator e : kAllEstimators) {
    EXPECT_EQ(std::count_if(result.scores.begin(), result.scores.end(), [&](const auto& s) { return s.estimator == e; }),
              50)
        << to_string(e);
  }
  for (const char* f : {run_files::kManifest, run_files::kGenerations, run_files::kClusters, run_files::kLabels,
                        run_files::kScores}) {
    EXPECT_TRUE(std::filesystem::exists(tmp / f)) << f;
  }
}

TEST(RunStrategy, RerunIsByteIdentical) {
  TempDir a, b;
  const auto questions = synthetic_questions("toy", 30);
  {
    SyntheticRig rig(2);
    run_strategy(rig.backend, rig.judge, rig.judge, questions, spec_for(Strategy::mct()), a.path());
  }
  {
    SyntheticRig rig(2);
    auto spec = spec_for(Strategy::mct());
    spec.concurrency = 4;
    run_strategy(rig.backend, rig.judge, rig.judge, questions, spec, b.path());
  }
  for (const char* f : {run_files::kGenerations, run_files::kClusters, run_files::kLabels, run_files::kScores}) {
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
}

TEST(RunStrategy, ResumesAfterTruncationWithoutRegenerating) {
  TempDir tmp;
  const auto questions = synthetic_questions("toy", 20);
  MockBackend first("mock");
  MockJudge judge;
  run_strategy(first, judge, judge, questions, spec_for(Strategy::mct()), tmp.path());
  const auto full = read_file(tmp / run_files::kGenerations);
  const int full_calls = first.calls();

  // Keep 12 complete lines and half of the 13th, as an interrupted run would.
  std::size_t cut = 0;
  for (int line = 0; line < 12; ++line) cut = full.find('\n', cut) + 1;
  write_file_atomically(tmp / run_files::kGenerations, full.substr(0, cut + 20));

  MockBackend second("mock");
  run_strategy(second, judge, judge, questions, spec_for(Strategy::mct()), tmp.path());
  EXPECT_EQ(read_file(tmp / run_files::kGenerations), full);
  EXPECT_LT(second.calls(), full_calls);
  EXPECT_GT(second.calls(), 0);
}

TEST(RunStrategy, DifferentRunInSameDirectoryIsRejected) {
  TempDir tmp;
  SyntheticRig rig(3);
  const auto questions = synthetic_questions("toy", 5);
  run_strategy(rig.backend, rig.judge, rig.judge, questions, spec_for(Strategy::mct()), tmp.path());
  EXPECT_THROW(run_strategy(rig.backend, rig.judge, rig.judge, questions, spec_for(Strategy::fixed(0.55)), tmp.path()),
               ConfigError);
}

TEST(RunStrategy, MissingLogprobsMarksEstimatorUnavailable) {
  TempDir tmp;
  SyntheticRig rig(5, /*logprobs=*/false);
  auto spec = spec_for(Strategy::mct());
  spec.estimators = {Estimator::kNaiveEntropy, Estimator::kDiscreteSemanticEntropy};
  const auto questions = synthetic_questions("toy", 10);
  const auto result = run_strategy(rig.backend, rig.judge, rig.judge, questions, spec, tmp.path());
  ASSERT_TRUE(result.unavailable.contains(Estimator::kNaiveEntropy));
  EXPECT_FALSE(result.unavailable.contains(Estimator::kDiscreteSemanticEntropy));
  EXPECT_EQ(result.scores.size(), 10u);
  for (const auto& s : result.scores) EXPECT_EQ(s.estimator, Estimator::kDiscreteSemanticEntropy);
  const auto manifest = load_manifest(tmp.path());
  ASSERT_TRUE(manifest.has_value());
  EXPECT_TRUE(manifest->unavailable.contains("ne"));
}

TEST(EvaluateRun, JoinsLabelsAndBootstraps) {
  std::vector<UQScore> scores;
  std::vector<CorrectnessRecord> labels;
  for (int i = 0; i < 40; ++i) {
    const std::string id = fmt::format("q{:02}", i);
    scores.push_back({id, Estimator::kDiscreteSemanticEntropy, i * 0.1});
    labels.push_back({id, i < 20, "j"});
  }
  EvaluateOptions options;
  options.bootstrap.draws = 50;
  const auto out = evaluate_run(scores, labels, {"b", "d", Estimator::kDiscreteSemanticEntropy, "mct"}, options);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].metric, Metric::kAuroc);
  EXPECT_EQ(out[0].point, 1.0);
  EXPECT_EQ(out[0].n, 40);

  labels.pop_back();
  EXPECT_THROW(evaluate_run(scores, labels, {"b", "d", Estimator::kDiscreteSemanticEntropy, "mct"}, options),
               ValidationError);
}

TEST(EvaluateRun, DegenerateLabelsThrowOrSkip) {
  std::vector<UQScore> scores{{"a", Estimator::kNaiveEntropy, 0.1}, {"b", Estimator::kNaiveEntropy, 0.2}};
  std::vector<CorrectnessRecord> labels{{"a", true, "j"}, {"b", true, "j"}};
  EvaluateOptions options;
  options.metrics = {Metric::kAuroc};
  EXPECT_THROW(evaluate_run(scores, labels, {"b", "d", Estimator::kNaiveEntropy, "mct"}, options),
               DegenerateDataError);
  options.skip_degenerate = true;
  EXPECT_TRUE(evaluate_run(scores, labels, {"b", "d", Estimator::kNaiveEntropy, "mct"}, options).empty());
}

TEST(OracleSelect, Examples) {
  const auto best = oracle_select(tv({{0.1, 0.70}, {0.325, 0.72}, {0.55, 0.75}, {0.775, 0.74}, {1.0, 0.71}}));
  EXPECT_EQ(best.tau, 0.55);
  EXPECT_EQ(best.value, 0.75);
  EXPECT_EQ(oracle_select(tv({{1.0, 0.6}, {0.1, 0.6}, {0.55, 0.6}})).tau, 0.1);
  EXPECT_EQ(oracle_select(tv({{0.775, 0.3}})).tau, 0.775);
  EXPECT_THROW(oracle_select({}), DomainError);
}

TEST(BestAvgLoocv, TwoByTwoUsesOnlyTheDiagonal) {
  MapValueStore store;
  store.set({"b1", "d1"}, 0.1, 0.50);
  store.set({"b1", "d1"}, 1.0, 0.60);
  store.set({"b1", "d2"}, 0.1, 0.10);
  store.set({"b1", "d2"}, 1.0, 0.99);
  store.set({"b2", "d1"}, 0.1, 0.10);
  store.set({"b2", "d1"}, 1.0, 0.99);
  store.set({"b2", "d2"}, 0.1, 0.80);
  store.set({"b2", "d2"}, 1.0, 0.70);
  const auto r = best_avg_loocv(store, {"b1", "d1"});
  EXPECT_EQ(r.tau, 0.1);
  EXPECT_EQ(r.value, 0.50);
}

TEST(BestAvgLoocv, IdenticalProfilesPickCommonArgmax) {
  MapValueStore store;
  for (const char* b : {"b1", "b2", "b3"}) {
    for (const char* d : {"d1", "d2"}) {
      store.set({b, d}, 0.1, 0.6);
      store.set({b, d}, 0.55, 0.8);
      store.set({b, d}, 1.0, 0.7);
    }
  }
  const auto r = best_avg_loocv(store, {"b2", "d2"});
  EXPECT_EQ(r.tau, 0.55);
  EXPECT_EQ(r.value, 0.8);
}

TEST(BestAvgLoocv, EmptyPoolIsConfigError) {
  MapValueStore store;
  store.set({"b1", "d1"}, 0.1, 0.5);
  store.set({"b1", "d2"}, 0.1, 0.5);
  EXPECT_THROW(best_avg_loocv(store, {"b1", "d1"}), ConfigError);
}

TEST(BestAvgLoocv, NeverReadsExcludedCells) {
  MapValueStore inner;
  const auto grid = mct_grid(0.1, 1.0, 5);
  int n = 0;
  for (const char* b : {"b1", "b2", "b3"}) {
    for (const char* d : {"d1", "d2", "d3"}) {
      for (double tau : grid) inner.set({b, d}, tau, 0.5 + 0.01 * ((n++ * 7) % 13));
    }
  }
  for (const auto& test : inner.cells()) {
    TracingStore store(inner);
    best_avg_loocv(store, test);
    ASSERT_FALSE(store.reads.empty());
    // Only the final read may touch the test row or column, and it is the test cell.
    EXPECT_EQ(store.reads.back(), test);
    for (std::size_t i = 0; i + 1 < store.reads.size(); ++i) {
      EXPECT_NE(store.reads[i].backend, test.backend);
      EXPECT_NE(store.reads[i].dataset, test.dataset);
    }
  }
}

TEST(RandomBaseline, ExactAndMonteCarlo) {
  EXPECT_NEAR(random_baseline(tv({{0.1, 0.6}, {0.55, 0.7}, {1.0, 0.8}})), 0.70, 1e-12);
  const auto single = tv({{0.3, 0.42}});
  EXPECT_EQ(random_baseline(single), 0.42);
  EXPECT_EQ(random_baseline(single, {RandomBaselineMode::Kind::kMonteCarlo, 100, 1}), 0.42);
  const auto five = tv({{0.1, 0.61}, {0.325, 0.72}, {0.55, 0.75}, {0.775, 0.70}, {1.0, 0.66}});
  const double exact = random_baseline(five);
  EXPECT_NEAR(exact, (0.61 + 0.72 + 0.75 + 0.70 + 0.66) / 5.0, 1e-12);
  EXPECT_NEAR(random_baseline(five, {RandomBaselineMode::Kind::kMonteCarlo, 10000, 3}), exact, 0.01);
  EXPECT_THROW(random_baseline({}), DomainError);
}

TEST(BuildReport, RelativeDeltaColumn) {
  std::vector<EvalOutcome> outcomes;
  for (const char* b : {"b1", "b2"}) {
    for (const char* d : {"d1", "d2"}) {
      add_fixed(outcomes, b, d, {0.70, 0.7462, 0.73, 0.72, 0.71});
      outcomes.push_back(outcome(b, d, "mct", 0.7498));
    }
  }
  const auto report = build_report(outcomes);
  ASSERT_EQ(report.rows.size(), 4u);
  const auto& row = report.rows.front();
  ASSERT_TRUE(row.complete());
  EXPECT_EQ(row.oracle->value, 0.7462);
  EXPECT_EQ(*row.oracle_tau, mct_grid(0.1, 1.0, 5)[1]);
  EXPECT_NEAR(*row.delta_mct, relative_delta(0.7462, 0.7498), 1e-12);
  EXPECT_TRUE(*row.parity);
  const auto csv = report_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "metric,backend,dataset,estimator,oracle_tau,oracle,oracle_ci_low,oracle_ci_high,mct,mct_ci_low,"
            "mct_ci_high,best_avg_tau,best_avg,random,delta_mct,delta_best_avg,delta_random,parity");
}

TEST(BuildReport, StrictOrderingGivesFullWinRates) {
  std::vector<EvalOutcome> outcomes;
  for (const char* b : {"b1", "b2"}) {
    for (const char* d : {"d1", "d2"}) {
      add_fixed(outcomes, b, d, {0.60, 0.70, 0.80, 0.65, 0.62});
      outcomes.push_back(outcome(b, d, "mct", 0.85));
    }
  }
  const auto report = build_report(outcomes);
  ASSERT_EQ(report.summaries.size(), 1u);
  const auto& s = report.summaries.front();
  EXPECT_EQ(s.rows, 4);
  EXPECT_EQ(s.win_rate_mct_vs_best_avg, 100.0);
  EXPECT_EQ(s.win_rate_mct_vs_random, 100.0);
  EXPECT_LT(s.mean_delta_mct, s.mean_delta_best_avg);
  EXPECT_LT(s.mean_delta_best_avg, s.mean_delta_random);
  EXPECT_NE(report_markdown(report).find("**"), std::string::npos);
}

TEST(BuildReport, MissingStrategyLeavesGaps) {
  std::vector<EvalOutcome> outcomes;
  for (const char* b : {"b1", "b2"}) {
    for (const char* d : {"d1", "d2"}) {
      add_fixed(outcomes, b, d, {0.60, 0.70, 0.80, 0.65, 0.62});
      if (std::string(b) != "b1" || std::string(d) != "d1") outcomes.push_back(outcome(b, d, "mct", 0.79));
    }
  }
  const auto report = build_report(outcomes);
  ASSERT_EQ(report.rows.size(), 4u);
  const auto& gap = report.rows.front();
  EXPECT_EQ(gap.backend, "b1");
  EXPECT_EQ(gap.dataset, "d1");
  EXPECT_FALSE(gap.mct.has_value());
  EXPECT_FALSE(gap.complete());
  EXPECT_EQ(report.summaries.front().rows, 3);
  EXPECT_EQ(report.summaries.front().incomplete_rows, 1);
  const auto csv = report_csv(report);
  EXPECT_NE(csv.find("b1,d1,dse,"), std::string::npos);
}

TEST(Config, ParsesGridFile) {
  TempDir tmp;
  write_file_atomically(tmp / "a.jsonl", R"({"id":"q1","question":"?","reference_answer":"x"})" "\n");
  write_file_atomically(tmp / "grid.toml", R"(# demo grid
k = 5
tau_min = 0.1
tau_max = 1.0
seeds = [1, 2]
estimators = ["dse", "se"]
bootstrap_draws = 200

[backend.small]
kind = "synthetic"
logit_spread = 1.5

[backend.large]
kind = "synthetic"
skill = 2.0

[dataset.a]
path = "a.jsonl"
difficulty = 0.5

[random]
mode = "monte-carlo"
draws = 100
)");
  const auto grid = load_grid(tmp / "grid.toml");
  EXPECT_EQ(grid.seeds, (std::vector<std::uint64_t>{1, 2}));
  ASSERT_EQ(grid.backends.size(), 2u);
  const auto small = std::find_if(grid.backends.begin(), grid.backends.end(), [](const auto& b) { return b.id == "small"; });
  ASSERT_NE(small, grid.backends.end());
  EXPECT_EQ(small->synthetic.logit_spread, 1.5);
  EXPECT_EQ(grid.datasets.at(0).path, tmp / "a.jsonl");
  EXPECT_EQ(grid.datasets.at(0).difficulty, 0.5);
  EXPECT_EQ(grid.estimators, (std::vector<Estimator>{Estimator::kDiscreteSemanticEntropy, Estimator::kSemanticEntropy}));
  EXPECT_EQ(grid.bootstrap_draws, 200);
  EXPECT_EQ(grid.random.kind, RandomBaselineMode::Kind::kMonteCarlo);
  EXPECT_EQ(grid.effective_strategies().size(), 6u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("k = 5\nk = 6\n"), ParseError);
  EXPECT_THROW(parse_config("k = \n"), ParseError);
  const auto with = [](const std::string& extra) {
    return grid_from_config(parse_config(extra + "\n[backend.s]\nkind = \"synthetic\"\n[dataset.d]\npath = \"x\"\n"));
  };
  EXPECT_NO_THROW(with(""));
  EXPECT_THROW(with("colour = 3"), ConfigError);
  EXPECT_THROW(with("strategies = [\"mct\", \"fixed:0.3\"]"), ConfigError);
  EXPECT_NO_THROW(with("k = 2\nstrategies = [\"mct\", \"fixed:0.1\", \"fixed:1.0\"]"));
  EXPECT_THROW(with("k = 1"), DomainError);
  EXPECT_THROW(grid_from_config(parse_config("[backend.h]\nkind = \"http\"\nbase_url = \"http://x\"\n"
                                             "[dataset.d]\npath = \"x\"\n")),
               ConfigError);
}

TEST(Simulate, SameSeedSameReport) {
  TempDir a, b;
  SimulateOptions options;
  options.seed = 3;
  options.questions = 40;
  options.bootstrap_draws = 50;
  options.models.resize(2);
  options.datasets.resize(2);
  const auto ra = simulate(options, a.path());
  simulate(options, b.path());
  EXPECT_EQ(read_file(a / "report.csv"), read_file(b / "report.csv"));
  EXPECT_FALSE(ra.report.rows.empty());
  EXPECT_TRUE(std::filesystem::exists(a / "report.md"));
  EXPECT_TRUE(std::filesystem::exists(a / "summary.json"));
}
