// One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mcuq/estimators.hpp"
#include "mcuq/harness.hpp"
#include "mcuq/metrics.hpp"
#include "mcuq/records.hpp"
#include "mcuq/rng.hpp"
#include "mcuq/simulation.hpp"
#include "mcuq/temperature.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#ifdef MCUQ_HAVE_CLI
#include "cli.hpp"
#endif

using namespace mcuq;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> check;
};

// ---------------------------------------------------------------------------

Outcome grid_exactness() {
  const std::vector<double> expected{0.100, 0.325, 0.550, 0.775, 1.000};
  const auto start = Clock::now();
  const auto grid = mct_grid(0.1, 1.0, 5);
  const double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
  double worst = 0.0;
  bool sizes = grid.size() == expected.size();
  for (std::size_t i = 0; sizes && i < grid.size(); ++i) worst = std::max(worst, std::abs(grid[i] - expected[i]));
  return {sizes && worst <= 1e-12 && us < 1000.0,
          fmt::format("max |error| {:.1e}, {:.1f} us per call", worst, us)};
}

struct EstimatorInstance {
  std::vector<std::vector<double>> logprobs;
  std::vector<int> labels;
};

EstimatorInstance random_instance(Rng& rng) {
  EstimatorInstance inst;
  const std::size_t k = 2 + rng.index(5);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> lp(1 + rng.index(5));
    for (double& x : lp) x = -4.0 * rng.uniform();
    inst.logprobs.push_back(lp);
  }
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < k; ++i) {
    const int raw = static_cast<int>(rng.index(k));
    inst.labels.push_back(relabel.try_emplace(raw, static_cast<int>(relabel.size())).first->second);
  }
  return inst;
}

Outcome estimator_oracles() {
  Rng rng(20240601);
  double worst = 0.0;
  double worst_uniform = 0.0;
  int se_above_ne = 0;
  int numsets_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = random_instance(rng);
    std::vector<GenerationSample> samples;
    for (const auto& lp : inst.logprobs) samples.push_back({"x", 0.5, lp});
    const ClusterPartition part{"q", inst.labels};
    for (auto mode : {Normalization::kJoint, Normalization::kLengthNormalized}) {
      const auto probs = sequence_probabilities(samples, mode);
      const auto w = oracle::weights(inst.logprobs, mode == Normalization::kLengthNormalized);
      const double ne = naive_entropy(probs);
      const double se = semantic_entropy(probs, part);
      worst = std::max({worst, std::abs(ne - oracle::entropy(w)),
                        std::abs(se - oracle::semantic_entropy(w, inst.labels))});
      if (se > ne) ++se_above_ne;
    }
    worst = std::max(worst, std::abs(discrete_semantic_entropy(part) - oracle::discrete_semantic_entropy(inst.labels)));
    if (num_semantic_sets(part) != oracle::num_sets(inst.labels)) ++numsets_mismatch;
    const SampleProbabilities uniform{std::vector<double>(inst.labels.size(), 1.0 / inst.labels.size()),
                                      Normalization::kLengthNormalized};
    worst_uniform = std::max(worst_uniform, std::abs(semantic_entropy(uniform, part) - discrete_semantic_entropy(part)));
  }
  return {worst <= 1e-9 && worst_uniform <= 1e-12 && se_above_ne == 0 && numsets_mismatch == 0,
          fmt::format("max |error| {:.1e}, SE>NE on {} instances, NumSets mismatches {}, |SE-DSE| uniform {:.1e}",
                      worst, se_above_ne, numsets_mismatch, worst_uniform)};
}

Outcome auroc_oracles() {
  Rng rng(77);
  double worst = 0.0;
  int complement_failures = 0;
  int transform_failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(199);
    std::vector<ScoredLabel> xs;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back({"q" + std::to_string(i), static_cast<double>(rng.index(1 + n / 4)), rng.uniform() < 0.5});
    }
    xs[0].incorrect = true;
    xs[1].incorrect = false;
    const double a = auroc(xs);
    worst = std::max(worst, std::abs(a - oracle::auroc_pairwise(xs)));
    auto flipped = xs;
    for (auto& x : flipped) x.incorrect = !x.incorrect;
    const double b = auroc(flipped);
    if (std::max(a, b) != 1.0 - std::min(a, b)) ++complement_failures;
    auto transformed = xs;
    for (auto& x : transformed) x.score = 2.0 * x.score * x.score * x.score - 7.0;
    if (auroc(transformed) != a) ++transform_failures;
  }
  return {worst <= 1e-12 && complement_failures == 0 && transform_failures == 0,
          fmt::format("max |error| {:.1e}, complement failures {}, transform failures {}", worst,
                      complement_failures, transform_failures)};
}

Outcome fixtures() {
  std::vector<ScoredLabel> xs;
  for (int i = 0; i < 10; ++i) xs.push_back({"q" + std::to_string(i), 1.0 - i / 10.0, i < 5});
  const double aurac_value = aurac(xs);
  const bool aurac_ok = std::abs(aurac_value - 0.7948) <= 1e-4;

  const ClusterPartition part{"q", {0, 0, 0, 1, 1}};
  const double dse = discrete_semantic_entropy(part);
  const bool dse_ok = std::abs(dse - 0.673012) <= 1e-6;

  const double delta = relative_delta(0.7462, 0.7498);
  const bool delta_ok = std::abs(delta - (-0.49)) <= 0.005;

  return {aurac_ok && dse_ok && delta_ok,
          fmt::format("AURAC {:.6f} vs 0.7948 {}; DSE {:.6f} vs 0.673012 {}; relative_delta {:.5f} vs -0.49 {}",
                      aurac_value, aurac_ok ? "ok" : "MISMATCH", dse, dse_ok ? "ok" : "MISMATCH", delta,
                      delta_ok ? "ok" : "MISMATCH")};
}

Outcome bootstrap_coverage() {
  // Phi^-1(0.75) * sqrt(2): population AUROC of N(d,1) vs N(0,1) is 0.75.
  const double separation = 0.6744897501960817 * std::sqrt(2.0);
  const auto fn = metric_function(Metric::kAuroc);
  int covered = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(99, std::to_string(t)));
    const auto xs = oracle::binormal_sample(rng, 500, separation);
    const auto r = bootstrap_ci(xs, Metric::kAuroc, fn, {.draws = 1000, .seed = static_cast<std::uint64_t>(t)});
    if (r.ci_low <= 0.75 && 0.75 <= r.ci_high) ++covered;
  }
  const double rate = 100.0 * covered / trials;
  return {rate >= 92.0 && rate <= 98.0, fmt::format("coverage {:.1f}% ({} of {} trials)", rate, covered, trials)};
}

bool is_fixed(const std::string& strategy) { return strategy.starts_with("fixed:"); }

Outcome synthetic_end_to_end() {
  TempDir tmp("mcuq-accept");
  SimulateOptions options;
  options.seed = 2024;
  options.metrics = {Metric::kAuroc};
  const auto result = simulate(options, tmp.path());

  // P(True) is scored once per question, independent of the sampling
  // schedule, so it says nothing about temperature; judge the sampled
  // estimators only.
  const std::set<Estimator> sampled{Estimator::kNaiveEntropy, Estimator::kSemanticEntropy,
                                    Estimator::kDiscreteSemanticEntropy, Estimator::kNumSemanticSets};
  std::set<std::pair<std::string, std::string>> cells;
  std::map<std::tuple<std::string, std::string, Estimator>, std::pair<double, double>> ranges;
  for (const auto& o : result.outcomes) {
    if (o.metric != Metric::kAuroc || !sampled.contains(o.key.estimator)) continue;
    cells.emplace(o.key.backend_id, o.key.dataset_id);
    if (!is_fixed(o.key.strategy)) continue;
    auto [it, fresh] = ranges.try_emplace({o.key.backend_id, o.key.dataset_id, o.key.estimator}, o.point, o.point);
    it->second.first = std::min(it->second.first, o.point);
    it->second.second = std::max(it->second.second, o.point);
  }
  int varied = 0;
  for (const auto& [_, r] : ranges) varied += (r.second - r.first > 0.03) ? 1 : 0;

  double sum_mct = 0.0, sum_random = 0.0;
  int rows = 0, parity = 0;
  for (const auto& row : result.report.rows) {
    if (row.metric != Metric::kAuroc || !sampled.contains(row.estimator) || !row.complete()) continue;
    ++rows;
    sum_mct += *row.delta_mct;
    sum_random += *row.delta_random;
    parity += *row.parity ? 1 : 0;
  }
  if (rows == 0 || ranges.empty()) return {false, "no complete rows"};
  const double varied_share = static_cast<double>(varied) / ranges.size();
  const double mean_mct = sum_mct / rows;
  const double mean_random = sum_random / rows;
  const double parity_rate = 100.0 * parity / rows;
  const bool a = varied_share >= 0.5;
  const bool b = mean_mct <= mean_random;
  const bool c = parity_rate >= 80.0;
  return {cells.size() >= 20 && a && b && c,
          fmt::format("{} cells, {} rows; (a) {}/{} spread > 0.03 {}; (b) mean delta mct {:.2f}% vs random {:.2f}% "
                      "{}; (c) parity {:.1f}% {}",
                      cells.size(), rows, varied, ranges.size(), a ? "ok" : "FAIL", mean_mct, mean_random,
                      b ? "ok" : "FAIL", parity_rate, c ? "ok" : "FAIL")};
}

Outcome determinism() {
  TempDir a("mcuq-det"), b("mcuq-det");
#ifdef MCUQ_HAVE_CLI
  for (const auto* dir : {&a, &b}) {
    std::ostringstream out, err;
    const int code = cli::run({"simulate", "--seed", "11", "--out", dir->path().string()}, out, err);
    if (code != 0) return {false, fmt::format("simulate exited {}: {}", code, err.str())};
  }
  const std::string how = "mcuq simulate --seed 11";
#else
  SimulateOptions options;
  options.seed = 11;
  simulate(options, a.path());
  simulate(options, b.path());
  const std::string how = "simulate(seed 11)";
#endif
  const auto x = read_file(a / "report.csv");
  const auto y = read_file(b / "report.csv");
  return {x == y && !x.empty(), fmt::format("{} twice: report.csv {} ({} bytes)", how,
                                            x == y ? "byte-identical" : "DIFFERS", x.size())};
}

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

Outcome loocv_audit() {
  TempDir tmp("mcuq-loocv");
  SimulateOptions options;
  options.seed = 5;
  options.questions = 120;
  options.bootstrap_draws = 100;
  options.metrics = {Metric::kAuroc};
  options.estimators = {Estimator::kSemanticEntropy};
  options.models.resize(3);
  options.datasets.resize(3);
  const auto result = simulate(options, tmp.path());

  MapValueStore store;
  for (const auto& o : result.outcomes) {
    if (!is_fixed(o.key.strategy)) continue;
    store.set({o.key.backend_id, o.key.dataset_id}, Strategy::parse(o.key.strategy).tau, o.point);
  }
  const auto cells = store.cells();
  int violations = 0;
  std::size_t reads = 0;
  for (const auto& test : cells) {
    TracingStore tracing(store);
    const auto chosen = best_avg_loocv(tracing, test);
    reads += tracing.reads.size();
    // All reads but the last come from the pool; the last is the test cell at the chosen temperature.
    if (tracing.reads.empty() || !(tracing.reads.back() == test)) ++violations;
    for (std::size_t i = 0; i + 1 < tracing.reads.size(); ++i) {
      if (tracing.reads[i].backend == test.backend || tracing.reads[i].dataset == test.dataset) ++violations;
    }
    if (chosen.value != store.value(test, chosen.tau)) ++violations;
  }
  return {cells.size() == 9 && violations == 0,
          fmt::format("{} cells, {} traced reads, {} excluded-cell accesses", cells.size(), reads, violations)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"MCT grid exactness", 0.001, grid_exactness},
      {"Estimator oracle equivalence", 5, estimator_oracles},
      {"AUROC oracle equivalence", 10, auroc_oracles},
      {"Hand-computed fixtures", 1, fixtures},
      {"Bootstrap coverage", 120, bootstrap_coverage},
      {"Synthetic end-to-end", 180, synthetic_end_to_end},
      {"Determinism", 180, determinism},
      {"LOOCV exclusion audit", 60, loocv_audit},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    // The grid criterion times a single call inside its check.
    const bool in_budget = c.budget_seconds < 0.01 || seconds <= c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failures += pass ? 0 : 1;
    fmt::print("{} {} — {} [{:.2f} s{}]\n", pass ? "PASS" : "FAIL", c.name, o.detail, seconds,
               in_budget ? "" : fmt::format(", over {} s budget", c.budget_seconds));
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
