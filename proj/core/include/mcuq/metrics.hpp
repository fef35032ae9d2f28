#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "mcuq/types.hpp"

namespace mcuq {

// One question's uncertainty score and whether its answer was wrong.
// Incorrect is the positive class throughout.
struct ScoredLabel {
  std::string question_id;
  double score = 0.0;  // higher = more uncertain
  bool incorrect = false;
};

struct MetricReport {
  Metric metric = Metric::kAuroc;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n = 0;
  int bootstrap_draws = 0;
};

// P(score_incorrect > score_correct) + 0.5 P(tie), computed exactly from
// tie-grouped ranks. Throws DegenerateDataError unless both classes occur.
double auroc(std::span<const ScoredLabel> items);
std::optional<double> try_auroc(std::span<const ScoredLabel> items);

// Average precision for the incorrect class, ranking by descending score
// with equal scores entering as one block. Needs at least one incorrect item.
double pr_auc(std::span<const ScoredLabel> items);
std::optional<double> try_pr_auc(std::span<const ScoredLabel> items);

// Mean accuracy of the retained items as the floor(i n / deciles) most
// uncertain items are rejected, i = 0..deciles-1. Equal scores are rejected
// in ascending question_id order.
double aurac(std::span<const ScoredLabel> items, int deciles = 10);
std::optional<double> try_aurac(std::span<const ScoredLabel> items, int deciles = 10);

// A metric that may be undefined on a (re)sample.
using MetricFn = std::function<std::optional<double>(std::span<const ScoredLabel>)>;

MetricFn metric_function(Metric metric, int aurac_deciles = 10);

struct BootstrapOptions {
  int draws = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  // When false every "resample" is the original sample (degenerate check).
  bool resample = true;
  int threads = 1;
};

// Percentile bootstrap. Each draw resamples n of n with replacement from its
// own RNG stream derived from (seed, draw index), so thread count does not
// change the result. Undefined resamples are redrawn, at most 10 attempts
// per draw; if more than 90% of attempts are undefined, or a draw exhausts
// its attempts, DegenerateDataError is thrown. The interval is widened to
// include the point estimate when the percentiles exclude it.
MetricReport bootstrap_ci(std::span<const ScoredLabel> items, Metric metric, const MetricFn& metric_fn,
                          const BootstrapOptions& options = {});

// 100 (oracle - method) / oracle; negative when the method beats the oracle.
double relative_delta(double oracle_value, double method_value);

// Percentage of paired entries where deltas_a < deltas_b; ties count half.
double win_rate(std::span<const double> deltas_a, std::span<const double> deltas_b);

bool intervals_overlap(double low_a, double high_a, double low_b, double high_b);

}  // namespace mcuq
