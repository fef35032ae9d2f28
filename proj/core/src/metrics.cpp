#include "mcuq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "mcuq/error.hpp"
#include "mcuq/parallel.hpp"
#include "mcuq/rng.hpp"

namespace mcuq {
namespace {

std::vector<std::size_t> order_by_score_desc(std::span<const ScoredLabel> items) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (items[a].score != items[b].score) return items[a].score > items[b].score;
    return items[a].question_id < items[b].question_id;
  });
  return order;
}

// Percentile with linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::optional<double> try_auroc(std::span<const ScoredLabel> items) {
  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(items.size());
  for (const auto& item : items) sorted.emplace_back(item.score, item.incorrect);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // U counts (incorrect, correct) pairs ordered correctly, ties as 1/2.
  // Every term is a multiple of 1/2, so U is exact in double.
  double u = 0.0;
  double negatives_below = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    double pos = 0.0;
    double neg = 0.0;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      (sorted[j].second ? pos : neg) += 1.0;
      ++j;
    }
    u += pos * (negatives_below + 0.5 * neg);
    negatives_below += neg;
    positives += pos;
    i = j;
  }
  const double negatives = negatives_below;
  if (positives == 0.0 || negatives == 0.0) return std::nullopt;
  const double pairs = positives * negatives;
  // Divide the smaller of U and its complement so that relabeling maps the
  // value below 1/2 to exactly one minus the value above it.
  const double complement = pairs - u;
  if (u <= complement) return u / pairs;
  return 1.0 - complement / pairs;
}

double auroc(std::span<const ScoredLabel> items) {
  if (auto v = try_auroc(items)) return *v;
  throw DegenerateDataError("AUROC undefined: needs at least one incorrect and one correct item");
}

std::optional<double> try_pr_auc(std::span<const ScoredLabel> items) {
  const double positives = static_cast<double>(
      std::count_if(items.begin(), items.end(), [](const ScoredLabel& s) { return s.incorrect; }));
  if (positives == 0.0) return std::nullopt;
  const auto order = order_by_score_desc(items);
  double ap = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && items[order[j]].score == items[order[i]].score) {
      (items[order[j]].incorrect ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double pr_auc(std::span<const ScoredLabel> items) {
  if (auto v = try_pr_auc(items)) return *v;
  throw DegenerateDataError("PR-AUC undefined: no incorrect items");
}

std::optional<double> try_aurac(std::span<const ScoredLabel> items, int deciles) {
  if (deciles < 1) throw DomainError(fmt::format("AURAC needs deciles >= 1, got {}", deciles));
  if (items.empty()) return std::nullopt;
  const auto order = order_by_score_desc(items);
  const std::size_t n = items.size();
  // correct_suffix[r] = number of correct items among order[r..n).
  std::vector<std::size_t> correct_suffix(n + 1, 0);
  for (std::size_t r = n; r-- > 0;) {
    correct_suffix[r] = correct_suffix[r + 1] + (items[order[r]].incorrect ? 0 : 1);
  }
  double total = 0.0;
  for (int i = 0; i < deciles; ++i) {
    const std::size_t rejected = static_cast<std::size_t>(i) * n / static_cast<std::size_t>(deciles);
    total += static_cast<double>(correct_suffix[rejected]) / static_cast<double>(n - rejected);
  }
  return total / deciles;
}

double aurac(std::span<const ScoredLabel> items, int deciles) {
  if (auto v = try_aurac(items, deciles)) return *v;
  throw DegenerateDataError("AURAC undefined on an empty item list");
}

MetricFn metric_function(Metric metric, int aurac_deciles) {
  switch (metric) {
    case Metric::kAuroc: return [](std::span<const ScoredLabel> s) { return try_auroc(s); };
    case Metric::kPrAuc: return [](std::span<const ScoredLabel> s) { return try_pr_auc(s); };
    case Metric::kAurac:
      return [aurac_deciles](std::span<const ScoredLabel> s) { return try_aurac(s, aurac_deciles); };
  }
  throw DomainError("unknown metric");
}

MetricReport bootstrap_ci(std::span<const ScoredLabel> items, Metric metric, const MetricFn& metric_fn,
                          const BootstrapOptions& options) {
  if (options.draws < 1) throw DomainError(fmt::format("bootstrap draws must be >= 1, got {}", options.draws));
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw DomainError(fmt::format("confidence level must be in (0, 1), got {}", options.level));
  }
  const auto point = metric_fn(items);
  if (!point) {
    throw DegenerateDataError(
        fmt::format("{} undefined on the full sample of {} items", to_string(metric), items.size()));
  }

  constexpr int kAttemptsPerDraw = 10;
  const std::size_t draws = static_cast<std::size_t>(options.draws);
  std::vector<double> values(draws);
  std::vector<int> attempts(draws, 0);
  std::vector<char> exhausted(draws, 0);

  parallel_for(draws, options.threads, [&](std::size_t d) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(d)));
    std::vector<ScoredLabel> resample(items.size());
    for (int a = 0; a < kAttemptsPerDraw; ++a) {
      ++attempts[d];
      std::optional<double> v;
      if (options.resample) {
        for (auto& slot : resample) slot = items[rng.index(items.size())];
        v = metric_fn(resample);
      } else {
        v = metric_fn(items);
      }
      if (v) {
        values[d] = *v;
        return;
      }
    }
    exhausted[d] = 1;
  });

  const long total_attempts = std::accumulate(attempts.begin(), attempts.end(), 0L);
  const long undefined = total_attempts - static_cast<long>(draws) +
                         std::count(exhausted.begin(), exhausted.end(), char{1});
  if (static_cast<double>(undefined) > 0.9 * static_cast<double>(total_attempts) ||
      std::find(exhausted.begin(), exhausted.end(), char{1}) != exhausted.end()) {
    throw DegenerateDataError(fmt::format("{} undefined on {} of {} bootstrap resamples", to_string(metric),
                                          undefined, total_attempts));
  }

  std::sort(values.begin(), values.end());
  const double alpha = (1.0 - options.level) / 2.0;
  MetricReport report;
  report.metric = metric;
  report.point = *point;
  report.ci_low = std::min(quantile(values, alpha), *point);
  report.ci_high = std::max(quantile(values, 1.0 - alpha), *point);
  report.n = static_cast<int>(items.size());
  report.bootstrap_draws = options.draws;
  return report;
}

double relative_delta(double oracle_value, double method_value) {
  if (!(oracle_value > 0.0)) {
    throw DomainError(fmt::format("relative delta needs a positive oracle value, got {}", oracle_value));
  }
  return 100.0 * (oracle_value - method_value) / oracle_value;
}

double win_rate(std::span<const double> deltas_a, std::span<const double> deltas_b) {
  if (deltas_a.size() != deltas_b.size()) {
    throw DomainError(fmt::format("win rate needs paired lists, got {} and {}", deltas_a.size(), deltas_b.size()));
  }
  if (deltas_a.empty()) throw DomainError("win rate of empty lists is undefined");
  double wins = 0.0;
  for (std::size_t i = 0; i < deltas_a.size(); ++i) {
    if (deltas_a[i] < deltas_b[i]) {
      wins += 1.0;
    } else if (deltas_a[i] == deltas_b[i]) {
      wins += 0.5;
    }
  }
  return 100.0 * wins / static_cast<double>(deltas_a.size());
}

bool intervals_overlap(double low_a, double high_a, double low_b, double high_b) {
  return low_a <= high_b && low_b <= high_a;
}

}  // namespace mcuq
