#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcuq {

enum class StrategyKind { kMct, kFixed, kRandomFixed };

// A sampling strategy as written on the command line or in config files:
// "mct", "fixed:<tau>", "random-fixed".
struct Strategy {
  StrategyKind kind = StrategyKind::kMct;
  double tau = 0.0;  // only meaningful for kFixed

  static Strategy mct() { return {StrategyKind::kMct, 0.0}; }
  static Strategy fixed(double tau);
  static Strategy random_fixed() { return {StrategyKind::kRandomFixed, 0.0}; }

  static Strategy parse(std::string_view text);
  // Inverse of parse. Fixed temperatures use the shortest round-trip decimal.
  std::string tag() const;

  bool operator==(const Strategy&) const = default;
};

struct TemperatureSchedule {
  std::vector<double> values;
  StrategyKind strategy = StrategyKind::kMct;
};

struct ScheduleParams {
  int k = 5;
  double tau_min = 0.1;
  double tau_max = 1.0;
};

// Equidistant grid {tau_min, tau_min + d, ..., tau_max}, d = (tau_max - tau_min)/(k - 1).
// The last element is exactly tau_max. Requires 0 < tau_min < tau_max, k >= 2.
std::vector<double> mct_grid(double tau_min, double tau_max, int k);

// Seeded permutation of mct_grid: every generation gets a distinct grid
// temperature, drawn without replacement.
TemperatureSchedule mct_schedule(double tau_min, double tau_max, int k, std::uint64_t seed);

// k copies of tau. Requires tau > 0 and k >= 1.
TemperatureSchedule fixed_schedule(double tau, int k);

// Uniform seeded draw from a non-empty grid.
double random_fixed_draw(std::span<const double> grid, std::uint64_t seed);

// Schedule for one question of a run. MCT permutations are seeded per
// question from (run_seed, question_id); random-fixed draws a single
// temperature per run from run_seed so the whole run shares it.
TemperatureSchedule make_schedule(const Strategy& strategy, const ScheduleParams& params,
                                  std::uint64_t run_seed, std::string_view question_id);

// Validates (tau_min, tau_max, k) for a strategy before any work starts.
void validate_schedule_params(const Strategy& strategy, const ScheduleParams& params);

}  // namespace mcuq
