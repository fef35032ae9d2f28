#include "mcuq/temperature.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "mcuq/error.hpp"
#include "mcuq/rng.hpp"

namespace mcuq {
namespace {

void check_grid_args(double tau_min, double tau_max, int k) {
  if (k < 2) {
    throw DomainError(fmt::format("MCT grid undefined for k = {}: needs k >= 2 (spacing divides by k - 1)", k));
  }
  if (!(tau_min > 0.0) || !std::isfinite(tau_max)) {
    throw DomainError(fmt::format("MCT grid needs 0 < tau_min, got tau_min = {}", tau_min));
  }
  if (!(tau_min < tau_max)) {
    throw DomainError(fmt::format("MCT grid needs tau_min < tau_max, got [{}, {}]", tau_min, tau_max));
  }
}

std::string shortest(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

Strategy Strategy::fixed(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DomainError(fmt::format("fixed temperature must be > 0, got {}", tau));
  }
  return {StrategyKind::kFixed, tau};
}

Strategy Strategy::parse(std::string_view text) {
  if (text == "mct") return mct();
  if (text == "random-fixed") return random_fixed();
  constexpr std::string_view kFixedPrefix = "fixed:";
  if (text.starts_with(kFixedPrefix)) {
    const auto number = text.substr(kFixedPrefix.size());
    double tau = 0.0;
    const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), tau);
    if (ec != std::errc() || ptr != number.data() + number.size() || number.empty()) {
      throw ParseError(fmt::format("bad fixed temperature in strategy '{}'", text));
    }
    return fixed(tau);
  }
  throw ParseError(fmt::format("unknown strategy '{}' (expected mct, fixed:<tau>, random-fixed)", text));
}

std::string Strategy::tag() const {
  switch (kind) {
    case StrategyKind::kMct: return "mct";
    case StrategyKind::kFixed: return "fixed:" + shortest(tau);
    case StrategyKind::kRandomFixed: return "random-fixed";
  }
  return "?";
}

std::vector<double> mct_grid(double tau_min, double tau_max, int k) {
  check_grid_args(tau_min, tau_max, k);
  const double delta = (tau_max - tau_min) / static_cast<double>(k - 1);
  std::vector<double> grid(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) grid[static_cast<std::size_t>(i)] = tau_min + i * delta;
  grid.back() = tau_max;
  return grid;
}

TemperatureSchedule mct_schedule(double tau_min, double tau_max, int k, std::uint64_t seed) {
  TemperatureSchedule schedule{mct_grid(tau_min, tau_max, k), StrategyKind::kMct};
  Rng rng(seed);
  auto& v = schedule.values;
  for (std::size_t i = v.size() - 1; i > 0; --i) {
    std::swap(v[i], v[rng.index(i + 1)]);
  }
  return schedule;
}

TemperatureSchedule fixed_schedule(double tau, int k) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DomainError(fmt::format("fixed temperature must be > 0, got {}", tau));
  }
  if (k < 1) throw DomainError(fmt::format("fixed schedule needs k >= 1, got {}", k));
  return {std::vector<double>(static_cast<std::size_t>(k), tau), StrategyKind::kFixed};
}

double random_fixed_draw(std::span<const double> grid, std::uint64_t seed) {
  if (grid.empty()) throw DomainError("cannot draw a temperature from an empty grid");
  Rng rng(seed);
  return grid[rng.index(grid.size())];
}

void validate_schedule_params(const Strategy& strategy, const ScheduleParams& params) {
  switch (strategy.kind) {
    case StrategyKind::kMct:
    case StrategyKind::kRandomFixed:
      check_grid_args(params.tau_min, params.tau_max, params.k);
      break;
    case StrategyKind::kFixed:
      fixed_schedule(strategy.tau, params.k);
      if (params.k < 2) {
        throw DomainError(fmt::format("multi-sample estimators need k >= 2, got {}", params.k));
      }
      break;
  }
}

TemperatureSchedule make_schedule(const Strategy& strategy, const ScheduleParams& params,
                                  std::uint64_t run_seed, std::string_view question_id) {
  switch (strategy.kind) {
    case StrategyKind::kMct:
      return mct_schedule(params.tau_min, params.tau_max, params.k, derive_seed(run_seed, question_id));
    case StrategyKind::kFixed:
      return fixed_schedule(strategy.tau, params.k);
    case StrategyKind::kRandomFixed: {
      const auto grid = mct_grid(params.tau_min, params.tau_max, params.k);
      auto schedule = fixed_schedule(random_fixed_draw(grid, run_seed), params.k);
      schedule.strategy = StrategyKind::kRandomFixed;
      return schedule;
    }
  }
  throw DomainError("unknown strategy");
}

}  // namespace mcuq
