#include "mcuq/report.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "mcuq/error.hpp"
#include "mcuq/metrics.hpp"
#include "mcuq/records.hpp"
#include "mcuq/temperature.hpp"

namespace mcuq {
namespace {

std::string opt(const std::optional<double>& v, const char* spec = "{:.6f}") {
  return v ? fmt::format(fmt::runtime(spec), *v) : std::string();
}

std::string metric_title(Metric m) {
  switch (m) {
    case Metric::kAuroc: return "AUROC";
    case Metric::kPrAuc: return "PR-AUC";
    case Metric::kAurac: return "AURAC";
  }
  return "?";
}

void append_note(std::string& note, std::string_view text) {
  if (!note.empty()) note += "; ";
  note += text;
}

}  // namespace

bool ReportRow::complete() const {
  return oracle && mct && best_avg && random && delta_mct && delta_best_avg && delta_random;
}

Report build_report(std::span<const EvalOutcome> outcomes, const ReportOptions& options) {
  // (metric, estimator) -> cell -> strategy tag -> outcome
  using Group = std::map<CellId, std::map<std::string, const EvalOutcome*>>;
  std::map<std::pair<Metric, Estimator>, Group> groups;
  for (const auto& o : outcomes) {
    groups[{o.metric, o.key.estimator}][CellId{o.key.backend_id, o.key.dataset_id}][o.key.strategy] = &o;
  }

  Report report;
  for (const auto& [group_key, cells] : groups) {
    const auto [metric, estimator] = group_key;

    MapValueStore fixed_store;
    std::map<CellId, std::vector<TemperatureValue>> fixed_values;
    for (const auto& [cell, strategies] : cells) {
      for (const auto& [tag, outcome] : strategies) {
        const Strategy s = Strategy::parse(tag);
        if (s.kind != StrategyKind::kFixed) continue;
        fixed_store.set(cell, s.tau, outcome->point);
        fixed_values[cell].push_back({s.tau, outcome->point});
      }
    }

    for (const auto& [cell, strategies] : cells) {
      ReportRow row;
      row.metric = metric;
      row.backend = cell.backend;
      row.dataset = cell.dataset;
      row.estimator = estimator;

      const auto& fixed = fixed_values[cell];
      if (!fixed.empty()) {
        const auto best = oracle_select(fixed);
        const auto* o = strategies.at(Strategy::fixed(best.tau).tag());
        row.oracle_tau = best.tau;
        row.oracle = IntervalValue{o->point, o->ci_low, o->ci_high};
        row.random = random_baseline(fixed, options.random);
        try {
          const auto chosen = best_avg_loocv(fixed_store, cell);
          row.best_avg_tau = chosen.tau;
          row.best_avg = chosen.value;
        } catch (const Error& e) {
          append_note(row.note, "no best-average temperature (leave-one-out pool empty or incomplete)");
        }
      } else {
        append_note(row.note, "no fixed-temperature runs");
      }
      if (const auto it = strategies.find("mct"); it != strategies.end()) {
        row.mct = IntervalValue{it->second->point, it->second->ci_low, it->second->ci_high};
      } else {
        append_note(row.note, "no mct run");
      }

      if (row.oracle && row.oracle->value > 0.0) {
        if (row.mct) row.delta_mct = relative_delta(row.oracle->value, row.mct->value);
        if (row.best_avg) row.delta_best_avg = relative_delta(row.oracle->value, *row.best_avg);
        if (row.random) row.delta_random = relative_delta(row.oracle->value, *row.random);
      } else if (row.oracle) {
        append_note(row.note, "oracle value is 0; relative deltas undefined");
      }
      if (row.oracle && row.mct) {
        row.parity = intervals_overlap(row.mct->ci_low, row.mct->ci_high, row.oracle->ci_low, row.oracle->ci_high);
      }
      report.rows.push_back(std::move(row));
    }
  }

  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.metric, a.backend, a.dataset, a.estimator) <
           std::tie(b.metric, b.backend, b.dataset, b.estimator);
  });

  for (Metric metric : kAllMetrics) {
    MetricSummary summary;
    summary.metric = metric;
    std::vector<double> mct;
    std::vector<double> best_avg;
    std::vector<double> random;
    int parity = 0;
    bool any = false;
    for (const auto& row : report.rows) {
      if (row.metric != metric) continue;
      any = true;
      if (!row.complete()) {
        ++summary.incomplete_rows;
        continue;
      }
      mct.push_back(*row.delta_mct);
      best_avg.push_back(*row.delta_best_avg);
      random.push_back(*row.delta_random);
      if (row.parity.value_or(false)) ++parity;
    }
    if (!any) continue;
    summary.rows = static_cast<int>(mct.size());
    if (!mct.empty()) {
      const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      summary.mean_delta_mct = mean(mct);
      summary.mean_delta_best_avg = mean(best_avg);
      summary.mean_delta_random = mean(random);
      summary.win_rate_mct_vs_best_avg = win_rate(mct, best_avg);
      summary.win_rate_mct_vs_random = win_rate(mct, random);
      summary.parity_rate = 100.0 * parity / static_cast<double>(mct.size());
    }
    report.summaries.push_back(summary);
  }
  return report;
}

std::string report_csv(const Report& report) {
  std::string out =
      "metric,backend,dataset,estimator,oracle_tau,oracle,oracle_ci_low,oracle_ci_high,mct,mct_ci_low,"
      "mct_ci_high,best_avg_tau,best_avg,random,delta_mct,delta_best_avg,delta_random,parity\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.metric), r.backend,
                       r.dataset, to_string(r.estimator), opt(r.oracle_tau, "{:.3f}"),
                       opt(r.oracle ? std::optional(r.oracle->value) : std::nullopt),
                       opt(r.oracle ? std::optional(r.oracle->ci_low) : std::nullopt),
                       opt(r.oracle ? std::optional(r.oracle->ci_high) : std::nullopt),
                       opt(r.mct ? std::optional(r.mct->value) : std::nullopt),
                       opt(r.mct ? std::optional(r.mct->ci_low) : std::nullopt),
                       opt(r.mct ? std::optional(r.mct->ci_high) : std::nullopt), opt(r.best_avg_tau, "{:.3f}"),
                       opt(r.best_avg), opt(r.random), opt(r.delta_mct, "{:.4f}"), opt(r.delta_best_avg, "{:.4f}"),
                       opt(r.delta_random, "{:.4f}"), r.parity ? (*r.parity ? "1" : "0") : "");
  }
  return out;
}

std::string report_markdown(const Report& report) {
  std::string out = "# Temperature strategy comparison\n";
  for (const auto& summary : report.summaries) {
    out += fmt::format("\n## {}\n\n", metric_title(summary.metric));
    out += "| Backend | Dataset | Estimator | Oracle τ | Oracle | MCT | Best Avg. | Random | "
           "MCT Δ (%) | Best Avg. Δ (%) | Random Δ (%) | Parity |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
      if (r.metric != summary.metric) continue;
      // Compare at display precision so equal-looking cells bold together.
      std::optional<double> lowest;
      for (const auto& d : {r.delta_mct, r.delta_best_avg, r.delta_random}) {
        if (d && (!lowest || *d < *lowest)) lowest = d;
      }
      const std::string lowest_text = lowest ? fmt::format("{:.2f}", *lowest) : std::string();
      const auto delta = [&](const std::optional<double>& d) {
        if (!d) return std::string("–");
        const auto text = fmt::format("{:.2f}", *d);
        return text == lowest_text ? "**" + text + "**" : text;
      };
      const auto value = [](const std::optional<double>& v) {
        return v ? fmt::format("{:.4f}", *v) : std::string("–");
      };
      out += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", r.backend, r.dataset,
                         to_string(r.estimator), r.oracle_tau ? fmt::format("{:.3f}", *r.oracle_tau) : "–",
                         value(r.oracle ? std::optional(r.oracle->value) : std::nullopt),
                         value(r.mct ? std::optional(r.mct->value) : std::nullopt), value(r.best_avg),
                         value(r.random), delta(r.delta_mct), delta(r.delta_best_avg), delta(r.delta_random),
                         r.parity ? (*r.parity ? "yes" : "no") : "–");
    }
    out += fmt::format(
        "\nComplete rows: {} (excluded with gaps: {})  \n"
        "Mean Δ: MCT {:.2f}%, Best Avg. {:.2f}%, Random {:.2f}%  \n"
        "Win rate of MCT: {:.2f}% vs Best Avg., {:.2f}% vs Random  \n"
        "MCT at parity with oracle (95% intervals overlap): {:.2f}% of rows\n",
        summary.rows, summary.incomplete_rows, summary.mean_delta_mct, summary.mean_delta_best_avg,
        summary.mean_delta_random, summary.win_rate_mct_vs_best_avg, summary.win_rate_mct_vs_random,
        summary.parity_rate);
  }
  return out;
}

std::string report_summary_json(const Report& report) {
  nlohmann::ordered_json j;
  j["metrics"] = nlohmann::ordered_json::array();
  for (const auto& s : report.summaries) {
    nlohmann::ordered_json m;
    m["metric"] = std::string(to_string(s.metric));
    m["rows"] = s.rows;
    m["incomplete_rows"] = s.incomplete_rows;
    m["mean_delta"] = {{"mct", s.mean_delta_mct}, {"best_avg", s.mean_delta_best_avg}, {"random", s.mean_delta_random}};
    m["win_rate"] = {{"mct_vs_best_avg", s.win_rate_mct_vs_best_avg}, {"mct_vs_random", s.win_rate_mct_vs_random}};
    m["parity_rate"] = s.parity_rate;
    j["metrics"].push_back(std::move(m));
  }
  return j.dump(2) + "\n";
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  write_file_atomically(dir / "report.csv", report_csv(report));
  write_file_atomically(dir / "report.md", report_markdown(report));
  write_file_atomically(dir / "summary.json", report_summary_json(report));
}

}  // namespace mcuq
