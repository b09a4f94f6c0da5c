#include "facereid/ablation.hpp"

#include <cmath>
#include <future>

#include <fmt/format.h>

#include "facereid/sources.hpp"

namespace facereid {

double gamma_percent(std::int64_t e1, std::int64_t e2, std::int64_t e3, std::int64_t e4) {
  if (e1 < 0 || e2 < 0 || e3 < 0 || e4 < 0) {
    throw InvalidArgument("identity counts must be non-negative");
  }
  const double mean = static_cast<double>(e1 + e2 + e3) / 3.0;
  if (mean == 0.0) throw InvalidArgument("gamma is undefined when exp1..exp3 are all zero");
  return (1.0 - static_cast<double>(e4) / mean) * 100.0;
}

double round_tenth(double v) { return std::round(v * 10.0) / 10.0; }

std::vector<AblationConfig> ablation_grid(const EngineParams& base) {
  const auto on = base.validation_policy == ValidationPolicy::Off
                      ? ValidationPolicy::OverlapReject
                      : base.validation_policy;
  auto make = [&](std::string label, ValidationPolicy policy, std::int64_t t_min) {
    EngineParams p = base;
    p.validation_policy = policy;
    p.t_min = t_min;
    return AblationConfig{std::move(label), p};
  };
  return {
      make("exp1", ValidationPolicy::Off, 0),
      make("exp2", on, 0),
      make("exp3", ValidationPolicy::Off, base.t_min),
      AblationConfig{"exp4", base},
  };
}

AblationReport run_ablation(const std::vector<Frame>& frames, const EngineParams& base) {
  validate_params(base);
  const auto grid = ablation_grid(base);

  std::vector<std::future<AblationRow>> jobs;
  for (const auto& cfg : grid) {
    jobs.push_back(std::async(std::launch::async, [&frames, cfg] {
      VectorSource source(frames, "ablation");
      PrecomputedEmbedder embedder;
      NullSink sink;
      const auto result = run(source, embedder, cfg.params, sink, {.deterministic = true});
      return AblationRow{cfg.label, cfg.params, result.summary.gallery, result.summary.outcomes};
    }));
  }

  AblationReport report;
  for (auto& job : jobs) report.rows.push_back(job.get());
  const double mean =
      static_cast<double>(report.active(0) + report.active(1) + report.active(2)) / 3.0;
  if (mean > 0.0) {
    report.gamma = gamma_percent(report.active(0), report.active(1), report.active(2),
                                 report.active(3));
  }
  return report;
}

AblationReport run_ablation(const ScenarioScript& script, const EngineParams& base) {
  std::vector<Frame> frames;
  for (auto& f : simulate(script)) frames.push_back(std::move(f.frame));
  auto report = run_ablation(frames, base);
  report.true_count = static_cast<std::int64_t>(script.persons.size());
  return report;
}

std::string ablation_csv(const AblationReport& r) {
  std::string out =
      "config,validation_policy,t_min,active,held,discarded,enrolled,suppressed_by_tracker,"
      "true_count,gamma_percent\n";
  for (const auto& row : r.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", row.label,
                       to_string(row.params.validation_policy), row.params.t_min,
                       row.census.active, row.census.held, row.census.discarded,
                       row.outcomes.enrolled, row.outcomes.suppressed_by_tracker,
                       r.true_count ? std::to_string(*r.true_count) : "",
                       r.gamma ? fmt::format("{:.1f}", round_tenth(*r.gamma)) : "");
  }
  return out;
}

std::string ablation_text(const AblationReport& r) {
  std::string out = fmt::format("{:<6} {:<20} {:>6} {:>8} {:>9}\n", "config", "validation",
                                "t_min", "active", "enrolled");
  for (const auto& row : r.rows) {
    out += fmt::format("{:<6} {:<20} {:>6} {:>8} {:>9}\n", row.label,
                       to_string(row.params.validation_policy), row.params.t_min,
                       row.census.active, row.outcomes.enrolled);
  }
  if (r.true_count) out += fmt::format("true identities: {}\n", *r.true_count);
  if (r.gamma) {
    out += fmt::format("gamma: {:.1f}%\n", round_tenth(*r.gamma));
  } else {
    out += "gamma: undefined (exp1..exp3 found no identities)\n";
  }
  return out;
}

}  // namespace facereid
