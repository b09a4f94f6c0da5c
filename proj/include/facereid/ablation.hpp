#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facereid/engine.hpp"
#include "facereid/scenario.hpp"

namespace facereid {

// Relative reduction of identities by the full algorithm against the mean of
// the three ablated configurations: (1 - e4 / mean(e1, e2, e3)) * 100.
// Throws InvalidArgument when that mean is zero or a count is negative.
double gamma_percent(std::int64_t e1, std::int64_t e2, std::int64_t e3, std::int64_t e4);

// Rounds to one decimal, the precision γ is reported at.
double round_tenth(double v);

struct AblationConfig {
  std::string label;
  EngineParams params;
};

// The 2x2 grid over candidate validation and the hold-period post-filter:
//   exp1  validation off, t_min = 0
//   exp2  validation on,  t_min = 0
//   exp3  validation off, t_min = base
//   exp4  base parameters (full algorithm)
// "On" is the base policy, or OverlapReject if the base has validation off.
std::vector<AblationConfig> ablation_grid(const EngineParams& base);

struct AblationRow {
  std::string label;
  EngineParams params;
  GalleryCensus census;
  OutcomeCounts outcomes;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // exp1..exp4
  std::optional<std::int64_t> true_count;
  std::optional<double> gamma;  // only when all four counts exist and the mean is nonzero

  std::int64_t active(std::size_t i) const { return rows.at(i).census.active; }
};

// Runs the same frames through every grid configuration, in parallel.
AblationReport run_ablation(const std::vector<Frame>& frames, const EngineParams& base);
AblationReport run_ablation(const ScenarioScript& script, const EngineParams& base);

std::string ablation_csv(const AblationReport& report);
std::string ablation_text(const AblationReport& report);

}  // namespace facereid
