#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seis/dispatch.hpp"
#include "seis/powerflow.hpp"

namespace seis {

/// One solver's result on one scenario. instance_key identifies the instance it was scored on.
struct SolverOutcome {
  std::string scenario;
  std::string solver;
  std::string instance_key;
  ObjectiveBreakdown breakdown;
  double seconds = 0.0;
  bool optimal = false;
  std::optional<double> ens_mwh;  // timeline ENS, when computed
};

struct ComparisonRow {
  SolverOutcome outcome;
  std::optional<double> gap;  // (value - reference) / reference
};

struct ComparisonReport {
  std::string reference;
  std::vector<ComparisonRow> rows;

  /// Columns scenario,solver,objective,restoration_time,ens_surrogate,ens_mwh,optimal,gap_pct[,seconds].
  std::string csv(bool include_seconds) const;
  /// Aligned table for terminals.
  std::string text(bool include_seconds) const;
};

/// Signed gaps against the reference solver wherever it ran. Throws ConfigError when outcomes of
/// one scenario were scored on different instances or a seconds value is negative.
ComparisonReport emit_comparison(const std::vector<SolverOutcome>& outcomes, const std::string& reference = "exact");

/// "+2.0%", "-2.3%", and "0.0%" for gaps that round to zero.
std::string format_gap(double gap);

struct ResiliencePlot {
  std::string csv;  // t,<solver>...
  std::string svg;
};

/// One series per solver. Timelines must share a horizon; throws ConfigError on empty input.
ResiliencePlot emit_resilience_plot(const std::vector<std::pair<std::string, RestorationTimeline>>& timelines,
                                    const std::string& title = "");

}  // namespace seis
