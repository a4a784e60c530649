#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "seis/grid.hpp"

namespace seis {

/// Component operational flags, indexed like Network::components.
using ComponentStatus = std::vector<bool>;

ComponentStatus all_operational(const Network& network);

struct OperationalState {
  std::size_t t = 0;
  std::vector<bool> bus_energized;   // u_{i,t}
  std::vector<bool> line_energized;  // u_{l,t}
  ComponentStatus component_status;  // k_{d,t}
};

/// A bus is energized iff operational lines connect it to an operational substation or
/// generator; a line is energized iff it is operational and both ends are energized.
OperationalState energization_state(const Network& network, const ComponentStatus& status, std::size_t t = 0);

struct FlowSolution {
  std::vector<double> p_line, q_line;      // MW / MVAr, positive from -> to
  std::vector<double> v;                   // per unit; 0 on de-energized buses
  std::vector<double> p_gen, q_gen;        // per generator
  std::vector<double> p_import, q_import;  // per bus, nonzero only at live substations
  std::vector<double> p_shed, q_shed;      // per bus
  double total_shed_mw = 0.0;
};

/// Minimum-shed linearized distribution flow with the energization variables fixed.
/// Throws InternalError if the model is infeasible (the all-shed point is always feasible).
FlowSolution solve_shedding_lp(const Network& network, const OperationalState& state, std::size_t t);

/// Loads at an arbitrary timestep index (wrapping the profile).
FlowSolution solve_shedding_lp(const Network& network, const ComponentStatus& status, std::size_t t);

/// Timestep from which each component is operational: 0 for undamaged components,
/// never_restored for failures without a repair.
struct RepairSchedule {
  static constexpr std::size_t never_restored = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> operational_from;

  static RepairSchedule undamaged(const Network& network);
  ComponentStatus status_at(std::size_t t) const;
  /// First timestep at which every component is operational.
  std::size_t completion_step() const;
};

struct TimelineStep {
  OperationalState state;
  FlowSolution flow;
  double ens_cumulative_mwh = 0.0;
  double resilience = 1.0;
};

struct RestorationTimeline {
  std::vector<TimelineStep> steps;
  double ens_mwh = 0.0;
  double timestep_hours = 1.0;
};

/// Steps through the schedule, solving the shedding LP per timestep. The horizon defaults to
/// one step past the last repair so the final state is fully restored.
RestorationTimeline ens_timeline(const Network& network, const RepairSchedule& schedule,
                                 std::size_t horizon = 0, std::size_t start_hour = 0);

/// (t, operational fraction) per timestep.
std::vector<std::pair<std::size_t, double>> resilience_curve(const RestorationTimeline& timeline);

/// `t,resilience,shed_mw,ens_cum_mwh`
std::string resilience_csv(const RestorationTimeline& timeline);

}  // namespace seis
