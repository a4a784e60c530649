#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "seis/grid.hpp"
#include "seis/powerflow.hpp"

namespace seis {

struct FailedComponent {
  std::string id;
  Point coords;
  double repair_hours = 1.0;  // t_d
  double curtailed_mw = 0.0;  // CL_d
};

struct DispatchInstance {
  std::vector<FailedComponent> failed;
  std::vector<Depot> depots;
  double speed_kmh = 40.0;
  double gamma = 0.5;
  double timestep_hours = 1.0;

  void validate() const;
};

/// Failed-component index -> depot index.
using Assignment = std::vector<std::size_t>;

/// Nearest depot per component; ties go to the lower depot index.
Assignment cluster_to_depots(const std::vector<FailedComponent>& failed, const std::vector<Depot>& depots);

double travel_time(const Point& from, const Point& to, double speed_kmh);

/// One crew's ordered visits; the return leg to the depot is implicit.
struct Route {
  std::size_t depot = 0;
  int crew = 0;  // crew index within the depot
  std::vector<std::size_t> jobs;
  bool operator==(const Route&) const = default;
};

std::string crew_id(const DispatchInstance& instance, const Route& route);

struct JobTiming {
  double arrival = 0.0;
  double start = 0.0;
  double completion = 0.0;  // also t_d^outage, the event is at t = 0
  std::size_t route = 0;
  std::size_t repair_step = 0;  // tau: ceil(completion / timestep)
};

struct DispatchPlan {
  std::vector<Route> routes;
  Assignment assignment;
  std::vector<JobTiming> timing;        // per failed component
  std::vector<double> route_duration;   // travel + repair, return leg excluded
  std::vector<double> route_return;     // time the crew is back at its depot

  /// k_{d,t}: component d operational at step t.
  bool operational(std::size_t d, std::size_t t) const { return timing[d].repair_step <= t; }
};

/// Accumulates travel and repair along each route. Throws FeasibilityError for a component
/// visited twice or never, a cross-cluster visit, or a crew index beyond the depot's crews.
DispatchPlan schedule_plan(const DispatchInstance& instance, std::vector<Route> routes);

/// MTZ potentials exist iff each route is a simple path; returns one message per violation.
std::vector<std::string> check_subtour_free(const std::vector<Route>& routes);

struct ObjectiveBreakdown {
  double restoration_time = 0.0;  // T, longest crew route
  double ens_surrogate = 0.0;     // sum CL_d * completion_d
  double value = 0.0;             // gamma T + (1 - gamma) ens
};

ObjectiveBreakdown objective(const DispatchPlan& plan, const DispatchInstance& instance);

/// Schedules and scores in one call.
ObjectiveBreakdown evaluate_routes(const DispatchInstance& instance, const std::vector<Route>& routes);

/// Single-failure attribution at the peak-load hour: CL_d is the shed added by failing d alone.
std::vector<double> attribute_curtailed_load(const Network& network, const std::vector<std::size_t>& components);

/// Dispatch instance for the failed components of a scenario.
DispatchInstance build_instance(const Network& network, const std::vector<bool>& failures,
                                const std::vector<double>& curtailed_by_component, double speed_kmh, double gamma);

/// Repair schedule in component space: failed components come back at their repair step.
RepairSchedule plan_repair_schedule(const Network& network, const std::vector<bool>& failures,
                                    const DispatchPlan& plan);

struct ExactLimits {
  std::size_t max_components = 9;  // per depot cluster
  std::size_t max_crews = 3;       // per depot
  double timeout_seconds = 60.0;
};

struct DispatchResult {
  DispatchPlan plan;
  ObjectiveBreakdown breakdown;
  bool optimal = true;
  std::size_t nodes = 0;
};

/// Branch and bound over ordered set partitions of each depot cluster among its crews.
/// Each depot yields a Pareto front of (T, ENS) so the max-coupled objective is combined exactly.
DispatchResult exact_dispatch(const DispatchInstance& instance, const ExactLimits& limits = {});

}  // namespace seis
