#include "seis/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "seis/error.hpp"

namespace seis {

void DispatchInstance::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("dispatch: gamma must lie in [0, 1]");
  if (!(speed_kmh > 0.0)) throw ConfigError("dispatch: travel speed must be positive");
  if (failed.empty()) throw ConfigError("dispatch: no failed components");
  if (depots.empty()) throw ConfigError("dispatch: no depots");
  for (const auto& f : failed) {
    if (!(f.repair_hours > 0.0)) throw ConfigError("dispatch: repair duration of '" + f.id + "' must be positive");
    if (f.curtailed_mw < 0.0) throw ConfigError("dispatch: curtailed load of '" + f.id + "' is negative");
  }
  for (const auto& d : depots)
    if (d.crew_count < 1) throw ConfigError("dispatch: depot '" + d.id + "' has no crews");
}

Assignment cluster_to_depots(const std::vector<FailedComponent>& failed, const std::vector<Depot>& depots) {
  if (depots.empty()) throw ConfigError("cluster_to_depots: no depots");
  Assignment out(failed.size(), 0);
  for (std::size_t d = 0; d < failed.size(); ++d) {
    double best = distance(failed[d].coords, depots[0].coords);
    for (std::size_t s = 1; s < depots.size(); ++s) {
      const double dist = distance(failed[d].coords, depots[s].coords);
      if (dist < best) {
        best = dist;
        out[d] = s;
      }
    }
  }
  return out;
}

double travel_time(const Point& from, const Point& to, double speed_kmh) {
  if (!(speed_kmh > 0.0)) throw ConfigError("travel_time: speed must be positive");
  return distance(from, to) / speed_kmh;
}

std::string crew_id(const DispatchInstance& instance, const Route& route) {
  return instance.depots[route.depot].id + "/" + std::to_string(route.crew);
}

DispatchPlan schedule_plan(const DispatchInstance& instance, std::vector<Route> routes) {
  const std::size_t n = instance.failed.size();
  std::sort(routes.begin(), routes.end(),
            [](const Route& a, const Route& b) { return std::tie(a.depot, a.crew) < std::tie(b.depot, b.crew); });
  DispatchPlan plan;
  plan.assignment = cluster_to_depots(instance.failed, instance.depots);
  plan.timing.assign(n, JobTiming{});
  std::vector<int> visits(n, 0);
  std::set<std::pair<std::size_t, int>> crews_seen;

  for (std::size_t r = 0; r < routes.size(); ++r) {
    const Route& route = routes[r];
    if (route.depot >= instance.depots.size()) throw FeasibilityError("route references unknown depot");
    const Depot& depot = instance.depots[route.depot];
    if (route.crew < 0 || route.crew >= depot.crew_count)
      throw FeasibilityError("depot '" + depot.id + "' has no crew " + std::to_string(route.crew));
    if (!crews_seen.insert({route.depot, route.crew}).second)
      throw FeasibilityError("crew " + crew_id(instance, route) + " has two routes");
    Point here = depot.coords;
    double clock = 0.0;
    for (auto job : route.jobs) {
      if (job >= n) throw FeasibilityError("route references unknown component index");
      const auto& fc = instance.failed[job];
      if (++visits[job] > 1) throw FeasibilityError("component '" + fc.id + "' visited twice");
      if (plan.assignment[job] != route.depot)
        throw FeasibilityError("crew " + crew_id(instance, route) + " visits '" + fc.id + "' of depot '" +
                               instance.depots[plan.assignment[job]].id + "'");
      JobTiming& tm = plan.timing[job];
      clock += travel_time(here, fc.coords, instance.speed_kmh);
      tm.arrival = clock;
      tm.start = clock;
      clock += fc.repair_hours;
      tm.completion = clock;
      tm.route = r;
      tm.repair_step = static_cast<std::size_t>(std::ceil(clock / instance.timestep_hours - 1e-9));
      here = fc.coords;
    }
    plan.route_duration.push_back(clock);
    plan.route_return.push_back(clock + travel_time(here, depot.coords, instance.speed_kmh));
  }
  for (std::size_t d = 0; d < n; ++d)
    if (visits[d] == 0) throw FeasibilityError("component '" + instance.failed[d].id + "' is never visited");
  plan.routes = std::move(routes);
  return plan;
}

std::vector<std::string> check_subtour_free(const std::vector<Route>& routes) {
  std::vector<std::string> issues;
  for (std::size_t r = 0; r < routes.size(); ++r) {
    // Potentials by first visit; every arc d -> s needs phi_s >= phi_d + 1.
    std::vector<std::pair<std::size_t, long>> phi;
    auto potential = [&](std::size_t job, long pos) {
      for (auto& [j, p] : phi)
        if (j == job) return p;
      phi.push_back({job, pos});
      return pos;
    };
    long prev = -1;
    for (std::size_t i = 0; i < routes[r].jobs.size(); ++i) {
      const long cur = potential(routes[r].jobs[i], static_cast<long>(i) + 1);
      if (prev >= 0 && cur < prev + 1)
        issues.push_back("route " + std::to_string(r) + " revisits component index " +
                         std::to_string(routes[r].jobs[i]) + " (subtour)");
      prev = cur;
    }
  }
  return issues;
}

ObjectiveBreakdown objective(const DispatchPlan& plan, const DispatchInstance& instance) {
  if (plan.timing.size() != instance.failed.size()) throw ConfigError("objective: plan is not scheduled");
  ObjectiveBreakdown b;
  for (double dur : plan.route_duration) b.restoration_time = std::max(b.restoration_time, dur);
  for (std::size_t d = 0; d < instance.failed.size(); ++d)
    b.ens_surrogate += instance.failed[d].curtailed_mw * plan.timing[d].completion;
  b.value = instance.gamma * b.restoration_time + (1.0 - instance.gamma) * b.ens_surrogate;
  return b;
}

ObjectiveBreakdown evaluate_routes(const DispatchInstance& instance, const std::vector<Route>& routes) {
  return objective(schedule_plan(instance, routes), instance);
}

std::vector<double> attribute_curtailed_load(const Network& network, const std::vector<std::size_t>& components) {
  const std::size_t peak = network.peak_timestep();
  ComponentStatus status = all_operational(network);
  const double baseline = solve_shedding_lp(network, status, peak).total_shed_mw;
  std::vector<double> out;
  out.reserve(components.size());
  for (auto d : components) {
    status[d] = false;
    const double shed = solve_shedding_lp(network, status, peak).total_shed_mw;
    status[d] = true;
    const double cl = shed - baseline;
    out.push_back(cl > 1e-9 ? cl : 0.0);
  }
  return out;
}

DispatchInstance build_instance(const Network& network, const std::vector<bool>& failures,
                                const std::vector<double>& curtailed_by_component, double speed_kmh, double gamma) {
  DispatchInstance inst;
  inst.depots = network.depots;
  inst.speed_kmh = speed_kmh;
  inst.gamma = gamma;
  inst.timestep_hours = network.timestep_hours;
  for (std::size_t d = 0; d < network.components.size(); ++d) {
    if (!failures[d]) continue;
    const auto& c = network.components[d];
    inst.failed.push_back({c.id, network.component_location(c), c.repair_hours,
                           d < curtailed_by_component.size() ? curtailed_by_component[d] : 0.0});
  }
  return inst;
}

RepairSchedule plan_repair_schedule(const Network& network, const std::vector<bool>& failures,
                                    const DispatchPlan& plan) {
  RepairSchedule sched = RepairSchedule::undamaged(network);
  std::size_t j = 0;
  for (std::size_t d = 0; d < network.components.size(); ++d) {
    if (!failures[d]) continue;
    if (j >= plan.timing.size()) throw InternalError("plan covers fewer components than the scenario");
    sched.operational_from[d] = plan.timing[j++].repair_step;
  }
  return sched;
}

}  // namespace seis
