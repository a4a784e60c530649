#include "seis/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "seis/error.hpp"
#include "seis/simplex.hpp"

namespace seis {

ComponentStatus all_operational(const Network& network) { return ComponentStatus(network.components.size(), true); }

namespace {

// Operational flag per element; elements without a component never fail.
struct ElementStatus {
  std::vector<bool> line_ok, gen_ok, substation_ok;
};

ElementStatus element_status(const Network& net, const ComponentStatus& status) {
  if (status.size() != net.components.size())
    throw InternalError("component status covers " + std::to_string(status.size()) + " of " +
                        std::to_string(net.components.size()) + " components");
  ElementStatus es{std::vector<bool>(net.lines.size(), true), std::vector<bool>(net.generators.size(), true),
                   std::vector<bool>(net.buses.size(), true)};
  for (std::size_t d = 0; d < net.components.size(); ++d) {
    if (status[d]) continue;
    const auto& c = net.components[d];
    switch (c.kind) {
      case ComponentKind::line: es.line_ok[net.line_index(c.ref)] = false; break;
      case ComponentKind::generator: es.gen_ok[net.generator_index(c.ref)] = false; break;
      case ComponentKind::substation: es.substation_ok[net.bus_index(c.ref)] = false; break;
    }
  }
  return es;
}

}  // namespace

OperationalState energization_state(const Network& net, const ComponentStatus& status, std::size_t t) {
  const ElementStatus es = element_status(net, status);
  OperationalState state;
  state.t = t;
  state.component_status = status;
  state.bus_energized.assign(net.buses.size(), false);
  state.line_energized.assign(net.lines.size(), false);

  std::vector<std::size_t> frontier;
  auto seed = [&](std::size_t b) {
    if (!state.bus_energized[b]) {
      state.bus_energized[b] = true;
      frontier.push_back(b);
    }
  };
  for (std::size_t b = 0; b < net.buses.size(); ++b)
    if (net.buses[b].is_substation && es.substation_ok[b]) seed(b);
  for (std::size_t g = 0; g < net.generators.size(); ++g)
    if (es.gen_ok[g]) seed(net.bus_index(net.generators[g].bus));

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(net.buses.size());
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    if (!es.line_ok[l]) continue;
    const std::size_t a = net.bus_index(net.lines[l].from_bus), b = net.bus_index(net.lines[l].to_bus);
    adj[a].push_back({b, l});
    adj[b].push_back({a, l});
  }
  while (!frontier.empty()) {
    const std::size_t u = frontier.back();
    frontier.pop_back();
    for (auto [v, l] : adj[u]) seed(v);
  }
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const std::size_t a = net.bus_index(net.lines[l].from_bus), b = net.bus_index(net.lines[l].to_bus);
    state.line_energized[l] = es.line_ok[l] && state.bus_energized[a] && state.bus_energized[b];
  }
  return state;
}

FlowSolution solve_shedding_lp(const Network& net, const OperationalState& state, std::size_t t) {
  const ElementStatus es = element_status(net, state.component_status);
  const std::size_t nb = net.buses.size(), nl = net.lines.size(), ng = net.generators.size();
  const double limit = net.import_limit();

  // Column layout, energized elements only.
  constexpr long none = -1;
  std::vector<long> col_v(nb, none), col_shed(nb, none), col_imp_p(nb, none), col_imp_q(nb, none);
  std::vector<long> col_p(nl, none), col_q(nl, none), col_gp(ng, none), col_gq(ng, none);
  std::vector<double> lo, hi, cost;
  auto add_col = [&](double l, double h, double c) {
    lo.push_back(l);
    hi.push_back(h);
    cost.push_back(c);
    return static_cast<long>(lo.size() - 1);
  };

  std::vector<double> load_p(nb), load_q(nb), shed_ratio(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    load_p[b] = net.load_p(b, t);
    load_q[b] = net.load_q(b, t);
    // q_shed = p_shed * tan(phi); with an explicit reactive profile the hourly ratio Q/P is used.
    shed_ratio[b] = load_p[b] > 0.0 ? load_q[b] / load_p[b] : std::tan(net.buses[b].power_factor_angle);
  }

  for (std::size_t b = 0; b < nb; ++b) {
    if (!state.bus_energized[b]) continue;
    col_v[b] = add_col(net.buses[b].v_min, net.buses[b].v_max, 0.0);
    if (load_p[b] > 0.0) col_shed[b] = add_col(0.0, load_p[b], 1.0);
    if (net.buses[b].is_substation && es.substation_ok[b]) {
      col_imp_p[b] = add_col(0.0, limit, 0.0);
      col_imp_q[b] = add_col(-limit, limit, 0.0);
    }
  }
  for (std::size_t l = 0; l < nl; ++l) {
    if (!state.line_energized[l]) continue;
    const double s = net.lines[l].capacity_mva;
    col_p[l] = add_col(-s, s, 0.0);
    col_q[l] = add_col(-s, s, 0.0);
  }
  for (std::size_t g = 0; g < ng; ++g) {
    const auto& gen = net.generators[g];
    if (!es.gen_ok[g] || !state.bus_energized[net.bus_index(gen.bus)]) continue;
    // Lower bounds relaxed to include zero so a unit can be switched off.
    col_gp[g] = add_col(std::min(gen.p_min, 0.0), gen.p_max, 0.0);
    col_gq[g] = add_col(std::min(gen.q_min, 0.0), std::max(gen.q_max, 0.0), 0.0);
  }

  std::vector<std::size_t> energized_buses, energized_lines;
  for (std::size_t b = 0; b < nb; ++b)
    if (state.bus_energized[b]) energized_buses.push_back(b);
  for (std::size_t l = 0; l < nl; ++l)
    if (state.line_energized[l]) energized_lines.push_back(l);

  const auto rows = static_cast<Eigen::Index>(2 * energized_buses.size() + energized_lines.size());
  const auto cols = static_cast<Eigen::Index>(lo.size());
  lp::LinearProgram<double> prog;
  prog.A = Eigen::MatrixXd::Zero(rows, cols);
  prog.b = Eigen::VectorXd::Zero(rows);
  prog.c = Eigen::Map<Eigen::VectorXd>(cost.data(), cols);
  prog.lower = Eigen::Map<Eigen::VectorXd>(lo.data(), cols);
  prog.upper = Eigen::Map<Eigen::VectorXd>(hi.data(), cols);

  std::vector<Eigen::Index> row_p(nb, -1), row_q(nb, -1);
  Eigen::Index r = 0;
  for (auto b : energized_buses) {
    row_p[b] = r++;
    row_q[b] = r++;
  }
  // Generation + shed + inflow - outflow = load.
  for (auto b : energized_buses) {
    prog.b(row_p[b]) = load_p[b];
    prog.b(row_q[b]) = load_q[b];
    if (col_shed[b] != none) {
      prog.A(row_p[b], col_shed[b]) = 1.0;
      prog.A(row_q[b], col_shed[b]) = shed_ratio[b];
    }
    if (col_imp_p[b] != none) {
      prog.A(row_p[b], col_imp_p[b]) = 1.0;
      prog.A(row_q[b], col_imp_q[b]) = 1.0;
    }
  }
  for (std::size_t g = 0; g < ng; ++g) {
    if (col_gp[g] == none) continue;
    const std::size_t b = net.bus_index(net.generators[g].bus);
    prog.A(row_p[b], col_gp[g]) = 1.0;
    prog.A(row_q[b], col_gq[g]) = 1.0;
  }
  for (auto l : energized_lines) {
    const auto& line = net.lines[l];
    const std::size_t a = net.bus_index(line.from_bus), b = net.bus_index(line.to_bus);
    prog.A(row_p[a], col_p[l]) -= 1.0;
    prog.A(row_p[b], col_p[l]) += 1.0;
    prog.A(row_q[a], col_q[l]) -= 1.0;
    prog.A(row_q[b], col_q[l]) += 1.0;
    // v_from - v_to - rho p - chi q = 0
    prog.A(r, col_v[a]) = 1.0;
    prog.A(r, col_v[b]) = -1.0;
    prog.A(r, col_p[l]) = -line.resistance;
    prog.A(r, col_q[l]) = -line.reactance;
    ++r;
  }

  FlowSolution sol;
  sol.p_line.assign(nl, 0.0);
  sol.q_line.assign(nl, 0.0);
  sol.v.assign(nb, 0.0);
  sol.p_gen.assign(ng, 0.0);
  sol.q_gen.assign(ng, 0.0);
  sol.p_import.assign(nb, 0.0);
  sol.q_import.assign(nb, 0.0);
  sol.p_shed.assign(nb, 0.0);
  sol.q_shed.assign(nb, 0.0);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
  if (cols > 0) {
    const auto res = lp::solve(prog);
    if (res.status != lp::Status::optimal)
      throw InternalError("shedding LP not solved to optimality at t=" + std::to_string(t));
    x = res.x;
  }
  auto val = [&](long c) { return c == none ? 0.0 : x(c); };
  for (std::size_t b = 0; b < nb; ++b) {
    sol.v[b] = val(col_v[b]);
    sol.p_shed[b] = state.bus_energized[b] ? std::clamp(val(col_shed[b]), 0.0, load_p[b]) : load_p[b];
    sol.q_shed[b] = sol.p_shed[b] * shed_ratio[b];
    sol.p_import[b] = val(col_imp_p[b]);
    sol.q_import[b] = val(col_imp_q[b]);
    sol.total_shed_mw += sol.p_shed[b];
  }
  for (std::size_t l = 0; l < nl; ++l) {
    sol.p_line[l] = val(col_p[l]);
    sol.q_line[l] = val(col_q[l]);
  }
  for (std::size_t g = 0; g < ng; ++g) {
    sol.p_gen[g] = val(col_gp[g]);
    sol.q_gen[g] = val(col_gq[g]);
  }
  return sol;
}

FlowSolution solve_shedding_lp(const Network& net, const ComponentStatus& status, std::size_t t) {
  return solve_shedding_lp(net, energization_state(net, status, t), t);
}

RepairSchedule RepairSchedule::undamaged(const Network& network) {
  return RepairSchedule{std::vector<std::size_t>(network.components.size(), 0)};
}

ComponentStatus RepairSchedule::status_at(std::size_t t) const {
  ComponentStatus s(operational_from.size());
  for (std::size_t d = 0; d < s.size(); ++d) s[d] = operational_from[d] <= t;
  return s;
}

std::size_t RepairSchedule::completion_step() const {
  std::size_t last = 0;
  for (auto f : operational_from) last = std::max(last, f);
  return last;
}

RestorationTimeline ens_timeline(const Network& net, const RepairSchedule& schedule, std::size_t horizon,
                                 std::size_t start_hour) {
  if (schedule.operational_from.size() != net.components.size())
    throw InternalError("repair schedule does not cover every component");
  const std::size_t done = schedule.completion_step();
  if (done == RepairSchedule::never_restored)
    throw LimitError("repair schedule leaves a failed component unrepaired");
  if (horizon == 0) horizon = done + 1;
  if (horizon <= done) throw LimitError("timeline horizon ends before the last repair completes");

  RestorationTimeline tl;
  tl.timestep_hours = net.timestep_hours;
  const double total = static_cast<double>(net.components.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    TimelineStep step;
    const ComponentStatus status = schedule.status_at(t);
    step.state = energization_state(net, status, t);
    step.flow = solve_shedding_lp(net, step.state, start_hour + t);
    tl.ens_mwh += step.flow.total_shed_mw * net.timestep_hours;
    step.ens_cumulative_mwh = tl.ens_mwh;
    const auto up = std::count(status.begin(), status.end(), true);
    step.resilience = total > 0 ? static_cast<double>(up) / total : 1.0;
    tl.steps.push_back(std::move(step));
  }
  return tl;
}

std::vector<std::pair<std::size_t, double>> resilience_curve(const RestorationTimeline& timeline) {
  std::vector<std::pair<std::size_t, double>> curve;
  curve.reserve(timeline.steps.size());
  for (std::size_t t = 0; t < timeline.steps.size(); ++t) curve.emplace_back(t, timeline.steps[t].resilience);
  return curve;
}

std::string resilience_csv(const RestorationTimeline& timeline) {
  std::ostringstream out;
  out << "t,resilience,shed_mw,ens_cum_mwh\n" << std::setprecision(10);
  for (std::size_t t = 0; t < timeline.steps.size(); ++t) {
    const auto& s = timeline.steps[t];
    out << t << ',' << s.resilience << ',' << s.flow.total_shed_mw << ',' << s.ens_cumulative_mwh << '\n';
  }
  return out.str();
}

}  // namespace seis
