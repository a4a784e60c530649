#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "seis/dispatch.hpp"
#include "seis/error.hpp"

namespace seis {

namespace {

struct FrontPoint {
  double T = 0.0;
  double ens = 0.0;
  std::vector<std::vector<std::size_t>> crews;  // local job indices per crew
};

// Pareto search over one depot cluster. Crews are identical, so crews open in order,
// each non-empty, with strictly increasing first jobs.
class ClusterSearch {
 public:
  ClusterSearch(const DispatchInstance& inst, std::size_t depot, std::vector<std::size_t> jobs, std::size_t crews,
                std::chrono::steady_clock::time_point deadline)
      : inst_(inst), depot_(depot), jobs_(std::move(jobs)), crews_(crews), deadline_(deadline) {
    const std::size_t n = jobs_.size();
    const Point home = inst.depots[depot].coords;
    from_depot_.resize(n);
    between_.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      from_depot_[i] = travel_time(home, inst.failed[jobs_[i]].coords, inst.speed_kmh);
      for (std::size_t j = 0; j < n; ++j)
        between_[i][j] = travel_time(inst.failed[jobs_[i]].coords, inst.failed[jobs_[j]].coords, inst.speed_kmh);
    }
  }

  void run() {
    if (jobs_.empty()) {
      front_.push_back({0.0, 0.0, {}});
      return;
    }
    used_.assign(jobs_.size(), false);
    routes_.assign(1, {});
    dfs(0.0, 0.0, -1, 0.0);
  }

  const std::vector<FrontPoint>& front() const { return front_; }
  bool timed_out() const { return timed_out_; }
  std::size_t nodes() const { return nodes_; }

 private:
  double repair(std::size_t i) const { return inst_.failed[jobs_[i]].repair_hours; }
  double load(std::size_t i) const { return inst_.failed[jobs_[i]].curtailed_mw; }

  bool dominated(double T, double ens) const {
    for (const auto& p : front_)
      if (p.T <= T + 1e-12 && p.ens <= ens + 1e-12) return true;
    return false;
  }

  void record(double T, double ens) {
    if (dominated(T, ens)) return;
    std::erase_if(front_, [&](const FrontPoint& p) { return T <= p.T + 1e-12 && ens <= p.ens + 1e-12; });
    front_.push_back({T, ens, routes_});
  }

  // closed_T: longest finished crew; clock/pos: current crew; ens: accumulated CL * completion.
  void dfs(double closed_T, double ens, long pos, double clock) {
    if (timed_out_) return;
    if ((++nodes_ & 0xfff) == 0 && std::chrono::steady_clock::now() > deadline_) {
      timed_out_ = true;
      return;
    }
    const std::size_t n = jobs_.size();
    const bool can_open = routes_.size() < crews_ && !routes_.back().empty();
    double lb_T = std::max(closed_T, clock), lb_ens = ens;
    bool remaining = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (used_[j]) continue;
      remaining = true;
      double earliest = clock + (pos < 0 ? from_depot_[j] : between_[pos][j]);
      if (can_open) earliest = std::min(earliest, from_depot_[j]);
      earliest += repair(j);
      lb_T = std::max(lb_T, earliest);
      lb_ens += load(j) * earliest;
    }
    if (!remaining) {
      record(lb_T, ens);
      return;
    }
    if (dominated(lb_T, lb_ens)) return;

    for (std::size_t j = 0; j < n; ++j) {
      if (used_[j]) continue;
      if (routes_.back().empty() && routes_.size() > 1 && j <= routes_[routes_.size() - 2].front()) continue;
      const double done = clock + (pos < 0 ? from_depot_[j] : between_[pos][j]) + repair(j);
      used_[j] = true;
      routes_.back().push_back(j);
      dfs(closed_T, ens + load(j) * done, static_cast<long>(j), done);
      routes_.back().pop_back();
      used_[j] = false;
    }
    if (can_open) {
      routes_.emplace_back();
      dfs(std::max(closed_T, clock), ens, -1, 0.0);
      routes_.pop_back();
    }
  }

  const DispatchInstance& inst_;
  std::size_t depot_;
  std::vector<std::size_t> jobs_;
  std::size_t crews_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<double> from_depot_;
  std::vector<std::vector<double>> between_;
  std::vector<bool> used_;
  std::vector<std::vector<std::size_t>> routes_;
  std::vector<FrontPoint> front_;
  bool timed_out_ = false;
  std::size_t nodes_ = 0;
};

}  // namespace

DispatchResult exact_dispatch(const DispatchInstance& instance, const ExactLimits& limits) {
  instance.validate();
  const Assignment assignment = cluster_to_depots(instance.failed, instance.depots);
  const std::size_t nd = instance.depots.size();
  std::vector<std::vector<std::size_t>> clusters(nd);
  for (std::size_t d = 0; d < assignment.size(); ++d) clusters[assignment[d]].push_back(d);

  for (std::size_t s = 0; s < nd; ++s) {
    const std::size_t crews = std::min<std::size_t>(instance.depots[s].crew_count, clusters[s].size());
    if (clusters[s].size() > limits.max_components)
      throw LimitError("exact_dispatch: depot '" + instance.depots[s].id + "' cluster has " +
                       std::to_string(clusters[s].size()) + " components (limit " +
                       std::to_string(limits.max_components) + ")");
    if (crews > limits.max_crews)
      throw LimitError("exact_dispatch: depot '" + instance.depots[s].id + "' uses " + std::to_string(crews) +
                       " crews (limit " + std::to_string(limits.max_crews) + ")");
  }

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(limits.timeout_seconds));
  DispatchResult result;
  std::vector<std::vector<FrontPoint>> fronts(nd);
  for (std::size_t s = 0; s < nd; ++s) {
    const std::size_t crews = std::min<std::size_t>(instance.depots[s].crew_count, clusters[s].size());
    ClusterSearch search(instance, s, clusters[s], std::max<std::size_t>(crews, 1), deadline);
    search.run();
    result.nodes += search.nodes();
    if (search.timed_out()) result.optimal = false;
    fronts[s] = search.front();
    if (fronts[s].empty()) {
      // Timed out before any leaf: one crew visits the cluster in index order.
      FrontPoint fallback;
      fallback.crews.push_back({});
      for (std::size_t j = 0; j < clusters[s].size(); ++j) fallback.crews[0].push_back(j);
      fronts[s].push_back(fallback);
    }
  }

  // Combine fronts: for each threshold on T, every depot takes its cheapest point under it.
  std::vector<double> thresholds;
  for (const auto& f : fronts)
    for (const auto& p : f) thresholds.push_back(p.T);
  std::sort(thresholds.begin(), thresholds.end());
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_pick;
  for (double tau : thresholds) {
    std::vector<std::size_t> pick(nd);
    double T = 0.0, ens = 0.0;
    bool ok = true;
    for (std::size_t s = 0; s < nd && ok; ++s) {
      std::size_t arg = fronts[s].size();
      for (std::size_t i = 0; i < fronts[s].size(); ++i) {
        if (fronts[s][i].T > tau + 1e-12) continue;
        if (arg == fronts[s].size() || fronts[s][i].ens < fronts[s][arg].ens) arg = i;
      }
      if (arg == fronts[s].size()) {
        ok = false;
        break;
      }
      pick[s] = arg;
      T = std::max(T, fronts[s][arg].T);
      ens += fronts[s][arg].ens;
    }
    if (!ok) continue;
    const double value = instance.gamma * T + (1.0 - instance.gamma) * ens;
    if (value < best_value - 1e-12) {
      best_value = value;
      best_pick = pick;
    }
  }

  std::vector<Route> routes;
  for (std::size_t s = 0; s < nd; ++s) {
    const auto& point = fronts[s][best_pick[s]];
    for (std::size_t c = 0; c < point.crews.size(); ++c) {
      Route r{s, static_cast<int>(c), {}};
      for (auto local : point.crews[c]) r.jobs.push_back(clusters[s][local]);
      routes.push_back(std::move(r));
    }
  }
  result.plan = schedule_plan(instance, std::move(routes));
  result.breakdown = objective(result.plan, instance);
  return result;
}

}  // namespace seis
