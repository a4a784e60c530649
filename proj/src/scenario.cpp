#include "seis/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "seis/error.hpp"
#include "seis/rng.hpp"

namespace seis {

std::size_t DamageScenario::failure_count() const {
  return static_cast<std::size_t>(std::count(failures.begin(), failures.end(), true));
}

double ScenarioSet::total_weight() const {
  double w = 0.0;
  for (const auto& s : scenarios) w += s.weight;
  return w;
}

std::size_t ScenarioSet::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < scenarios.size(); ++i)
    if (scenarios[i].id == id) return i;
  throw ConfigError("unknown scenario id '" + id + "'");
}

LossDistribution::LossDistribution(std::vector<double> losses, std::vector<double> weights) {
  if (losses.size() != weights.size()) throw InternalError("loss/weight length mismatch");
  std::map<double, double> merged;
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    merged[losses[i]] += weights[i];
    total += weights[i];
  }
  for (auto [l, w] : merged) {
    support_.push_back(l);
    mass_.push_back(total > 0.0 ? w / total : 0.0);
  }
}

LossDistribution LossDistribution::of(const ScenarioSet& set) {
  std::vector<double> l, w;
  for (const auto& s : set.scenarios) {
    l.push_back(s.loss);
    w.push_back(s.weight);
  }
  return LossDistribution(std::move(l), std::move(w));
}

double LossDistribution::cdf(double l) const {
  if (support_.empty()) return 0.0;
  if (l >= support_.back()) return 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < support_.size() && support_[i] <= l; ++i) acc += mass_[i];
  return std::min(acc, 1.0);
}

double LossDistribution::exceedance(double l) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i)
    if (support_[i] >= l) acc += mass_[i];
  return acc;
}

double system_loss(std::size_t failures, double ens_mwh, double w1, double w2) {
  if (w1 < 0.0 || w2 < 0.0) throw ConfigError("loss weights must be non-negative");
  return w1 * static_cast<double>(failures) + w2 * ens_mwh;
}

namespace {

std::string scenario_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05zu", i);
  return buf;
}

}  // namespace

ScenarioSet generate_scenarios(const Network& network, const SeismicEvent& event, std::size_t n_sce, double w1,
                               double w2, std::uint64_t seed, const EnsEstimator& ens, bool with_residuals,
                               bool keep_pga) {
  if (n_sce < 1) throw ConfigError("n_sce must be at least 1");
  event.validate();
  ScenarioSet set;
  set.magnitude = event.magnitude;
  set.seed = seed;
  set.generated = n_sce;
  set.w1 = w1;
  set.w2 = w2;
  for (const auto& c : network.components) set.component_ids.push_back(c.id);

  const PgaField median_field = compute_pga_field(network, event, nullptr);
  set.scenarios.reserve(n_sce);
  for (std::size_t s = 0; s < n_sce; ++s) {
    Rng rng = make_stream(seed, s);
    PgaField field = with_residuals ? compute_pga_field(network, event, &rng) : median_field;
    DamageScenario sc;
    sc.id = scenario_id(s);
    sc.failures = sample_damage(network, field, rng);
    sc.ens_mwh = ens ? ens(sc.failures) : 0.0;
    sc.loss = system_loss(sc.failure_count(), sc.ens_mwh, w1, w2);
    sc.weight = 1.0 / static_cast<double>(n_sce);
    if (keep_pga) sc.pga = field.pga;
    set.scenarios.push_back(std::move(sc));
  }
  return set;
}

double return_period_loss(const LossDistribution& dist, double return_period) {
  if (dist.empty()) throw ConfigError("return_period_loss: empty distribution");
  if (return_period < 1.0) throw ConfigError("return period must be at least 1");
  const double target = 1.0 / return_period;
  const auto& support = dist.support();
  const auto& mass = dist.mass();
  double exceed = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (exceed <= target + 1e-12) return support[i];
    exceed -= mass[i];
  }
  return support.back();
}

std::vector<std::string> select_representatives(const ScenarioSet& set, const std::vector<double>& return_periods) {
  std::vector<std::string> ids;
  if (set.scenarios.empty()) return ids;
  const LossDistribution dist = LossDistribution::of(set);
  for (double period : return_periods) {
    const double target = return_period_loss(dist, period);
    std::size_t best = 0;
    for (std::size_t i = 1; i < set.scenarios.size(); ++i) {
      const auto& c = set.scenarios[i];
      const auto& b = set.scenarios[best];
      const double dc = std::abs(c.loss - target), db = std::abs(b.loss - target);
      if (dc < db - 1e-12 || (std::abs(dc - db) <= 1e-12 && c.weight > b.weight + 1e-15)) best = i;
    }
    const std::string& id = set.scenarios[best].id;
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  return ids;
}

double wasserstein1(const LossDistribution& a, const LossDistribution& b) {
  // Integral of |F_a - F_b| over the merged support.
  std::vector<double> pts = a.support();
  pts.insert(pts.end(), b.support().begin(), b.support().end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  std::size_t ia = 0, ib = 0;
  double fa = 0.0, fb = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    while (ia < a.support().size() && a.support()[ia] <= pts[i]) fa += a.mass()[ia++];
    while (ib < b.support().size() && b.support()[ib] <= pts[i]) fb += b.mass()[ib++];
    total += std::abs(fa - fb) * (pts[i + 1] - pts[i]);
  }
  return total;
}

ReductionResult reduce_to(const ScenarioSet& set, const std::vector<std::size_t>& retained_in) {
  std::vector<std::size_t> retained = retained_in;
  std::sort(retained.begin(), retained.end());
  retained.erase(std::unique(retained.begin(), retained.end()), retained.end());
  if (retained.empty()) throw ConfigError("reduction must retain at least one scenario");
  const std::size_t n = set.scenarios.size();
  const double total = set.total_weight();

  std::vector<bool> kept(n, false);
  for (auto r : retained) kept[r] = true;
  std::vector<double> new_weight(n, 0.0);
  double distance = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = set.scenarios[i].weight / total;
    if (kept[i]) {
      new_weight[i] += w;
      continue;
    }
    std::size_t best = retained.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (auto r : retained) {
      const double d = std::abs(set.scenarios[i].loss - set.scenarios[r].loss);
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    new_weight[best] += w;
    distance += w * best_d;
  }

  ReductionResult out;
  out.reduced = set;
  out.reduced.scenarios.clear();
  for (auto r : retained) {
    DamageScenario s = set.scenarios[r];
    s.weight = new_weight[r];
    out.reduced.scenarios.push_back(std::move(s));
  }
  out.distance = distance;
  return out;
}

ReductionResult forward_reduce(const ScenarioSet& set, std::size_t k, const std::vector<std::string>& protected_ids) {
  const std::size_t n = set.scenarios.size();
  std::vector<std::size_t> retained;
  for (const auto& id : protected_ids) {
    const std::size_t idx = set.index_of(id);
    if (std::find(retained.begin(), retained.end(), idx) == retained.end()) retained.push_back(idx);
  }
  if (k > n || k < retained.size() || k == 0)
    throw ConfigError("forward_reduce: k=" + std::to_string(k) + " outside [" + std::to_string(retained.size()) +
                      ", " + std::to_string(n) + "]");

  const double total = set.total_weight();
  std::vector<double> w(n), loss(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = set.scenarios[i].weight / total;
    loss[i] = set.scenarios[i].loss;
  }
  std::vector<bool> kept(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  auto admit = [&](std::size_t c) {
    kept[c] = true;
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], std::abs(loss[i] - loss[c]));
  };
  for (auto r : retained) admit(r);

  while (retained.size() < k) {
    std::size_t best = n;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (kept[c]) continue;
      double cost = 0.0;
      for (std::size_t i = 0; i < n; ++i) cost += w[i] * std::min(nearest[i], std::abs(loss[i] - loss[c]));
      if (cost < best_cost - 1e-15) {
        best_cost = cost;
        best = c;
      }
    }
    retained.push_back(best);
    admit(best);
  }
  return reduce_to(set, retained);
}

}  // namespace seis
