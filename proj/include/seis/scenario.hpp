#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seis/grid.hpp"
#include "seis/seismic.hpp"

namespace seis {

struct DamageScenario {
  std::string id;
  std::vector<bool> failures;  // indexed like Network::components
  double loss = 0.0;
  double ens_mwh = 0.0;
  double weight = 0.0;
  std::optional<std::vector<double>> pga;

  std::size_t failure_count() const;
  bool operator==(const DamageScenario&) const = default;
};

struct ScenarioSet {
  std::vector<DamageScenario> scenarios;
  std::vector<std::string> component_ids;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  std::size_t generated = 0;  // N_sce before reduction
  double w1 = 1.0;
  double w2 = 1.0;

  double total_weight() const;
  std::size_t index_of(const std::string& id) const;
  bool operator==(const ScenarioSet&) const = default;
};

/// Weighted empirical loss distribution; support sorted ascending with ties merged.
class LossDistribution {
 public:
  LossDistribution(std::vector<double> losses, std::vector<double> weights);
  static LossDistribution of(const ScenarioSet& set);

  /// F_L(l) = P[L <= l]; right-continuous step function.
  double cdf(double l) const;
  /// P[L >= l].
  double exceedance(double l) const;
  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& mass() const { return mass_; }
  bool empty() const { return support_.empty(); }

 private:
  std::vector<double> support_;
  std::vector<double> mass_;
};

/// Energy-not-supplied estimate (MWh) for a failure vector.
using EnsEstimator = std::function<double(const std::vector<bool>& failures)>;

/// w1 * failures + w2 * ens.
double system_loss(std::size_t failures, double ens_mwh, double w1, double w2);

/// Monte Carlo damage scenarios, one RNG stream per scenario derived from the root seed.
/// Each scenario draws its own ground-motion residuals when with_residuals is set.
ScenarioSet generate_scenarios(const Network& network, const SeismicEvent& event, std::size_t n_sce, double w1,
                               double w2, std::uint64_t seed, const EnsEstimator& ens,
                               bool with_residuals = true, bool keep_pga = false);

/// Smallest supported loss with P[L >= l] <= 1/T; the maximum loss when none qualifies.
double return_period_loss(const LossDistribution& dist, double return_period);

/// Per period, the scenario closest to L_T (ties: larger weight, then earlier position). Deduplicated.
std::vector<std::string> select_representatives(const ScenarioSet& set, const std::vector<double>& return_periods);

/// 1-Wasserstein distance between two distributions on the real line.
double wasserstein1(const LossDistribution& a, const LossDistribution& b);

struct ReductionResult {
  ScenarioSet reduced;
  double distance = 0.0;  // W1(reduced, full)
};

/// Greedy forward selection from the protected ids; removed mass moves to the nearest retained loss.
ReductionResult forward_reduce(const ScenarioSet& set, std::size_t k, const std::vector<std::string>& protected_ids);

/// Retains the given positions and reassigns the remaining mass by nearest loss.
ReductionResult reduce_to(const ScenarioSet& set, const std::vector<std::size_t>& retained);

}  // namespace seis
