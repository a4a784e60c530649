#include <doctest.h>

#include <numeric>

#include "seis/error.hpp"
#include "seis/scenario.hpp"

using namespace seis;

namespace {

ScenarioSet set_of(const std::vector<double>& losses, const std::vector<double>& weights = {}) {
  ScenarioSet s;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    DamageScenario d;
    d.id = "s" + std::to_string(i);
    d.loss = losses[i];
    d.weight = weights.empty() ? 1.0 / losses.size() : weights[i];
    s.scenarios.push_back(d);
  }
  s.generated = losses.size();
  return s;
}

const EnsEstimator zero_ens = [](const std::vector<bool>&) { return 0.0; };

}  // namespace

TEST_CASE("system loss") {
  CHECK(system_loss(0, 0.0, 1.0, 1.0) == 0.0);
  CHECK(system_loss(7, 123.0, 1.0, 0.0) == 7.0);
  CHECK(system_loss(3, 6.0, 2.0, 0.5) == 9.0);
}

TEST_CASE("return period loss") {
  std::vector<double> l(100);
  std::iota(l.begin(), l.end(), 1.0);
  const auto dist = LossDistribution::of(set_of(l));
  CHECK(return_period_loss(dist, 100.0) == 100.0);
  CHECK(return_period_loss(dist, 1.0) == 1.0);
  CHECK(return_period_loss(LossDistribution::of(set_of({4, 4, 4})), 50.0) == 4.0);
}

TEST_CASE("representatives") {
  CHECK(select_representatives(set_of({5.0}), {2, 10, 50}) == std::vector<std::string>{"s0"});
  // P[L >= 30] = 1/3 <= 1/2, so L_2 = 30; L_1 is the minimum.
  CHECK(select_representatives(set_of({10, 20, 30}), {2}) == std::vector<std::string>{"s2"});
  CHECK(select_representatives(set_of({10, 20, 30}), {1, 2}) == std::vector<std::string>{"s0", "s2"});
  // Equal distance to L_T: the heavier scenario wins.
  CHECK(select_representatives(set_of({5, 5}, {0.2, 0.8}), {2}) == std::vector<std::string>{"s1"});
  CHECK(select_representatives(set_of({5, 5}, {0.8, 0.2}), {2}) == std::vector<std::string>{"s0"});
}

TEST_CASE("forward reduction") {
  const ScenarioSet s = set_of({1, 2, 3, 4});
  const ReductionResult same = forward_reduce(s, 4, {});
  CHECK(same.distance == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(same.reduced.scenarios.size() == 4);

  const ScenarioSet two = set_of({0, 10}, {0.3, 0.7});
  const ReductionResult one = forward_reduce(two, 1, {});
  REQUIRE(one.reduced.scenarios.size() == 1);
  CHECK(one.reduced.scenarios[0].id == "s1");
  CHECK(one.reduced.scenarios[0].weight == doctest::Approx(1.0));
  CHECK(one.distance == doctest::Approx(3.0));

  CHECK_THROWS_AS(forward_reduce(s, 0, {}), ConfigError);
  CHECK_THROWS_AS(forward_reduce(s, 1, {"s0", "s1"}), ConfigError);
}

TEST_CASE("wasserstein on the line") {
  const LossDistribution a({0.0}, {1.0}), b({3.0}, {1.0});
  CHECK(wasserstein1(a, b) == doctest::Approx(3.0));
  const LossDistribution c({0.0, 2.0}, {0.5, 0.5});
  CHECK(wasserstein1(c, a) == doctest::Approx(1.0));
}

TEST_CASE("generation determinism and limits") {
  const Network net = load_network_file(std::string(SEIS_DATA_DIR) + "/network13.json");
  SeismicEvent ev;
  ev.epicenter = {5, 0};
  ev.magnitude = 7.0;
  const ScenarioSet a = generate_scenarios(net, ev, 100, 1.0, 1.0, 7, zero_ens);
  const ScenarioSet b = generate_scenarios(net, ev, 100, 1.0, 1.0, 7, zero_ens);
  CHECK(a == b);
  CHECK(a.total_weight() == doctest::Approx(1.0).epsilon(1e-12));

  Network strong = net;
  for (auto& c : strong.components) c.fragility.median = 1e9;
  const ScenarioSet quiet = generate_scenarios(strong, ev, 1, 1.0, 1.0, 7, zero_ens);
  REQUIRE(quiet.scenarios.size() == 1);
  CHECK(quiet.scenarios[0].loss == 0.0);
  for (bool f : quiet.scenarios[0].failures) CHECK_FALSE(f);

  auto mean_failures = [&](double m) {
    ev.magnitude = m;
    const ScenarioSet s = generate_scenarios(net, ev, 2000, 1.0, 0.0, 3, zero_ens);
    double total = 0.0;
    for (const auto& sc : s.scenarios) total += sc.loss;
    return total / s.scenarios.size();
  };
  CHECK(mean_failures(8.5) > mean_failures(6.5));
}
