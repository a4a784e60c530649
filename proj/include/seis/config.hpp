#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seis/dispatch.hpp"
#include "seis/ga.hpp"
#include "seis/ppo.hpp"
#include "seis/seismic.hpp"

namespace seis {

struct ScenarioOptions {
  std::size_t n_sce = 1000;
  double w1 = 1.0;
  double w2 = 1.0;
  std::vector<double> periods{2.0, 10.0, 50.0, 100.0};
  std::size_t k = 10;
  bool exact_ens = false;
  bool residuals = true;
};

struct DispatchOptions {
  double gamma = 0.5;
  double speed_kmh = 40.0;
  std::vector<std::string> solvers{"exact", "ga"};
  ExactLimits exact;
  GaConfig ga;
  std::string policy_model;  // checkpoint path; required when "policy" is a solver
  std::size_t policy_samples = 16;
};

struct TrainingOptions {
  InstanceFamily family;
  PolicyConfig policy;
  PpoConfig ppo;
};

/// Every path is resolved against the directory of the config document.
struct RunConfig {
  std::string network;
  SeismicEvent event;
  ScenarioOptions scenarios;
  DispatchOptions dispatch;
  TrainingOptions training;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string output = "out";

  void validate() const;
};

/// Unknown keys and out-of-range values raise ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& document, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
/// Canonical form used for the manifest's configuration hash.
nlohmann::json run_config_to_json(const RunConfig& config);

}  // namespace seis
