#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "seis/dispatch.hpp"
#include "seis/scenario.hpp"

namespace seis {

nlohmann::json read_json_file(const std::string& path);
/// Writes text verbatim; parent directories are created.
void write_text_file(const std::string& path, const std::string& content);
/// Two-space indented dump with a trailing newline; stable for identical input.
std::string to_document(const nlohmann::json& value);

/// Metadata block plus one record per scenario (id, failed component ids, loss, ens, weight).
nlohmann::json scenario_set_to_json(const ScenarioSet& set);
ScenarioSet scenario_set_from_json(const nlohmann::json& document);

nlohmann::json instance_to_json(const DispatchInstance& instance);
DispatchInstance instance_from_json(const nlohmann::json& document);

struct PlanDocument {
  std::string solver;
  std::string scenario;
  DispatchInstance instance;
  std::vector<Route> routes;
  ObjectiveBreakdown breakdown;
  bool optimal = false;  // proven optimal; only the exact solver sets it
};

/// Per-crew ordered visits with arrival and completion times, plus the objective breakdown.
nlohmann::json plan_to_json(const PlanDocument& plan);
/// Re-schedules the routes and checks the stored objective against the recomputed one.
PlanDocument plan_from_json(const nlohmann::json& document);

/// SHA-256 of a file's bytes as lowercase hex.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace seis
