#include "seis/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "seis/error.hpp"

namespace seis {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path + "'");
}

std::string to_document(const json& value) { return value.dump(2) + "\n"; }

// ---------------------------------------------------------------------------------------------

json scenario_set_to_json(const ScenarioSet& set) {
  json scenarios = json::array();
  for (const auto& s : set.scenarios) {
    if (s.failures.size() != set.component_ids.size())
      throw InternalError("scenario '" + s.id + "' failure vector does not match the component list");
    std::vector<std::string> failed;
    for (std::size_t d = 0; d < s.failures.size(); ++d)
      if (s.failures[d]) failed.push_back(set.component_ids[d]);
    json rec = {{"id", s.id}, {"failures", failed}, {"loss", s.loss}, {"ens_mwh", s.ens_mwh}, {"weight", s.weight}};
    if (s.pga) rec["pga"] = *s.pga;
    scenarios.push_back(std::move(rec));
  }
  return {{"metadata",
           {{"magnitude", set.magnitude},
            {"seed", set.seed},
            {"generated", set.generated},
            {"w1", set.w1},
            {"w2", set.w2},
            {"components", set.component_ids}}},
          {"scenarios", scenarios}};
}

ScenarioSet scenario_set_from_json(const json& doc) {
  try {
    ScenarioSet set;
    const auto& meta = doc.at("metadata");
    set.magnitude = meta.at("magnitude").get<double>();
    set.seed = meta.at("seed").get<std::uint64_t>();
    set.generated = meta.at("generated").get<std::size_t>();
    set.w1 = meta.at("w1").get<double>();
    set.w2 = meta.at("w2").get<double>();
    set.component_ids = meta.at("components").get<std::vector<std::string>>();
    std::map<std::string, std::size_t> lookup;
    for (std::size_t d = 0; d < set.component_ids.size(); ++d) lookup[set.component_ids[d]] = d;
    const auto& list = doc.at("scenarios");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& rec = list[i];
      DamageScenario s;
      s.id = rec.at("id").get<std::string>();
      s.failures.assign(set.component_ids.size(), false);
      for (const auto& id : rec.at("failures").get<std::vector<std::string>>()) {
        const auto it = lookup.find(id);
        if (it == lookup.end())
          throw ValidationError("scenarios[" + std::to_string(i) + "].failures: unknown component '" + id + "'");
        s.failures[it->second] = true;
      }
      s.loss = rec.at("loss").get<double>();
      s.ens_mwh = rec.at("ens_mwh").get<double>();
      s.weight = rec.at("weight").get<double>();
      if (!(s.weight >= 0.0)) throw ValidationError("scenarios[" + std::to_string(i) + "].weight must be non-negative");
      if (rec.contains("pga")) s.pga = rec.at("pga").get<std::vector<double>>();
      set.scenarios.push_back(std::move(s));
    }
    return set;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario set: ") + e.what());
  }
}

// ---------------------------------------------------------------------------------------------

json instance_to_json(const DispatchInstance& inst) {
  json failed = json::array(), depots = json::array();
  for (const auto& f : inst.failed)
    failed.push_back({{"id", f.id},
                      {"x", f.coords.x},
                      {"y", f.coords.y},
                      {"repair_hours", f.repair_hours},
                      {"curtailed_mw", f.curtailed_mw}});
  for (const auto& d : inst.depots) depots.push_back({{"id", d.id}, {"x", d.coords.x}, {"y", d.coords.y}, {"crews", d.crew_count}});
  return {{"failed", failed},
          {"depots", depots},
          {"speed_kmh", inst.speed_kmh},
          {"gamma", inst.gamma},
          {"timestep_hours", inst.timestep_hours}};
}

DispatchInstance instance_from_json(const json& doc) {
  try {
    DispatchInstance inst;
    for (const auto& f : doc.at("failed"))
      inst.failed.push_back({f.at("id").get<std::string>(),
                             {f.at("x").get<double>(), f.at("y").get<double>()},
                             f.at("repair_hours").get<double>(),
                             f.at("curtailed_mw").get<double>()});
    for (const auto& d : doc.at("depots"))
      inst.depots.push_back({d.at("id").get<std::string>(), {d.at("x").get<double>(), d.at("y").get<double>()},
                             d.at("crews").get<int>()});
    inst.speed_kmh = doc.value("speed_kmh", inst.speed_kmh);
    inst.gamma = doc.value("gamma", inst.gamma);
    inst.timestep_hours = doc.value("timestep_hours", inst.timestep_hours);
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("dispatch instance: ") + e.what());
  }
}

json plan_to_json(const PlanDocument& doc) {
  const DispatchPlan plan = schedule_plan(doc.instance, doc.routes);
  json routes = json::array();
  for (std::size_t r = 0; r < plan.routes.size(); ++r) {
    const Route& route = plan.routes[r];
    json jobs = json::array();
    for (auto j : route.jobs) {
      const JobTiming& tm = plan.timing[j];
      jobs.push_back({{"component", doc.instance.failed[j].id},
                      {"arrival", tm.arrival},
                      {"start", tm.start},
                      {"completion", tm.completion},
                      {"repair_step", tm.repair_step}});
    }
    routes.push_back({{"crew", crew_id(doc.instance, route)},
                      {"depot", doc.instance.depots[route.depot].id},
                      {"index", route.crew},
                      {"jobs", jobs},
                      {"duration", plan.route_duration[r]},
                      {"return", plan.route_return[r]}});
  }
  return {{"solver", doc.solver},
          {"scenario", doc.scenario},
          {"optimal", doc.optimal},
          {"objective",
           {{"restoration_time", doc.breakdown.restoration_time},
            {"ens_surrogate", doc.breakdown.ens_surrogate},
            {"value", doc.breakdown.value}}},
          {"routes", routes},
          {"instance", instance_to_json(doc.instance)}};
}

PlanDocument plan_from_json(const json& doc) {
  try {
    PlanDocument out;
    out.solver = doc.at("solver").get<std::string>();
    out.scenario = doc.value("scenario", "");
    out.optimal = doc.value("optimal", false);
    out.instance = instance_from_json(doc.at("instance"));
    std::map<std::string, std::size_t> component, depot;
    for (std::size_t d = 0; d < out.instance.failed.size(); ++d) component[out.instance.failed[d].id] = d;
    for (std::size_t s = 0; s < out.instance.depots.size(); ++s) depot[out.instance.depots[s].id] = s;
    for (const auto& r : doc.at("routes")) {
      const auto dep = depot.find(r.at("depot").get<std::string>());
      if (dep == depot.end()) throw ValidationError("plan: route names an unknown depot");
      Route route{dep->second, r.at("index").get<int>(), {}};
      for (const auto& job : r.at("jobs")) {
        const auto it = component.find(job.at("component").get<std::string>());
        if (it == component.end()) throw ValidationError("plan: route names an unknown component");
        route.jobs.push_back(it->second);
      }
      out.routes.push_back(std::move(route));
    }
    out.breakdown = evaluate_routes(out.instance, out.routes);
    const double stored = doc.at("objective").at("value").get<double>();
    if (std::abs(stored - out.breakdown.value) > 1e-6 * std::max(1.0, std::abs(stored)))
      throw ValidationError("plan: stored objective " + std::to_string(stored) + " disagrees with the routes (" +
                            std::to_string(out.breakdown.value) + ")");
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plan: ") + e.what());
  }
}

// ---------------------------------------------------------------------------------------------

namespace {

std::string hex(const unsigned char* data, unsigned len) {
  std::ostringstream s;
  for (unsigned i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  return s.str();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw InternalError("sha256 failed");
  return hex(digest, len);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace seis
