#include "seis/grid.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "seis/error.hpp"

namespace seis {

using nlohmann::json;

std::string to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::line: return "line";
    case ComponentKind::generator: return "generator";
    case ComponentKind::substation: return "substation";
  }
  return "line";
}

ComponentKind component_kind_from_string(const std::string& token) {
  if (token == "line") return ComponentKind::line;
  if (token == "generator") return ComponentKind::generator;
  if (token == "substation") return ComponentKind::substation;
  throw ValidationError("unknown component kind '" + token + "'");
}

FragilityCurve default_fragility(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::generator: return {0.4, 0.6};
    case ComponentKind::substation: return {0.5, 0.5};
    case ComponentKind::line: return {0.3, 0.7};
  }
  return {0.3, 0.7};
}

double default_repair_hours(ComponentKind kind) { return kind == ComponentKind::line ? 1.0 : 2.0; }

bool Network::operator==(const Network& other) const {
  return buses == other.buses && lines == other.lines && generators == other.generators &&
         depots == other.depots && components == other.components && profiles == other.profiles &&
         timestep_hours == other.timestep_hours &&
         substation_import_limit_mva == other.substation_import_limit_mva;
}

namespace {

template <typename T>
std::map<std::string, std::size_t> build_lookup(const std::vector<T>& items, const char* section) {
  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!lookup.emplace(items[i].id, i).second)
      throw ValidationError(std::string("duplicate id '") + items[i].id + "' in " + section);
  }
  return lookup;
}

std::size_t find_or_throw(const std::map<std::string, std::size_t>& lookup, const std::string& id,
                          const char* what) {
  auto it = lookup.find(id);
  if (it == lookup.end()) throw ValidationError(std::string("unknown ") + what + " '" + id + "'");
  return it->second;
}

}  // namespace

void Network::index() {
  bus_lookup_ = build_lookup(buses, "buses");
  line_lookup_ = build_lookup(lines, "lines");
  generator_lookup_ = build_lookup(generators, "generators");
  component_lookup_ = build_lookup(components, "components");
  profile_lookup_ = build_lookup(profiles, "profiles");
  build_lookup(depots, "depots");
}

std::size_t Network::bus_index(const std::string& id) const { return find_or_throw(bus_lookup_, id, "bus"); }
std::size_t Network::line_index(const std::string& id) const { return find_or_throw(line_lookup_, id, "line"); }
std::size_t Network::generator_index(const std::string& id) const {
  return find_or_throw(generator_lookup_, id, "generator");
}
std::size_t Network::component_index(const std::string& id) const {
  return find_or_throw(component_lookup_, id, "component");
}

const LoadProfile* Network::profile(const std::string& id) const {
  auto it = profile_lookup_.find(id);
  return it == profile_lookup_.end() ? nullptr : &profiles[it->second];
}

Point Network::component_location(const Component& c) const {
  switch (c.kind) {
    case ComponentKind::line: {
      const Line& l = lines[line_index(c.ref)];
      const Point a = buses[bus_index(l.from_bus)].coords;
      const Point b = buses[bus_index(l.to_bus)].coords;
      return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
    }
    case ComponentKind::generator: return buses[bus_index(generators[generator_index(c.ref)].bus)].coords;
    case ComponentKind::substation: return buses[bus_index(c.ref)].coords;
  }
  return {};
}

std::string Network::component_site_class(const Component& c) const {
  switch (c.kind) {
    case ComponentKind::line: return buses[bus_index(lines[line_index(c.ref)].from_bus)].site_class;
    case ComponentKind::generator: return buses[bus_index(generators[generator_index(c.ref)].bus)].site_class;
    case ComponentKind::substation: return buses[bus_index(c.ref)].site_class;
  }
  return {};
}

std::size_t Network::horizon() const {
  std::size_t h = 1;
  for (const auto& p : profiles) h = std::max(h, p.p_mw.size());
  return h;
}

double Network::load_p(std::size_t bus, std::size_t t) const {
  const LoadProfile* prof = profile(buses[bus].load_profile);
  if (prof == nullptr || prof->p_mw.empty()) return 0.0;
  return prof->p_mw[t % prof->p_mw.size()];
}

double Network::load_q(std::size_t bus, std::size_t t) const {
  const LoadProfile* prof = profile(buses[bus].load_profile);
  if (prof == nullptr || prof->p_mw.empty()) return 0.0;
  if (!prof->q_mvar.empty()) return prof->q_mvar[t % prof->q_mvar.size()];
  return prof->p_mw[t % prof->p_mw.size()] * std::tan(buses[bus].power_factor_angle);
}

double Network::import_limit() const {
  if (substation_import_limit_mva) return *substation_import_limit_mva;
  double total = 0.0;
  for (std::size_t b = 0; b < buses.size(); ++b) {
    double peak = 0.0;
    for (std::size_t t = 0; t < horizon(); ++t) peak = std::max(peak, load_p(b, t));
    total += peak;
  }
  return total;
}

std::size_t Network::peak_timestep() const {
  std::size_t best = 0;
  double best_load = -1.0;
  for (std::size_t t = 0; t < horizon(); ++t) {
    double total = 0.0;
    for (std::size_t b = 0; b < buses.size(); ++b) total += load_p(b, t);
    if (total > best_load + 1e-12) {
      best_load = total;
      best = t;
    }
  }
  return best;
}

RadialityReport validate_radiality(const Network& network) {
  RadialityReport report;
  const std::size_t n = network.buses.size();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (neighbor, line)
  for (std::size_t li = 0; li < network.lines.size(); ++li) {
    const auto& l = network.lines[li];
    if (!network.has_bus(l.from_bus) || !network.has_bus(l.to_bus)) continue;
    const std::size_t a = network.bus_index(l.from_bus), b = network.bus_index(l.to_bus);
    adj[a].push_back({b, li});
    adj[b].push_back({a, li});
  }
  std::vector<bool> source(n, false);
  for (std::size_t b = 0; b < n; ++b) source[b] = network.buses[b].is_substation;
  for (const auto& g : network.generators)
    if (network.has_bus(g.bus)) source[network.bus_index(g.bus)] = true;

  // DFS per island; a non-tree edge closes a cycle whose lines are recovered from parent links.
  std::vector<int> parent_line(n, -1), parent_bus(n, -1), depth(n, -1);
  std::vector<bool> line_seen(network.lines.size(), false);
  for (std::size_t root = 0; root < n; ++root) {
    if (depth[root] >= 0) continue;
    std::vector<std::size_t> island;
    std::vector<std::size_t> stack{root};
    depth[root] = 0;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      island.push_back(u);
      for (auto [v, li] : adj[u]) {
        if (line_seen[li]) continue;
        line_seen[li] = true;
        if (depth[v] < 0) {
          depth[v] = depth[u] + 1;
          parent_bus[v] = static_cast<int>(u);
          parent_line[v] = static_cast<int>(li);
          stack.push_back(v);
        } else {
          std::vector<std::string> cycle{network.lines[li].id};
          std::size_t a = u, b = v;
          while (a != b) {
            if (depth[a] >= depth[b]) {
              cycle.push_back(network.lines[parent_line[a]].id);
              a = parent_bus[a];
            } else {
              cycle.push_back(network.lines[parent_line[b]].id);
              b = parent_bus[b];
            }
          }
          std::sort(cycle.begin(), cycle.end());
          report.cycles.push_back(std::move(cycle));
        }
      }
    }
    if (std::none_of(island.begin(), island.end(), [&](std::size_t b) { return source[b]; })) {
      std::vector<std::string> ids;
      for (auto b : island) ids.push_back(network.buses[b].id);
      std::sort(ids.begin(), ids.end());
      report.sourceless.push_back(std::move(ids));
    }
  }
  return report;
}

namespace {

class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  const json& section(const char* name, bool required = true) const {
    static const json empty = json::array();
    if (!doc_.contains(name)) {
      if (required) throw ValidationError(std::string("schema: missing section '") + name + "'");
      return empty;
    }
    if (!doc_.at(name).is_array())
      throw ValidationError(std::string("schema: '") + name + "' must be an array");
    return doc_.at(name);
  }

 private:
  const json& doc_;
};

std::string path_of(const std::string& section, std::size_t i, const std::string& field) {
  return section + "[" + std::to_string(i) + "]." + field;
}

double get_number(const json& obj, const std::string& section, std::size_t i, const char* field,
                  std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(field)) {
    if (fallback) return *fallback;
    throw ValidationError("schema: missing " + path_of(section, i, field));
  }
  if (!obj.at(field).is_number()) throw ValidationError("schema: " + path_of(section, i, field) + " must be a number");
  return obj.at(field).get<double>();
}

std::string get_string(const json& obj, const std::string& section, std::size_t i, const char* field,
                       std::optional<std::string> fallback = std::nullopt) {
  if (!obj.contains(field)) {
    if (fallback) return *fallback;
    throw ValidationError("schema: missing " + path_of(section, i, field));
  }
  if (!obj.at(field).is_string()) throw ValidationError("schema: " + path_of(section, i, field) + " must be a string");
  return obj.at(field).get<std::string>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

std::vector<double> number_array(const json& obj, const std::string& section, std::size_t i, const char* field) {
  std::vector<double> out;
  if (!obj.contains(field)) return out;
  if (!obj.at(field).is_array()) throw ValidationError("schema: " + path_of(section, i, field) + " must be an array");
  for (std::size_t k = 0; k < obj.at(field).size(); ++k) {
    const auto& v = obj.at(field)[k];
    if (!v.is_number())
      throw ValidationError("schema: " + path_of(section, i, field) + "[" + std::to_string(k) + "] must be a number");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

LoadProfile load_profile_csv(const std::string& id, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open profile csv '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool has_q = line == "hour,p_mw,q_mvar";
  if (!has_q && line != "hour,p_mw") throw ValidationError("profile csv '" + path + "': bad header '" + line + "'");
  LoadProfile prof{id, {}, {}};
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("profile csv '" + path + "' row " + std::to_string(row) + ": bad number");
      }
    }
    if (cells.size() != (has_q ? 3u : 2u))
      throw ValidationError("profile csv '" + path + "' row " + std::to_string(row) + ": wrong column count");
    prof.p_mw.push_back(cells[1]);
    if (has_q) prof.q_mvar.push_back(cells[2]);
  }
  return prof;
}

Network load_network(const json& document, const std::string& base_dir) {
  if (!document.is_object()) throw ValidationError("schema: network document must be an object");
  Reader reader(document);
  Network net;
  net.timestep_hours = document.value("timestep_hours", 1.0);
  require(net.timestep_hours > 0.0, "schema: timestep_hours must be positive");
  if (document.contains("substation_import_limit_mva"))
    net.substation_import_limit_mva = document.at("substation_import_limit_mva").get<double>();

  const auto& buses = reader.section("buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto& b = buses[i];
    Bus bus;
    bus.id = get_string(b, "buses", i, "id");
    bus.coords = {get_number(b, "buses", i, "x"), get_number(b, "buses", i, "y")};
    bus.v_min = get_number(b, "buses", i, "v_min", 0.95);
    bus.v_max = get_number(b, "buses", i, "v_max", 1.05);
    bus.power_factor_angle = get_number(b, "buses", i, "power_factor_angle", 0.0);
    bus.is_substation = b.value("is_substation", false);
    bus.load_profile = get_string(b, "buses", i, "load_profile", std::string{});
    bus.site_class = get_string(b, "buses", i, "site_class", std::string("rock"));
    require(bus.v_min > 0.0 && bus.v_min <= bus.v_max, "schema: " + path_of("buses", i, "v_min") + " must satisfy 0 < v_min <= v_max");
    require(bus.power_factor_angle >= 0.0 && bus.power_factor_angle < std::numbers::pi / 2,
            "schema: " + path_of("buses", i, "power_factor_angle") + " must lie in [0, pi/2)");
    net.buses.push_back(bus);
  }

  const auto& lines = reader.section("lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    Line line;
    line.id = get_string(l, "lines", i, "id");
    line.from_bus = get_string(l, "lines", i, "from");
    line.to_bus = get_string(l, "lines", i, "to");
    line.resistance = get_number(l, "lines", i, "resistance", 0.0);
    line.reactance = get_number(l, "lines", i, "reactance", 0.0);
    line.capacity_mva = get_number(l, "lines", i, "capacity_mva");
    line.length_km = get_number(l, "lines", i, "length_km", 0.0);
    require(line.from_bus != line.to_bus, "schema: " + path_of("lines", i, "to") + " equals from bus");
    require(line.resistance >= 0.0 && line.reactance >= 0.0, "schema: " + path_of("lines", i, "resistance") + " must be non-negative");
    require(line.capacity_mva > 0.0, "schema: " + path_of("lines", i, "capacity_mva") + " must be positive");
    net.lines.push_back(line);
  }

  const auto& gens = reader.section("generators", false);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto& g = gens[i];
    Generator gen;
    gen.id = get_string(g, "generators", i, "id");
    gen.bus = get_string(g, "generators", i, "bus");
    gen.p_min = get_number(g, "generators", i, "p_min", 0.0);
    gen.p_max = get_number(g, "generators", i, "p_max");
    gen.q_min = get_number(g, "generators", i, "q_min", 0.0);
    gen.q_max = get_number(g, "generators", i, "q_max", 0.0);
    require(gen.p_min >= 0.0 && gen.p_min <= gen.p_max, "schema: " + path_of("generators", i, "p_min") + " must satisfy 0 <= p_min <= p_max");
    require(gen.q_min <= gen.q_max, "schema: " + path_of("generators", i, "q_min") + " must not exceed q_max");
    net.generators.push_back(gen);
  }

  const auto& depots = reader.section("depots", false);
  for (std::size_t i = 0; i < depots.size(); ++i) {
    const auto& d = depots[i];
    Depot depot;
    depot.id = get_string(d, "depots", i, "id");
    depot.coords = {get_number(d, "depots", i, "x"), get_number(d, "depots", i, "y")};
    depot.crew_count = static_cast<int>(get_number(d, "depots", i, "crews", 1.0));
    require(depot.crew_count >= 1, "schema: " + path_of("depots", i, "crews") + " must be at least 1");
    net.depots.push_back(depot);
  }

  const auto& profiles = reader.section("profiles", false);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& p = profiles[i];
    const std::string id = get_string(p, "profiles", i, "id");
    LoadProfile prof;
    if (p.contains("csv")) {
      std::filesystem::path csv = get_string(p, "profiles", i, "csv");
      if (csv.is_relative()) csv = std::filesystem::path(base_dir) / csv;
      prof = load_profile_csv(id, csv.string());
    } else {
      prof.id = id;
      prof.p_mw = number_array(p, "profiles", i, "p");
      prof.q_mvar = number_array(p, "profiles", i, "q");
    }
    require(!prof.p_mw.empty(), "schema: " + path_of("profiles", i, "p") + " must be non-empty");
    require(prof.q_mvar.empty() || prof.q_mvar.size() == prof.p_mw.size(),
            "schema: " + path_of("profiles", i, "q") + " length differs from p");
    for (double v : prof.p_mw) require(v >= 0.0, "schema: " + path_of("profiles", i, "p") + " has a negative value");
    for (double v : prof.q_mvar) require(v >= 0.0, "schema: " + path_of("profiles", i, "q") + " has a negative value");
    net.profiles.push_back(std::move(prof));
  }

  const auto& comps = reader.section("components", false);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    Component comp;
    comp.id = get_string(c, "components", i, "id");
    comp.kind = component_kind_from_string(get_string(c, "components", i, "kind"));
    comp.ref = get_string(c, "components", i, "ref");
    comp.fragility = default_fragility(comp.kind);
    if (c.contains("fragility")) {
      const auto& f = c.at("fragility");
      comp.fragility.median = f.value("median", comp.fragility.median);
      comp.fragility.beta = f.value("beta", comp.fragility.beta);
    }
    require(comp.fragility.median > 0.0 && comp.fragility.beta > 0.0,
            "schema: " + path_of("components", i, "fragility") + " needs positive median and beta");
    comp.repair_hours = get_number(c, "components", i, "repair_hours", default_repair_hours(comp.kind));
    require(comp.repair_hours > 0.0, "schema: " + path_of("components", i, "repair_hours") + " must be positive");
    net.components.push_back(comp);
  }

  net.index();

  // Cross references.
  for (const auto& l : net.lines) {
    net.bus_index(l.from_bus);
    net.bus_index(l.to_bus);
  }
  for (const auto& g : net.generators) net.bus_index(g.bus);
  for (const auto& b : net.buses)
    if (!b.load_profile.empty() && net.profile(b.load_profile) == nullptr)
      throw ValidationError("unknown profile '" + b.load_profile + "' on bus '" + b.id + "'");
  for (const auto& c : net.components) {
    switch (c.kind) {
      case ComponentKind::line: net.line_index(c.ref); break;
      case ComponentKind::generator: net.generator_index(c.ref); break;
      case ComponentKind::substation:
        if (!net.buses[net.bus_index(c.ref)].is_substation)
          throw ValidationError("component '" + c.id + "' refers to non-substation bus '" + c.ref + "'");
        break;
    }
  }

  const RadialityReport report = validate_radiality(net);
  if (!report.cycles.empty()) {
    std::string ids;
    for (const auto& id : report.cycles.front()) ids += (ids.empty() ? "" : ",") + id;
    throw ValidationError("non-radial topology: cycle through lines " + ids);
  }
  if (!report.sourceless.empty())
    throw ValidationError("island without substation or generator containing bus '" + report.sourceless.front().front() + "'");
  return net;
}

Network load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("network file '" + path + "': " + e.what());
  }
  return load_network(doc, std::filesystem::path(path).parent_path().string());
}

json serialize_network(const Network& net) {
  json doc;
  doc["timestep_hours"] = net.timestep_hours;
  if (net.substation_import_limit_mva) doc["substation_import_limit_mva"] = *net.substation_import_limit_mva;
  doc["buses"] = json::array();
  for (const auto& b : net.buses) {
    json j{{"id", b.id}, {"x", b.coords.x}, {"y", b.coords.y}, {"v_min", b.v_min}, {"v_max", b.v_max},
           {"power_factor_angle", b.power_factor_angle}, {"is_substation", b.is_substation},
           {"site_class", b.site_class}};
    if (!b.load_profile.empty()) j["load_profile"] = b.load_profile;
    doc["buses"].push_back(j);
  }
  doc["lines"] = json::array();
  for (const auto& l : net.lines)
    doc["lines"].push_back({{"id", l.id}, {"from", l.from_bus}, {"to", l.to_bus}, {"resistance", l.resistance},
                            {"reactance", l.reactance}, {"capacity_mva", l.capacity_mva}, {"length_km", l.length_km}});
  doc["generators"] = json::array();
  for (const auto& g : net.generators)
    doc["generators"].push_back({{"id", g.id}, {"bus", g.bus}, {"p_min", g.p_min}, {"p_max", g.p_max},
                                 {"q_min", g.q_min}, {"q_max", g.q_max}});
  doc["depots"] = json::array();
  for (const auto& d : net.depots)
    doc["depots"].push_back({{"id", d.id}, {"x", d.coords.x}, {"y", d.coords.y}, {"crews", d.crew_count}});
  doc["components"] = json::array();
  for (const auto& c : net.components)
    doc["components"].push_back({{"id", c.id}, {"kind", to_string(c.kind)}, {"ref", c.ref},
                                 {"fragility", {{"median", c.fragility.median}, {"beta", c.fragility.beta}}},
                                 {"repair_hours", c.repair_hours}});
  doc["profiles"] = json::array();
  for (const auto& p : net.profiles) {
    json j{{"id", p.id}, {"p", p.p_mw}};
    if (!p.q_mvar.empty()) j["q"] = p.q_mvar;
    doc["profiles"].push_back(j);
  }
  return doc;
}

}  // namespace seis
