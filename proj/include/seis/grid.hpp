#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace seis {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Bus {
  std::string id;
  Point coords;
  double v_min = 0.95;
  double v_max = 1.05;
  double power_factor_angle = 0.0;  // radians
  bool is_substation = false;
  std::string load_profile;         // empty: no load
  std::string site_class = "rock";
  bool operator==(const Bus&) const = default;
};

struct Line {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double resistance = 0.0;
  double reactance = 0.0;
  double capacity_mva = 1.0;
  double length_km = 0.0;
  bool operator==(const Line&) const = default;
};

struct Generator {
  std::string id;
  std::string bus;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  bool operator==(const Generator&) const = default;
};

struct LoadProfile {
  std::string id;
  std::vector<double> p_mw;
  std::vector<double> q_mvar;  // empty: derived from the owning bus power factor
  bool operator==(const LoadProfile&) const = default;
};

struct Depot {
  std::string id;
  Point coords;
  int crew_count = 1;
  bool operator==(const Depot&) const = default;
};

/// Lognormal fragility: P[failure | pga] = Phi(ln(pga / median) / beta).
struct FragilityCurve {
  double median = 0.3;  // g
  double beta = 0.7;
  bool operator==(const FragilityCurve&) const = default;
};

enum class ComponentKind { line, generator, substation };

std::string to_string(ComponentKind kind);
ComponentKind component_kind_from_string(const std::string& token);

/// Class-level fragility defaults for distribution equipment.
FragilityCurve default_fragility(ComponentKind kind);
/// Lines repair in one hour, generators and substations in two.
double default_repair_hours(ComponentKind kind);

struct Component {
  std::string id;
  ComponentKind kind = ComponentKind::line;
  std::string ref;
  FragilityCurve fragility;
  double repair_hours = 1.0;
  bool operator==(const Component&) const = default;
};

/// Immutable after load_network(); safe to share read-only between threads.
class Network {
 public:
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Depot> depots;
  std::vector<Component> components;
  std::vector<LoadProfile> profiles;
  double timestep_hours = 1.0;
  std::optional<double> substation_import_limit_mva;

  bool operator==(const Network& other) const;

  /// Rebuilds the id lookup tables; called by load_network().
  void index();

  std::size_t bus_index(const std::string& id) const;
  std::size_t line_index(const std::string& id) const;
  std::size_t generator_index(const std::string& id) const;
  std::size_t component_index(const std::string& id) const;
  const LoadProfile* profile(const std::string& id) const;
  bool has_bus(const std::string& id) const { return bus_lookup_.contains(id); }

  /// Planar location used for ground motion and for crew travel.
  Point component_location(const Component& c) const;
  std::string component_site_class(const Component& c) const;

  std::size_t horizon() const;  // longest profile length
  double load_p(std::size_t bus, std::size_t t) const;
  double load_q(std::size_t bus, std::size_t t) const;
  /// Substation import bound; defaults to the sum of per-bus peak loads.
  double import_limit() const;
  /// Timestep with the largest total active load.
  std::size_t peak_timestep() const;

 private:
  std::map<std::string, std::size_t> bus_lookup_;
  std::map<std::string, std::size_t> line_lookup_;
  std::map<std::string, std::size_t> generator_lookup_;
  std::map<std::string, std::size_t> component_lookup_;
  std::map<std::string, std::size_t> profile_lookup_;
};

struct RadialityReport {
  std::vector<std::vector<std::string>> cycles;       // line ids of each detected cycle
  std::vector<std::vector<std::string>> sourceless;   // bus ids of each island with no source
  bool empty() const { return cycles.empty() && sourceless.empty(); }
};

RadialityReport validate_radiality(const Network& network);

/// Parses and cross-checks a network document. Throws ValidationError.
Network load_network(const nlohmann::json& document, const std::string& base_dir = ".");
Network load_network_file(const std::string& path);
nlohmann::json serialize_network(const Network& network);

/// CSV with header `hour,p_mw[,q_mvar]`.
LoadProfile load_profile_csv(const std::string& id, const std::string& path);

}  // namespace seis
