#include "seis/seismic.hpp"

#include <cmath>

#include "seis/error.hpp"

namespace seis {

void SeismicEvent::validate() const {
  if (focal_depth_km < 0.0) throw ConfigError("event: focal depth must be non-negative");
  if (magnitude < 4.0 || magnitude > 10.0) throw ConfigError("event: magnitude must lie in [4, 10]");
  if (sigma_eps < 0.0) throw ConfigError("event: sigma_eps must be non-negative");
  if (gmpe.b2 < 0.0) throw ConfigError("event: gmpe b2 must be non-negative");
  if (gmpe.r_floor_km <= 0.0) throw ConfigError("event: gmpe r_floor must be positive");
}

double site_distance(const SeismicEvent& event, const Point& site) {
  const double epicentral = distance(event.epicenter, site);
  return std::sqrt(epicentral * epicentral + event.focal_depth_km * event.focal_depth_km);
}

double ground_motion_pga(const SeismicEvent& event, const Point& site, const std::string& site_class, double eps) {
  auto it = event.gmpe.site_terms.find(site_class);
  if (it == event.gmpe.site_terms.end()) throw ConfigError("unknown site class '" + site_class + "'");
  const auto& g = event.gmpe;
  const double r = std::max(site_distance(event, site), g.r_floor_km);
  return std::exp(g.a + g.b1 * event.magnitude - g.b2 * std::log(r) + it->second + eps);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

double failure_probability(double pga, const FragilityCurve& curve) {
  if (!(pga >= 0.0)) throw ConfigError("failure_probability: pga must be non-negative");
  if (pga == 0.0) return 0.0;
  return normal_cdf(std::log(pga / curve.median) / curve.beta);
}

PgaField compute_pga_field(const Network& network, const SeismicEvent& event, Rng* rng) {
  PgaField field;
  field.magnitude = event.magnitude;
  field.pga.reserve(network.components.size());
  for (const auto& c : network.components) {
    const double eps = rng != nullptr ? event.sigma_eps * standard_normal(*rng) : 0.0;
    field.pga.push_back(
        ground_motion_pga(event, network.component_location(c), network.component_site_class(c), eps));
  }
  return field;
}

std::vector<bool> sample_damage(const Network& network, const PgaField& field, Rng& rng) {
  if (field.pga.size() != network.components.size())
    throw ConfigError("sample_damage: PGA field covers " + std::to_string(field.pga.size()) + " of " +
                      std::to_string(network.components.size()) + " components");
  std::vector<bool> failed(network.components.size(), false);
  for (std::size_t d = 0; d < failed.size(); ++d) {
    const double p = failure_probability(field.pga[d], network.components[d].fragility);
    failed[d] = uniform01(rng) < p;
  }
  return failed;
}

}  // namespace seis
