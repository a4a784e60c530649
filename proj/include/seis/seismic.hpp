#pragma once

#include <map>
#include <string>
#include <vector>

#include "seis/grid.hpp"
#include "seis/rng.hpp"

namespace seis {

/// Log-linear ground motion model: ln Y = a + b1*M - b2*ln(max(R, r_floor)) + site_term + eps.
/// Defaults are placeholders, not a regional calibration.
struct GmpeCoefficients {
  double a = -3.512;
  double b1 = 0.904;
  double b2 = 1.328;
  std::map<std::string, double> site_terms{{"rock", 0.0}, {"soil", 0.2}};
  double r_floor_km = 1.0;
};

struct SeismicEvent {
  Point epicenter;
  double focal_depth_km = 10.0;
  double magnitude = 7.5;
  GmpeCoefficients gmpe;
  double sigma_eps = 0.45;

  void validate() const;
};

/// Per-component PGA in g, indexed like Network::components.
struct PgaField {
  std::vector<double> pga;
  double magnitude = 0.0;
};

/// Hypocentral distance in km.
double site_distance(const SeismicEvent& event, const Point& site);

double ground_motion_pga(const SeismicEvent& event, const Point& site, const std::string& site_class, double eps);

/// Standard normal CDF.
double normal_cdf(double x);

double failure_probability(double pga, const FragilityCurve& curve);

/// PGA at every component; one independent residual per component when rng is given, zero otherwise.
PgaField compute_pga_field(const Network& network, const SeismicEvent& event, Rng* rng = nullptr);

/// Failure indicators drawn against each component's fragility: failed iff U(0,1) < P[failure].
std::vector<bool> sample_damage(const Network& network, const PgaField& field, Rng& rng);

}  // namespace seis
