#include <doctest.h>

#include <cmath>

#include "seis/error.hpp"
#include "seis/seismic.hpp"

using namespace seis;

TEST_CASE("hypocentral distance") {
  SeismicEvent ev;
  ev.epicenter = {0, 0};
  ev.focal_depth_km = 0;
  CHECK(site_distance(ev, {3, 4}) == doctest::Approx(5.0));
  ev.focal_depth_km = 12;
  CHECK(site_distance(ev, {5, 0}) == doctest::Approx(13.0));
  ev.focal_depth_km = 10;
  CHECK(site_distance(ev, {0, 0}) == doctest::Approx(10.0));
}

TEST_CASE("ground motion closed form") {
  SeismicEvent ev;
  ev.gmpe.a = -1.0;
  ev.gmpe.b1 = 0.5;
  ev.gmpe.b2 = 1.0;
  ev.magnitude = 7.0;
  ev.focal_depth_km = 0.0;
  ev.epicenter = {0, 0};
  const Point site{std::exp(1.0), 0.0};
  CHECK(ground_motion_pga(ev, site, "rock", 0.0) == doctest::Approx(std::exp(1.5)).epsilon(1e-12));

  // ln 1 = 0: b2 has no effect at R = 1 km.
  const Point one{1.0, 0.0};
  const double base = ground_motion_pga(ev, one, "rock", 0.0);
  ev.gmpe.b2 = 2.0;
  CHECK(ground_motion_pga(ev, one, "rock", 0.0) == doctest::Approx(base).epsilon(1e-15));

  const double s = 0.45;
  CHECK(ground_motion_pga(ev, site, "rock", s) / ground_motion_pga(ev, site, "rock", 0.0) ==
        doctest::Approx(std::exp(s)).epsilon(1e-12));
  CHECK(ground_motion_pga(ev, site, "soil", 0.0) / ground_motion_pga(ev, site, "rock", 0.0) ==
        doctest::Approx(std::exp(0.2)).epsilon(1e-12));
  CHECK_THROWS_AS(ground_motion_pga(ev, site, "clay", 0.0), ConfigError);
}

TEST_CASE("distance floor keeps epicentral motion finite") {
  SeismicEvent ev;
  ev.focal_depth_km = 0.0;
  ev.epicenter = {0, 0};
  CHECK(ground_motion_pga(ev, {0, 0}, "rock", 0.0) == doctest::Approx(ground_motion_pga(ev, {1, 0}, "rock", 0.0)));
}

TEST_CASE("fragility values") {
  CHECK(failure_probability(0.3, {0.3, 0.7}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(failure_probability(0.4 * std::exp(0.6), {0.4, 0.6}) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  CHECK(failure_probability(1e-300, {0.3, 0.7}) < 1e-12);
  CHECK(failure_probability(0.0, {0.3, 0.7}) == 0.0);
  CHECK(normal_cdf(-40.0) >= 0.0);
  CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("damage sampling extremes and determinism") {
  const Network net = load_network_file(std::string(SEIS_DATA_DIR) + "/network13.json");
  PgaField none{std::vector<double>(net.components.size(), 0.0), 7.0};
  PgaField all{std::vector<double>(net.components.size(), 1e9), 7.0};
  Rng rng(1);
  for (bool f : sample_damage(net, none, rng)) CHECK_FALSE(f);
  for (bool f : sample_damage(net, all, rng)) CHECK(f);

  SeismicEvent ev;
  ev.epicenter = {5, 0};
  Rng a(9), b(9);
  const PgaField fa = compute_pga_field(net, ev, &a), fb = compute_pga_field(net, ev, &b);
  CHECK(fa.pga == fb.pga);
  CHECK(sample_damage(net, fa, a) == sample_damage(net, fb, b));
}

TEST_CASE("event validation") {
  SeismicEvent ev;
  ev.focal_depth_km = -1.0;
  CHECK_THROWS_AS(ev.validate(), ConfigError);
}
