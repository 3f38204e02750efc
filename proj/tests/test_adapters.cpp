#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diffnet/adapters.hpp"
#include "diffnet/errors.hpp"
#include "diffnet/rng.hpp"

using namespace diffnet;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const fs::path d = fs::temp_directory_path() / "diffnet_adapters_test";
  fs::create_directories(d);
  return d;
}

std::string write_text(const std::string& name, const std::string& text) {
  const fs::path p = tmp_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_CASE("series CSV survives a write/load round trip bit for bit") {
  const std::vector<std::vector<double>> series{{0.1, 1.0 / 3.0, 5.0e-17, -2.75},
                                                {2.0, 3.5, 4.0, 1e6}};
  const auto path = (tmp_dir() / "series.csv").string();
  write_series_csv(path, series, {"alpha", "beta"});

  std::vector<std::string> names;
  const auto back = load_series_csv(path, &names);
  REQUIRE(back.size() == 2);
  CHECK(names == std::vector<std::string>{"alpha", "beta"});
  for (size_t i = 0; i < 2; ++i) {
    REQUIRE(back[i].size() == series[i].size());
    for (size_t t = 0; t < series[i].size(); ++t) CHECK(back[i][t] == series[i][t]);
  }

  // Default header when no names given.
  write_series_csv(path, series);
  load_series_csv(path, &names);
  CHECK(names == std::vector<std::string>{"node0", "node1"});
}

TEST_CASE("series CSV rejects ragged and non-numeric input, naming the row") {
  const auto ragged = write_text("ragged.csv", "a,b\n1,2\n3\n");
  try {
    load_series_csv(ragged);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }

  const auto junk = write_text("junk.csv", "a,b\n1,2\n3,oops\n");
  try {
    load_series_csv(junk);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }

  CHECK_THROWS_AS(load_series_csv(write_text("empty.csv", "")), ParseError);
  CHECK_THROWS_AS(load_series_csv(write_text("header_only.csv", "a,b\n")), ParseError);

  // A missing file is a data error, not a parse error.
  try {
    load_series_csv((tmp_dir() / "no_such.csv").string());
    FAIL("expected DataError");
  } catch (const ParseError&) {
    FAIL("missing file must not be reported as a parse error");
  } catch (const DataError&) {
  }
}

TEST_CASE("station CSV accepts an optional header and checks shape") {
  const std::string body = "S1,45.0,8.0,1.0,2.0,3.0\nS2,45.5,8.25,4.0,5.0,6.0\n";
  const auto with = load_stations_csv(write_text("st_hdr.csv", "id,lat,lon,t1,t2,t3\n" + body));
  const auto without = load_stations_csv(write_text("st_raw.csv", body));
  for (const auto& stations : {with, without}) {
    REQUIRE(stations.size() == 2);
    CHECK(stations[0].id == "S1");
    CHECK(stations[1].id == "S2");
    CHECK(stations[0].lat_deg == 45.0);
    CHECK(stations[1].lon_deg == 8.25);
    CHECK(stations[0].series == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(stations[1].series == std::vector<double>{4.0, 5.0, 6.0});
  }

  // Numeric station ids still parse when a header is present.
  const auto numeric =
      load_stations_csv(write_text("st_num.csv", "id,lat,lon,t1\n7,45.0,8.0,1.0\n"));
  REQUIRE(numeric.size() == 1);
  CHECK(numeric[0].id == "7");

  CHECK_THROWS_AS(load_stations_csv(write_text("st_short.csv", "S1,45.0\n")), ParseError);
  CHECK_THROWS_AS(
      load_stations_csv(write_text("st_ragged.csv", "S1,45,8,1,2\nS2,46,8,1\n")), ParseError);
  CHECK_THROWS_AS(load_stations_csv(write_text("st_empty.csv", "")), ParseError);
  CHECK_THROWS_AS(load_stations_csv((tmp_dir() / "st_missing.csv").string()), DataError);
}

TEST_CASE("great-circle distance has the textbook values") {
  const double one_deg = std::numbers::pi * 6371.0 / 180.0;
  CHECK(great_circle_km(0, 0, 1, 0) == doctest::Approx(one_deg).epsilon(1e-12));
  CHECK(great_circle_km(0, 0, 0, 1) == doctest::Approx(one_deg).epsilon(1e-12));
  CHECK(great_circle_km(45, 10, 45, 10) == 0.0);
  CHECK(great_circle_km(0, 0, 0, 180) ==
        doctest::Approx(std::numbers::pi * 6371.0).epsilon(1e-12));
  // Symmetry.
  CHECK(great_circle_km(12.5, -30.0, -48.0, 77.0) ==
        doctest::Approx(great_circle_km(-48.0, 77.0, 12.5, -30.0)).epsilon(1e-12));
}

TEST_CASE("geographic midpoint averages unit vectors") {
  std::vector<GeoStation> st(3);
  st[0].lat_deg = 10.0;
  st[0].lon_deg = 20.0;
  st[1].lat_deg = -10.0;
  st[1].lon_deg = 20.0;
  st[2].lat_deg = 0.0;
  st[2].lon_deg = 180.0;

  const std::vector<int> pair{0, 1};
  const auto [lat, lon] = geographic_midpoint(st, pair);
  CHECK(lat == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(lon == doctest::Approx(20.0).epsilon(1e-9));

  const std::vector<int> solo{1};
  const auto [lat1, lon1] = geographic_midpoint(st, solo);
  CHECK(lat1 == doctest::Approx(-10.0).epsilon(1e-9));
  CHECK(lon1 == doctest::Approx(20.0).epsilon(1e-9));

  CHECK_THROWS_AS(geographic_midpoint(st, std::vector<int>{}), EstimationError);
  // Antipodal pair has no defined midpoint.
  std::vector<GeoStation> anti(2);
  anti[1].lon_deg = 180.0;
  CHECK_THROWS_AS(geographic_midpoint(anti, std::vector<int>{0, 1}), EstimationError);
  CHECK_THROWS_AS(geographic_midpoint(st, std::vector<int>{5}), DataError);
}

TEST_CASE("changepoint ordering builds strictly-earlier parent sets") {
  const std::vector<Time> cps{1, 2, 3};
  const auto pp = potential_parents_from_changepoints(cps);
  REQUIRE(pp.size() == 3);
  CHECK(pp[0].empty());
  CHECK(pp[1] == std::vector<Node>{0});
  CHECK(pp[2] == std::vector<Node>{0, 1});

  // Ties do not create links in either direction.
  const auto tied = potential_parents_from_changepoints(std::vector<Time>{5, 5});
  CHECK(tied[0].empty());
  CHECK(tied[1].empty());
}

TEST_CASE("physical feasibility gates seismic parent sets") {
  std::vector<GeoStation> st(2);
  st[1].lat_deg = 0.9;  // ~100 km apart on a meridian
  const double dist = great_circle_km(0, 0, 0.9, 0);
  const double v = 13.0;
  REQUIRE(dist / v > 5.0);
  REQUIRE(dist / v < 10.0);

  const auto reach = potential_parents_geo(st, std::vector<double>{0.0, 10.0}, v, 10.0);
  const auto tight = potential_parents_geo(st, std::vector<double>{0.0, 5.0}, v, 10.0);
  // The wave arrives in ~7.7 s: feasible for a 10 s lag, not for a 5 s one.
  CHECK(reach.potential_parents[1] == std::vector<Node>{0, reach.dummy_of(1)});
  CHECK(tight.potential_parents[1] == std::vector<Node>{tight.dummy_of(1)});
  CHECK(reach.potential_parents[0] == std::vector<Node>{reach.dummy_of(0)});

  // Dummy bookkeeping: one private source per station, flat distances.
  REQUIRE(reach.potential_parents.size() == 4);
  CHECK(reach.n_stations == 2);
  for (Node i = 0; i < 2; ++i) {
    const Node d = reach.dummy_of(i);
    CHECK(reach.potential_parents[d].empty());
    CHECK(reach.distance_km(i, d) == 10.0);
    CHECK(reach.distance_km(d, i) == 10.0);
    // A dummy never appears in another station's parent set.
    for (Node j = 0; j < 2; ++j) {
      if (j == i) continue;
      for (Node cand : reach.potential_parents[j]) CHECK(cand != d);
    }
  }
  CHECK(reach.distance_km(0, 1) == doctest::Approx(dist).epsilon(1e-12));
  CHECK(reach.dummy_time_seconds == doctest::Approx(0.0 - 10.0 / v).epsilon(1e-12));

  // Shifting every pick by a constant shifts only the dummy time.
  const auto shifted = potential_parents_geo(st, std::vector<double>{100.0, 110.0}, v, 10.0);
  CHECK(shifted.potential_parents == reach.potential_parents);
  CHECK(shifted.dummy_time_seconds ==
        doctest::Approx(reach.dummy_time_seconds + 100.0).epsilon(1e-12));

  // Faster propagation can only widen the feasible sets.
  Rng rng(63);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<GeoStation> cloud(5);
  std::vector<double> cps(5);
  for (int i = 0; i < 5; ++i) {
    cloud[i].lat_deg = u(rng);
    cloud[i].lon_deg = u(rng);
    cps[i] = 10.0 * std::abs(u(rng));
  }
  const auto slow = potential_parents_geo(cloud, cps, 5.0, 10.0);
  const auto fast = potential_parents_geo(cloud, cps, 50.0, 10.0);
  for (Node i = 0; i < 5; ++i)
    for (Node j : slow.potential_parents[i]) {
      const auto& wide = fast.potential_parents[i];
      CHECK(std::find(wide.begin(), wide.end(), j) != wide.end());
    }

  CHECK_THROWS_AS(potential_parents_geo(st, std::vector<double>{0.0}, v, 10.0), ConfigError);
  CHECK_THROWS_AS(potential_parents_geo(st, std::vector<double>{0.0, 1.0}, 0.0, 10.0),
                  ConfigError);
}

TEST_CASE("gamma prior fit matches hand moments of inverse distances") {
  Grid<double> d(3, 3, 0.0);
  auto set = [&](Node i, Node j, double v) { d(i, j) = d(j, i) = v; };
  set(0, 1, 1.0);
  set(0, 2, 0.5);
  set(1, 2, 1.0 / 3.0);  // inverse distances {1, 2, 3}: mean 2, sample var 1
  const auto [shape, scale] = fit_gamma_to_inverse_distances(d, 3);
  CHECK(shape == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(scale == doctest::Approx(0.5).epsilon(1e-9));

  // A single pair has no spread: fall back to shape 1 with the same mean.
  Grid<double> two(2, 2, 0.0);
  two(0, 1) = two(1, 0) = 2.0;
  const auto [s1, sc1] = fit_gamma_to_inverse_distances(two, 2);
  CHECK(s1 == 1.0);
  CHECK(sc1 == 0.5);

  Grid<double> bad(2, 2, 0.0);
  CHECK_THROWS_AS(fit_gamma_to_inverse_distances(bad, 2), DataError);
}

TEST_CASE("epicenter comes from the dummy-parented stations") {
  std::vector<GeoStation> st(2);
  st[0].lat_deg = 40.0;
  st[0].lon_deg = 15.0;
  st[1].lat_deg = 42.0;
  st[1].lon_deg = 15.0;

  InfectionState s = InfectionState::never_infected(4);
  s.parent = {2, 0, kNoParent, kNoParent};  // station 0 anchored by its dummy
  s.time = {3, 5, 1, 1};
  const auto [lat, lon] = epicenter_estimate(s, st);
  CHECK(lat == doctest::Approx(40.0).epsilon(1e-9));
  CHECK(lon == doctest::Approx(15.0).epsilon(1e-9));

  s.parent = {kNoParent, 0, kNoParent, kNoParent};
  CHECK_THROWS_AS(epicenter_estimate(s, st), EstimationError);
  CHECK_THROWS_AS(epicenter_estimate(InfectionState::never_infected(3), st), DataError);
}

TEST_CASE("arrival-network pipeline recovers planted picks end to end") {
  // Four stations around (0.3, 0); flat 0 before the wave, flat 5 after.
  const double lat0 = 0.3, lon0 = 0.0, v = 13.0, t0 = 10.0;
  std::vector<GeoStation> st(4);
  st[0] = {"A", 0.5, 0.0, {}};
  st[1] = {"B", -0.5, 0.0, {}};
  st[2] = {"C", 0.0, 0.5, {}};
  st[3] = {"D", 0.0, -0.5, {}};
  const Time t_len = 40;
  std::vector<Time> planted(4);
  for (int i = 0; i < 4; ++i) {
    const double dist = great_circle_km(lat0, lon0, st[i].lat_deg, st[i].lon_deg);
    planted[i] = static_cast<Time>(std::lround(t0 + dist / v));
    for (Time t = 1; t <= t_len; ++t) st[i].series.push_back(t <= planted[i] ? 0.0 : 5.0);
  }

  LocateConfig cfg;
  cfg.n_mcmc = 600;
  cfg.n_burn = 100;
  cfg.n_thin = 5;
  cfg.seed = 7;
  const auto res = locate_event(st, cfg);

  CHECK(res.changepoints == planted);
  CHECK(res.geo.n_stations == 4);
  REQUIRE(res.map_state.size() == 8);
  CHECK_FALSE(res.dummy_parented.empty());
  // Anchored stations straddle the source, so the midpoint stays nearby.
  CHECK(std::abs(res.epicenter_lat) < 1.0);
  CHECK(std::abs(res.epicenter_lon) < 1.0);
  // Every station got infected in the MAP state (the wave did arrive).
  for (Node i = 0; i < 4; ++i) CHECK(is_infected(res.map_state.time[i]));

  CHECK_THROWS_AS(locate_event({st[0]}, cfg), ConfigError);
}
