#pragma once

#include <string>
#include <vector>

#include "diffnet/hyper.hpp"
#include "diffnet/types.hpp"

namespace diffnet {

// Series CSV: header row names the nodes, each following row is one time
// step. Rejects ragged rows, missing cells and non-numeric values with a
// ParseError naming the offending row.
std::vector<std::vector<double>> load_series_csv(const std::string& path,
                                                 std::vector<std::string>* names = nullptr);
void write_series_csv(const std::string& path, const std::vector<std::vector<double>>& series,
                      const std::vector<std::string>& names = {});

struct GeoStation {
  std::string id;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  std::vector<double> series;
};

// Station CSV: "id,lat,lon,v1,v2,..." per row (header optional but
// recommended: id,lat,lon,t1,t2,...).
std::vector<GeoStation> load_stations_csv(const std::string& path);

double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

// Unit-vector mean of station coordinates (geographic midpoint), in degrees.
std::pair<double, double> geographic_midpoint(const std::vector<GeoStation>& stations,
                                              std::span<const int> members);

// Epidemiological ordering: j is a potential parent of i iff its individual
// changepoint is strictly earlier.
std::vector<std::vector<Node>> potential_parents_from_changepoints(std::span<const Time> cps);

// Physical feasibility for seismic arrivals, changepoints in seconds:
// j in pi^i iff cp_j + D_ij / v < cp_i. Every station also gets a private
// dummy source node (index n_stations + i, empty parent set, distance
// dummy_radius_km) and all dummies share the infection time
// min_i(cp_i - dummy_radius_km / v).
struct GeoParents {
  std::vector<std::vector<Node>> potential_parents;  // size 2 * n_stations
  Grid<double> distance_km;                          // over the extended node set
  double dummy_time_seconds = 0.0;
  int n_stations = 0;

  Node dummy_of(Node station) const { return n_stations + station; }
};

GeoParents potential_parents_geo(const std::vector<GeoStation>& stations,
                                 std::span<const double> cp_seconds, double velocity_km_s,
                                 double dummy_radius_km);

// Method-of-moments gamma fit to the inverse pairwise distances; degenerate
// spread falls back to shape 1 with the same mean.
std::pair<double, double> fit_gamma_to_inverse_distances(const Grid<double>& distance_km,
                                                         int n_stations);

// Midpoint of the stations whose MAP parent is their own dummy. Throws
// EstimationError when no station is dummy-parented.
std::pair<double, double> epicenter_estimate(const InfectionState& map_state,
                                             const std::vector<GeoStation>& stations);

struct LocateConfig {
  double velocity_km_s = 13.0;
  double dummy_radius_km = 10.0;
  double dt_seconds = 1.0;  // sampling interval of the station series
  double pre_mu = 0.0, pre_sigma = 1.0;
  double post_mu = 5.0, post_sigma = 1.0;
  long n_mcmc = 20000, n_burn = 1000, n_thin = 10;
  uint64_t seed = 1;
};

struct LocateResult {
  std::vector<Time> changepoints;  // per station, sample index
  GeoParents geo;
  InfectionState map_state;        // over the extended node set
  double epicenter_lat = 0.0;
  double epicenter_lon = 0.0;
  std::vector<int> dummy_parented;  // station indices anchoring the estimate
};

// Full arrival-network pipeline: individual changepoints, physical parent
// sets, gamma prior from inverse distances, batch inference with the dummy
// times clamped, epicenter from the dummy-parented stations.
LocateResult locate_event(const std::vector<GeoStation>& stations, const LocateConfig& cfg);

}  // namespace diffnet
