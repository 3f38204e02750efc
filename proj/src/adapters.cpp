#include "diffnet/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "diffnet/errors.hpp"
#include "diffnet/gibbs.hpp"
#include "diffnet/obsmodel.hpp"

namespace diffnet {

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim spaces and a trailing CR from Windows line endings
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, int row, int col) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                     ": not a number: '" + cell + "'");
  }
  if (used != cell.size())
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                     ": trailing junk in '" + cell + "'");
  return v;
}

bool is_numeric(const std::string& cell) {
  if (cell.empty()) return false;
  size_t used = 0;
  try {
    std::stod(cell, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == cell.size();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<std::vector<double>> load_series_csv(const std::string& path,
                                                 std::vector<std::string>* names) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw ParseError(path + ": need a header row and at least one data row");
  const auto header = split_csv_row(lines[0]);
  const size_t n = header.size();
  if (n == 0) throw ParseError(path + ": empty header");
  if (names) *names = header;
  std::vector<std::vector<double>> series(n);
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_row(lines[r]);
    if (cells.size() != n)
      throw ParseError("row " + std::to_string(r + 1) + ": expected " + std::to_string(n) +
                       " cells, got " + std::to_string(cells.size()));
    for (size_t c = 0; c < n; ++c) {
      if (cells[c].empty())
        throw ParseError("row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                         ": missing value");
      series[c].push_back(parse_cell(cells[c], static_cast<int>(r + 1), static_cast<int>(c + 1)));
    }
  }
  return series;
}

void write_series_csv(const std::string& path, const std::vector<std::vector<double>>& series,
                      const std::vector<std::string>& names) {
  if (series.empty()) throw DataError("write_series_csv: no series");
  const size_t t_len = series[0].size();
  for (const auto& s : series)
    if (s.size() != t_len) throw DataError("write_series_csv: ragged series");
  if (!names.empty() && names.size() != series.size())
    throw DataError("write_series_csv: name count mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  char buf[64];
  for (size_t i = 0; i < series.size(); ++i)
    out << (i ? "," : "") << (names.empty() ? "node" + std::to_string(i) : names[i]);
  out << "\n";
  for (size_t t = 0; t < t_len; ++t) {
    for (size_t i = 0; i < series.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", series[i][t]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<GeoStation> load_stations_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty file");
  size_t first = 0;
  {
    const auto cells = split_csv_row(lines[0]);
    if (cells.size() >= 2 && !is_numeric(cells[1])) first = 1;  // header row
  }
  if (first >= lines.size()) throw ParseError(path + ": no data rows");
  std::vector<GeoStation> stations;
  size_t t_len = 0;
  for (size_t r = first; r < lines.size(); ++r) {
    const auto cells = split_csv_row(lines[r]);
    if (cells.size() < 4)
      throw ParseError("row " + std::to_string(r + 1) + ": expected id,lat,lon and samples");
    GeoStation st;
    st.id = cells[0];
    st.lat_deg = parse_cell(cells[1], static_cast<int>(r + 1), 2);
    st.lon_deg = parse_cell(cells[2], static_cast<int>(r + 1), 3);
    for (size_t c = 3; c < cells.size(); ++c)
      st.series.push_back(parse_cell(cells[c], static_cast<int>(r + 1), static_cast<int>(c + 1)));
    if (r == first)
      t_len = st.series.size();
    else if (st.series.size() != t_len)
      throw ParseError("row " + std::to_string(r + 1) + ": ragged sample count");
    stations.push_back(std::move(st));
  }
  return stations;
}

double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double d2r = std::numbers::pi / 180.0;
  const double p1 = lat1_deg * d2r, p2 = lat2_deg * d2r;
  const double dp = (lat2_deg - lat1_deg) * d2r, dl = (lon2_deg - lon1_deg) * d2r;
  const double h = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::pair<double, double> geographic_midpoint(const std::vector<GeoStation>& stations,
                                              std::span<const int> members) {
  if (members.empty()) throw EstimationError("geographic_midpoint: no members");
  constexpr double d2r = std::numbers::pi / 180.0;
  double x = 0, y = 0, z = 0;
  for (int m : members) {
    if (m < 0 || m >= static_cast<int>(stations.size()))
      throw DataError("geographic_midpoint: member out of range");
    const double lat = stations[m].lat_deg * d2r, lon = stations[m].lon_deg * d2r;
    x += std::cos(lat) * std::cos(lon);
    y += std::cos(lat) * std::sin(lon);
    z += std::sin(lat);
  }
  const double norm = std::sqrt(x * x + y * y + z * z);
  if (norm < 1e-12) throw EstimationError("geographic_midpoint: antipodal degenerate set");
  return {std::atan2(z, std::hypot(x, y)) / d2r, std::atan2(y, x) / d2r};
}

std::vector<std::vector<Node>> potential_parents_from_changepoints(std::span<const Time> cps) {
  const int n = static_cast<int>(cps.size());
  std::vector<std::vector<Node>> pi(n);
  for (Node i = 0; i < n; ++i)
    for (Node j = 0; j < n; ++j)
      if (j != i && cps[j] < cps[i]) pi[i].push_back(j);
  return pi;
}

GeoParents potential_parents_geo(const std::vector<GeoStation>& stations,
                                 std::span<const double> cp_seconds, double velocity_km_s,
                                 double dummy_radius_km) {
  const int n = static_cast<int>(stations.size());
  if (n < 1) throw ConfigError("potential_parents_geo: no stations");
  if (cp_seconds.size() != static_cast<size_t>(n))
    throw ConfigError("potential_parents_geo: changepoint count mismatch");
  if (!(velocity_km_s > 0.0)) throw ConfigError("potential_parents_geo: velocity must be > 0");
  if (dummy_radius_km < 0.0) throw ConfigError("potential_parents_geo: negative dummy radius");
  GeoParents g;
  g.n_stations = n;
  g.potential_parents.resize(2 * n);
  g.distance_km = Grid<double>(2 * n, 2 * n, 0.0);
  for (Node i = 0; i < n; ++i) {
    for (Node j = 0; j < n; ++j) {
      if (j == i) continue;
      g.distance_km(i, j) = great_circle_km(stations[i].lat_deg, stations[i].lon_deg,
                                            stations[j].lat_deg, stations[j].lon_deg);
      if (cp_seconds[j] + g.distance_km(i, j) / velocity_km_s < cp_seconds[i])
        g.potential_parents[i].push_back(j);
    }
    g.distance_km(i, g.dummy_of(i)) = dummy_radius_km;
    g.distance_km(g.dummy_of(i), i) = dummy_radius_km;
    g.potential_parents[i].push_back(g.dummy_of(i));
  }
  double earliest = cp_seconds[0] - dummy_radius_km / velocity_km_s;
  for (Node i = 1; i < n; ++i)
    earliest = std::min(earliest, cp_seconds[i] - dummy_radius_km / velocity_km_s);
  g.dummy_time_seconds = earliest;
  return g;
}

std::pair<double, double> fit_gamma_to_inverse_distances(const Grid<double>& distance_km,
                                                         int n_stations) {
  std::vector<double> inv;
  for (Node i = 0; i < n_stations; ++i) {
    for (Node j = i + 1; j < n_stations; ++j) {
      const double d = distance_km(i, j);
      if (!(d > 0.0)) throw DataError("fit_gamma_to_inverse_distances: coincident stations");
      inv.push_back(1.0 / d);
    }
  }
  if (inv.empty()) throw DataError("fit_gamma_to_inverse_distances: need at least two stations");
  double mean = 0.0;
  for (double v : inv) mean += v;
  mean /= static_cast<double>(inv.size());
  double var = 0.0;
  for (double v : inv) var += (v - mean) * (v - mean);
  var = inv.size() > 1 ? var / static_cast<double>(inv.size() - 1) : 0.0;
  if (var <= 1e-300 * mean * mean || inv.size() == 1) return {1.0, mean};  // degenerate spread
  return {mean * mean / var, var / mean};
}

std::pair<double, double> epicenter_estimate(const InfectionState& map_state,
                                             const std::vector<GeoStation>& stations) {
  const int n = static_cast<int>(stations.size());
  if (map_state.size() != 2 * n) throw DataError("epicenter_estimate: state size mismatch");
  std::vector<int> members;
  for (Node i = 0; i < n; ++i)
    if (map_state.parent[i] == n + i) members.push_back(i);
  if (members.empty()) throw EstimationError("epicenter_estimate: no dummy-parented station");
  return geographic_midpoint(stations, members);
}

LocateResult locate_event(const std::vector<GeoStation>& stations, const LocateConfig& cfg) {
  const int n = static_cast<int>(stations.size());
  if (n < 2) throw ConfigError("locate_event: need at least 2 stations");
  if (!(cfg.dt_seconds > 0.0)) throw ConfigError("locate_event: dt must be > 0");
  const Time horizon = static_cast<Time>(stations[0].series.size());
  for (const auto& st : stations)
    if (static_cast<Time>(st.series.size()) != horizon)
      throw DataError("locate_event: ragged station series");
  if (horizon < 2) throw DataError("locate_event: series too short");

  LocateResult r;
  // individual arrival picks: per-station ML changepoint over the full series
  const ObservationModel station_model(
      GaussianObs{cfg.pre_mu, cfg.pre_sigma, cfg.post_mu, cfg.post_sigma});
  std::vector<double> cp_seconds(n);
  r.changepoints.resize(n);
  for (Node i = 0; i < n; ++i) {
    const SeriesStats stats = SeriesStats::from_series(stations[i].series);
    r.changepoints[i] = station_model.ml_changepoint(stats, 1, horizon);
    cp_seconds[i] = static_cast<double>(r.changepoints[i]) * cfg.dt_seconds;
  }

  r.geo = potential_parents_geo(stations, cp_seconds, cfg.velocity_km_s, cfg.dummy_radius_km);
  const auto [kappa, theta] = fit_gamma_to_inverse_distances(r.geo.distance_km, n);

  // extended problem: stations plus one flat-data dummy source per station
  ModelHyperparams hyper =
      ModelHyperparams::uniform(r.geo.potential_parents, kappa, theta, 0.5);
  hyper.min_delay = Grid<int>(2 * n, 2 * n, 1);
  for (Node i = 0; i < 2 * n; ++i)
    for (Node j : hyper.potential_parents[i])
      hyper.min_delay(i, j) = std::max(
          1, static_cast<int>(std::ceil(r.geo.distance_km(i, j) /
                                        (cfg.velocity_km_s * cfg.dt_seconds))));

  ObservationSet data;
  data.series.reserve(2 * n);
  ObservationModelSet obs;
  obs.reserve(2 * n);
  for (Node i = 0; i < n; ++i) {
    data.series.push_back(stations[i].series);
    obs.emplace_back(GaussianObs{cfg.pre_mu, cfg.pre_sigma, cfg.post_mu, cfg.post_sigma});
  }
  for (Node i = 0; i < n; ++i) {
    data.series.emplace_back(horizon, 0.0);  // flat series: no data preference
    obs.emplace_back(GaussianObs{0.0, 1.0, 0.0, 1.0});
  }
  data.blocks = make_blocks(horizon, 1);

  const Time dummy_t = std::max<Time>(
      1, static_cast<Time>(std::floor(r.geo.dummy_time_seconds / cfg.dt_seconds)));
  ClampMap clamps;
  for (Node i = 0; i < n; ++i) clamps[r.geo.dummy_of(i)] = dummy_t;

  McmcConfig mcmc;
  mcmc.n_mcmc = cfg.n_mcmc;
  mcmc.n_burn = cfg.n_burn;
  mcmc.n_thin = cfg.n_thin;
  mcmc.seed = cfg.seed;
  const ParticleSet particles = run_batch_gibbs(data, hyper, obs, mcmc, clamps);
  r.map_state = map_estimate(particles, MapMode::kJoint);

  for (Node i = 0; i < n; ++i)
    if (r.map_state.parent[i] == r.geo.dummy_of(i)) r.dummy_parented.push_back(i);
  std::tie(r.epicenter_lat, r.epicenter_lon) = epicenter_estimate(r.map_state, stations);
  return r;
}

}  // namespace diffnet
