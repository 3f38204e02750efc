#include "diffnet/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "diffnet/errors.hpp"

namespace diffnet {

namespace {

// Round every float to 12 significant digits in place. Rounding once is
// idempotent, which is what makes dump(load(dump(x))) == dump(x) hold.
void round_floats(json& j) {
  if (j.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", j.get<double>());
    j = std::stod(buf);
  } else if (j.is_object() || j.is_array()) {
    for (auto& v : j) round_floats(v);
  }
}

json time_to_json(Time t) { return t == kNever ? json(nullptr) : json(t); }
Time time_from_json(const json& j) { return j.is_null() ? kNever : j.get<Time>(); }
json node_to_json(Node z) { return z == kNoParent ? json(nullptr) : json(z); }
Node node_from_json(const json& j) { return j.is_null() ? kNoParent : j.get<Node>(); }

json grid_to_json(const Grid<double>& g) {
  json rows = json::array();
  for (int i = 0; i < g.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < g.cols(); ++j) row.push_back(g(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Grid<double> grid_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("expected an array-of-arrays grid");
  const int rows = static_cast<int>(j.size());
  const int cols = rows == 0 ? 0 : static_cast<int>(j[0].size());
  Grid<double> g(rows, cols, 0.0);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) throw ParseError("ragged grid rows");
    for (int c = 0; c < cols; ++c) g(i, c) = j[i][c].get<double>();
  }
  return g;
}

template <typename T, typename F>
json vec_to_json(const std::vector<T>& v, F f) {
  json a = json::array();
  for (const T& x : v) a.push_back(f(x));
  return a;
}

}  // namespace

std::string canonical_dump(const json& j) {
  json copy = j;
  round_floats(copy);
  return copy.dump();  // object keys are already sorted (std::map storage)
}

void write_canonical_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << canonical_dump(j) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

json state_to_json(const InfectionState& s) {
  json j;
  j["parent"] = vec_to_json(s.parent, node_to_json);
  j["time"] = vec_to_json(s.time, time_to_json);
  j["strength"] = grid_to_json(s.strength);
  return j;
}

InfectionState state_from_json(const json& j) {
  InfectionState s;
  for (const auto& v : j.at("parent")) s.parent.push_back(node_from_json(v));
  for (const auto& v : j.at("time")) s.time.push_back(time_from_json(v));
  s.strength = grid_from_json(j.at("strength"));
  if (s.strength.rows() != s.size() || s.strength.cols() != s.size() ||
      s.time.size() != s.parent.size())
    throw ParseError("inconsistent state dimensions");
  return s;
}

json particles_to_json(const ParticleSet& p) {
  json j;
  j["block"] = {{"index", p.block.index}, {"first", p.block.first}, {"last", p.block.last}};
  j["provenance"] = {{"seed", p.provenance.seed},
                     {"retained_iterations", p.provenance.retained_iterations}};
  j["particles"] = vec_to_json(p.particles, state_to_json);
  return j;
}

ParticleSet particles_from_json(const json& j) {
  ParticleSet p;
  p.block.index = j.at("block").at("index").get<int>();
  p.block.first = j.at("block").at("first").get<Time>();
  p.block.last = j.at("block").at("last").get<Time>();
  p.provenance.seed = j.at("provenance").at("seed").get<uint64_t>();
  p.provenance.retained_iterations =
      j.at("provenance").at("retained_iterations").get<std::vector<long>>();
  for (const auto& v : j.at("particles")) p.particles.push_back(state_from_json(v));
  return p;
}

json truth_to_json(const GroundTruth& t) {
  json j;
  j["potential_parents"] = t.potential_parents;
  j["tree_parent"] = vec_to_json(t.tree_parent, node_to_json);
  j["strength"] = grid_to_json(t.strength);
  j["kappa"] = grid_to_json(t.kappa);
  j["theta"] = grid_to_json(t.theta);
  j["parent"] = vec_to_json(t.parent, node_to_json);
  j["time"] = vec_to_json(t.time, time_to_json);
  j["horizon"] = t.horizon;
  return j;
}

GroundTruth truth_from_json(const json& j) {
  GroundTruth t;
  t.potential_parents = j.at("potential_parents").get<std::vector<std::vector<Node>>>();
  for (const auto& v : j.at("tree_parent")) t.tree_parent.push_back(node_from_json(v));
  t.strength = grid_from_json(j.at("strength"));
  t.kappa = grid_from_json(j.at("kappa"));
  t.theta = grid_from_json(j.at("theta"));
  for (const auto& v : j.at("parent")) t.parent.push_back(node_from_json(v));
  for (const auto& v : j.at("time")) t.time.push_back(time_from_json(v));
  t.horizon = j.at("horizon").get<Time>();
  return t;
}

json report_to_json(const DeviationReport& r) {
  json j;
  j["d_time"] = r.d_time;
  j["d_parent"] = r.d_parent;
  j["d_strength"] = r.d_strength;
  j["percent_correct_parent"] = r.percent_correct_parent;
  return j;
}

json predictions_to_json(const PredictedTimes& p) {
  json j;
  j["mean"] = p.mean;
  j["q25"] = p.q25;
  j["q75"] = p.q75;
  return j;
}

json locate_to_json(const LocateResult& r, const std::vector<GeoStation>& stations) {
  json j;
  j["epicenter"] = {{"lat", r.epicenter_lat}, {"lon", r.epicenter_lon}};
  j["dummy_time_seconds"] = r.geo.dummy_time_seconds;
  json st = json::array();
  for (size_t i = 0; i < stations.size(); ++i) {
    json s;
    s["id"] = stations[i].id;
    s["lat"] = stations[i].lat_deg;
    s["lon"] = stations[i].lon_deg;
    s["changepoint"] = r.changepoints[i];
    s["map_parent"] = node_to_json(r.map_state.parent[static_cast<Node>(i)]);
    s["map_time"] = time_to_json(r.map_state.time[static_cast<Node>(i)]);
    st.push_back(std::move(s));
  }
  j["stations"] = std::move(st);
  j["dummy_parented"] = r.dummy_parented;
  return j;
}

namespace {

json obs_to_json(const ObservationModel& m) {
  json j;
  if (const auto* g = std::get_if<GaussianObs>(&m.variant())) {
    j["type"] = "gaussian";
    j["mu1"] = g->mu1;
    j["sigma1"] = g->sigma1;
    j["mu2"] = g->mu2;
    j["sigma2"] = g->sigma2;
  } else if (const auto* p = std::get_if<PoissonObs>(&m.variant())) {
    j["type"] = "poisson";
    j["rate1"] = p->rate1;
    j["rate2"] = p->rate2;
  } else {
    const auto& l = std::get<LogNormalEpidemicObs>(m.variant());
    j["type"] = "lognormal_epidemic";
    j["pre_mu"] = l.pre_mu;
    j["pre_sigma"] = l.pre_sigma;
    j["a"] = l.a;
    j["sigma"] = l.sigma;
    j["d_peak_days"] = l.d_peak_days;
    j["resid_mu"] = l.resid_mu;
    j["resid_sigma"] = l.resid_sigma;
  }
  return j;
}

ObservationModel obs_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "gaussian")
    return ObservationModel(GaussianObs{j.at("mu1").get<double>(), j.at("sigma1").get<double>(),
                                        j.at("mu2").get<double>(), j.at("sigma2").get<double>()});
  if (type == "poisson")
    return ObservationModel(PoissonObs{j.at("rate1").get<double>(), j.at("rate2").get<double>()});
  if (type == "lognormal_epidemic") {
    LogNormalEpidemicObs l;
    l.pre_mu = j.at("pre_mu").get<double>();
    l.pre_sigma = j.at("pre_sigma").get<double>();
    l.a = j.at("a").get<double>();
    l.sigma = j.at("sigma").get<double>();
    l.d_peak_days = j.at("d_peak_days").get<double>();
    l.resid_mu = j.at("resid_mu").get<double>();
    l.resid_sigma = j.at("resid_sigma").get<double>();
    return ObservationModel(l);
  }
  throw ConfigError("unknown observation model type '" + type + "'");
}

}  // namespace

json spec_to_json(const InferenceSpec& s) {
  json j;
  j["potential_parents"] = s.hyper.potential_parents;
  j["kappa"] = grid_to_json(s.hyper.kappa);
  j["theta"] = grid_to_json(s.hyper.theta);
  if (!s.hyper.min_delay.empty()) {
    json rows = json::array();
    for (int i = 0; i < s.hyper.min_delay.rows(); ++i) {
      json row = json::array();
      for (int c = 0; c < s.hyper.min_delay.cols(); ++c) row.push_back(s.hyper.min_delay(i, c));
      rows.push_back(std::move(row));
    }
    j["min_delay"] = std::move(rows);
  }
  j["proposal_rate"] = s.hyper.proposal_rate;
  json obs = json::array();
  for (const auto& m : s.obs) obs.push_back(obs_to_json(m));
  j["observations"] = std::move(obs);
  json clamps = json::object();
  for (const auto& [node, time] : s.clamps) clamps[std::to_string(node)] = time_to_json(time);
  j["clamps"] = std::move(clamps);
  j["n_blocks"] = s.n_blocks;
  j["mcmc"] = {{"n_mcmc", s.mcmc.n_mcmc},
               {"n_burn", s.mcmc.n_burn},
               {"n_thin", s.mcmc.n_thin},
               {"seed", s.mcmc.seed},
               {"random_scan", s.mcmc.random_scan},
               {"fixed_strengths", s.mcmc.fixed_strengths},
               {"refinement_sweeps", s.mcmc.refinement_sweeps},
               {"consistent_proposal", s.mcmc.consistent_proposal},
               {"legacy_null_parent_sampling", s.mcmc.legacy_null_parent_sampling}};
  return j;
}

InferenceSpec spec_from_json(const json& j) {
  InferenceSpec s;
  try {
    s.hyper.potential_parents =
        j.at("potential_parents").get<std::vector<std::vector<Node>>>();
    const int n = s.hyper.n();
    // kappa/theta: scalar (shared across the support) or a full grid
    if (j.at("kappa").is_number()) {
      s.hyper.kappa = Grid<double>(n, n, j.at("kappa").get<double>());
      s.hyper.theta = Grid<double>(n, n, j.at("theta").get<double>());
    } else {
      s.hyper.kappa = grid_from_json(j.at("kappa"));
      s.hyper.theta = grid_from_json(j.at("theta"));
    }
    if (j.contains("min_delay")) {
      const json& md = j.at("min_delay");
      s.hyper.min_delay = Grid<int>(n, n, 1);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < n; ++c) s.hyper.min_delay(i, c) = md.at(i).at(c).get<int>();
    }
    if (j.contains("proposal_rate") && j.at("proposal_rate").is_number())
      s.hyper.proposal_rate.assign(n, j.at("proposal_rate").get<double>());
    else if (j.contains("proposal_rate"))
      s.hyper.proposal_rate = j.at("proposal_rate").get<std::vector<double>>();
    else
      s.hyper.proposal_rate.assign(n, 0.5);
    for (const auto& m : j.at("observations")) s.obs.push_back(obs_from_json(m));
    if (j.contains("clamps"))
      for (const auto& [key, val] : j.at("clamps").items()) {
        try {
          s.clamps[std::stoi(key)] = time_from_json(val);
        } catch (const std::invalid_argument&) {
          throw ConfigError("clamp key '" + key + "' is not a node index");
        }
      }
    s.n_blocks = j.value("n_blocks", 1);
    if (j.contains("mcmc")) {
      const json& m = j.at("mcmc");
      s.mcmc.n_mcmc = m.value("n_mcmc", s.mcmc.n_mcmc);
      s.mcmc.n_burn = m.value("n_burn", s.mcmc.n_burn);
      s.mcmc.n_thin = m.value("n_thin", s.mcmc.n_thin);
      s.mcmc.seed = m.value("seed", s.mcmc.seed);
      s.mcmc.random_scan = m.value("random_scan", s.mcmc.random_scan);
      s.mcmc.fixed_strengths = m.value("fixed_strengths", s.mcmc.fixed_strengths);
      s.mcmc.refinement_sweeps = m.value("refinement_sweeps", s.mcmc.refinement_sweeps);
      s.mcmc.consistent_proposal = m.value("consistent_proposal", s.mcmc.consistent_proposal);
      s.mcmc.legacy_null_parent_sampling =
          m.value("legacy_null_parent_sampling", s.mcmc.legacy_null_parent_sampling);
    }
    if (static_cast<int>(s.obs.size()) != n)
      throw ConfigError("observation model count does not match the node count");
    if (s.n_blocks < 1) throw ConfigError("n_blocks must be >= 1");
    s.hyper.validate();
    s.mcmc.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed inference config: ") + e.what());
  }
  return s;
}

}  // namespace diffnet
