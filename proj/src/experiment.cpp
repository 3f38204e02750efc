#include "diffnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "diffnet/errors.hpp"
#include "diffnet/eval.hpp"
#include "diffnet/serialize.hpp"
#include "diffnet/smcmc.hpp"

namespace diffnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

MetricsRow eval_particles(const ParticleSet& ps, const GroundTruth& truth,
                          const ModelHyperparams& hyper, Time batch_end) {
  MetricsRow row;
  row.batch_end = batch_end;
  row.horizon = truth.horizon;
  // score per-node modal estimates: when the posterior is diffuse the joint
  // mode degenerates to a near-arbitrary low-count configuration
  const InfectionState map = map_estimate(ps, MapMode::kMarginal);
  row.d_time = deviation_times(map.time, truth.time, batch_end);
  row.d_parent = deviation_parents(map.parent, truth.parent);
  row.d_strength = deviation_strengths(map.strength, truth.strength, hyper);
  const std::vector<double> pct = percent_correct_parents(ps, truth.parent);
  double acc = 0.0;
  for (double p : pct) acc += p;
  row.pct_correct_mean = acc / static_cast<double>(pct.size());
  // spread of the per-particle time deviation
  double m = 0.0, m2 = 0.0;
  for (const InfectionState& s : ps.particles) {
    const double d = deviation_times(s.time, truth.time, batch_end);
    m += d;
    m2 += d * d;
  }
  const double k = static_cast<double>(ps.particles.size());
  row.d_time_particle_sd = k > 1 ? std::sqrt(std::max(0.0, (m2 - m * m / k) / (k - 1))) : 0.0;
  return row;
}

std::vector<MetricsRow> run_one(const ExperimentConfig& cfg, const ScenarioPreset& preset,
                                int realization) {
  const uint64_t seed_r = derive_seed(cfg.seed, static_cast<uint64_t>(realization));
  Rng gen(derive_seed(seed_r, 0));
  NetworkGenConfig net = preset.net;
  net.n = cfg.n_nodes;
  GroundTruth truth = generate_network(net, gen);
  generate_cascade(truth, gen);
  const ObservationSet data =
      generate_observations(truth, preset.mu1, preset.sigma1, preset.mu2, preset.sigma2, gen);
  const ModelHyperparams hyper = hyper_from_truth(truth, preset.proposal_rate);
  ObservationModelSet obs(truth.size(),
                          ObservationModel(GaussianObs{preset.mu1, preset.sigma1, preset.mu2,
                                                       preset.sigma2}));
  const ClampMap source_clamp{{0, 1}};

  std::vector<MetricsRow> rows;
  auto stamp = [&](MetricsRow row, const std::string& method, int block, double wall) {
    row.scenario = cfg.scenario;
    row.realization = realization;
    row.seed = seed_r;
    row.method = method;
    row.block = block;
    row.wall_ms = wall;
    rows.push_back(std::move(row));
  };

  {  // per-node individual changepoints over the full horizon
    const auto t0 = std::chrono::steady_clock::now();
    const auto stats = make_series_stats(data);
    std::vector<Time> cps(truth.size());
    for (Node i = 0; i < truth.size(); ++i)
      cps[i] = obs[i].ml_changepoint(stats[i], 1, truth.horizon);
    MetricsRow row;
    row.batch_end = truth.horizon;
    row.horizon = truth.horizon;
    row.d_time = deviation_times(cps, truth.time, truth.horizon);
    row.d_parent = kNaN;
    row.d_strength = kNaN;
    row.pct_correct_mean = kNaN;
    row.d_time_particle_sd = kNaN;
    stamp(std::move(row), "individual", 1, elapsed_ms(t0));
  }

  if (cfg.run_batch) {
    McmcConfig mc = cfg.mcmc;
    mc.seed = derive_seed(seed_r, 1);
    const auto t0 = std::chrono::steady_clock::now();
    const ParticleSet ps = run_batch_gibbs(data, hyper, obs, mc, source_clamp);
    const double wall = elapsed_ms(t0);
    stamp(eval_particles(ps, truth, hyper, truth.horizon), "batch", 1, wall);
  }

  if (cfg.run_online) {
    McmcConfig mc = cfg.mcmc;
    mc.seed = derive_seed(seed_r, 2);
    const ObservationSet blocked = ObservationSet::with_blocks(data.series, cfg.n_blocks);
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<BlockResult> blocks = run_online(blocked, hyper, obs, mc, source_clamp);
    const double wall = elapsed_ms(t0);
    for (size_t b = 0; b < blocks.size(); ++b)
      stamp(eval_particles(blocks[b].particles, truth, hyper, blocked.blocks[b].last), "online",
            static_cast<int>(b) + 1, wall / static_cast<double>(blocks.size()));
  }

  if (cfg.run_known_times) {
    McmcConfig mc = cfg.mcmc;
    mc.seed = derive_seed(seed_r, 3);
    ClampMap clamps;
    for (Node i = 0; i < truth.size(); ++i) clamps[i] = truth.time[i];
    const auto t0 = std::chrono::steady_clock::now();
    const ParticleSet ps = run_batch_gibbs(data, hyper, obs, mc, clamps);
    const double wall = elapsed_ms(t0);
    stamp(eval_particles(ps, truth, hyper, truth.horizon), "batch_known_times", 1, wall);
  }
  return rows;
}

struct Welford {
  int n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    if (std::isnan(x)) return;
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double ci95() const { return n > 1 ? 1.96 * std::sqrt(m2 / (n - 1) / n) : 0.0; }
  double value() const { return n > 0 ? mean : kNaN; }
};

std::string format_row(const MetricsRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%c,%d,%llu,%s,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                r.scenario, r.realization, static_cast<unsigned long long>(r.seed),
                r.method.c_str(), r.block, r.batch_end, r.horizon, r.d_time, r.d_parent,
                r.d_strength, r.pct_correct_mean, r.d_time_particle_sd, r.wall_ms);
  return buf;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.realizations < 1) throw ConfigError("run_experiment: realizations must be >= 1");
  if (cfg.n_blocks < 1) throw ConfigError("run_experiment: n_blocks must be >= 1");
  const ScenarioPreset preset = scenario_preset(cfg.scenario);
  cfg.mcmc.validate();

  std::vector<std::vector<MetricsRow>> slots(cfg.realizations);
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, cfg.realizations));

  auto worker = [&]() {
    while (true) {
      const int r = next.fetch_add(1);
      if (r >= cfg.realizations) return;
      try {
        slots[r] = run_one(cfg, preset, r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult res;
  for (auto& rows : slots)
    for (auto& row : rows) res.rows.push_back(std::move(row));

  // per (method, block) means with 95% normal bands, NaN metrics skipped
  std::vector<std::pair<std::string, int>> groups;
  for (const MetricsRow& r : res.rows) {
    const std::pair<std::string, int> g{r.method, r.block};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  for (const auto& [method, block] : groups) {
    Welford dt, dz, da;
    int count = 0;
    for (const MetricsRow& r : res.rows) {
      if (r.method != method || r.block != block) continue;
      ++count;
      dt.add(r.d_time);
      dz.add(r.d_parent);
      da.add(r.d_strength);
    }
    MethodSummary s;
    s.method = method;
    s.block = block;
    s.count = count;
    s.d_time_mean = dt.value();
    s.d_time_ci95 = dt.ci95();
    s.d_parent_mean = dz.value();
    s.d_parent_ci95 = dz.ci95();
    s.d_strength_mean = da.value();
    s.d_strength_ci95 = da.ci95();
    res.summaries.push_back(std::move(s));
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string tag =
        std::string(1, cfg.scenario) + "_seed" + std::to_string(cfg.seed);
    res.csv_path = (fs::path(cfg.out_dir) / ("metrics_" + tag + ".csv")).string();
    std::ofstream csv(res.csv_path);
    if (!csv) throw DataError("cannot write " + res.csv_path);
    csv << "scenario,realization,seed,method,block,batch_end,horizon,d_time,d_parent,"
           "d_strength,pct_correct_mean,d_time_particle_sd,wall_ms\n";
    for (const MetricsRow& r : res.rows) csv << format_row(r) << "\n";
    if (!csv) throw DataError("write failed: " + res.csv_path);

    json j;
    j["scenario"] = std::string(1, cfg.scenario);
    j["n_nodes"] = cfg.n_nodes;
    j["realizations"] = cfg.realizations;
    j["n_blocks"] = cfg.n_blocks;
    j["seed"] = cfg.seed;
    j["n_mcmc"] = cfg.mcmc.n_mcmc;
    j["n_burn"] = cfg.mcmc.n_burn;
    j["n_thin"] = cfg.mcmc.n_thin;
    json sums = json::array();
    for (const MethodSummary& s : res.summaries) {
      json e;
      e["method"] = s.method;
      e["block"] = s.block;
      e["count"] = s.count;
      e["d_time"] = {{"mean", s.d_time_mean}, {"ci95", s.d_time_ci95}};
      e["d_parent"] = {{"mean", s.d_parent_mean}, {"ci95", s.d_parent_ci95}};
      e["d_strength"] = {{"mean", s.d_strength_mean}, {"ci95", s.d_strength_ci95}};
      sums.push_back(std::move(e));
    }
    j["summaries"] = std::move(sums);
    res.json_path = (fs::path(cfg.out_dir) / ("summary_" + tag + ".json")).string();
    write_canonical_json(res.json_path, j);
  }
  return res;
}

const MethodSummary& find_summary(const ExperimentResult& r, const std::string& method,
                                  int block) {
  for (const MethodSummary& s : r.summaries)
    if (s.method == method && s.block == block) return s;
  throw DataError("no summary for method '" + method + "', block " + std::to_string(block));
}

}  // namespace diffnet
