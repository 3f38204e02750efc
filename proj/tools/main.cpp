// diffnet command-line harness: generation, inference, evaluation,
// prediction, event location and the synthetic experiment suite.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "diffnet/adapters.hpp"
#include "diffnet/errors.hpp"
#include "diffnet/eval.hpp"
#include "diffnet/experiment.hpp"
#include "diffnet/serialize.hpp"
#include "diffnet/smcmc.hpp"
#include "diffnet/synth.hpp"

namespace fs = std::filesystem;
using namespace diffnet;

namespace {

int log_level() {
  static const int level = [] {
    const char* v = std::getenv("DIFFNET_LOG");
    return v ? std::atoi(v) : 0;
  }();
  return level;
}

void note(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << "\n";
}

struct ChainFlags {
  long nmcmc = -1, nburn = -1, nthin = -1;
  long long seed = -1;
  void add_to(CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--nmcmc", nmcmc, "MCMC iterations");
    cmd->add_option("--nburn", nburn, "burn-in iterations");
    cmd->add_option("--nthin", nthin, "thinning stride");
    if (with_seed) cmd->add_option("--seed", seed, "RNG seed");
  }
  void apply(McmcConfig& cfg) const {
    if (nmcmc >= 0) cfg.n_mcmc = nmcmc;
    if (nburn >= 0) cfg.n_burn = nburn;
    if (nthin >= 0) cfg.n_thin = nthin;
    if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  }
};

InferenceSpec load_spec(const std::string& path) { return spec_from_json(load_json(path)); }

ObservationSet load_data(const std::string& path, int n_blocks) {
  return ObservationSet::with_blocks(load_series_csv(path), n_blocks);
}

void write_map_files(const fs::path& dir, const ParticleSet& ps, const std::string& suffix) {
  write_canonical_json((dir / ("particles" + suffix + ".json")).string(), particles_to_json(ps));
  write_canonical_json((dir / ("map_joint" + suffix + ".json")).string(),
                       state_to_json(map_estimate(ps, MapMode::kJoint)));
  write_canonical_json((dir / ("map_marginal" + suffix + ".json")).string(),
                       state_to_json(map_estimate(ps, MapMode::kMarginal)));
}

void cmd_generate(char scenario, int nodes, long long seed, const std::string& out) {
  ScenarioPreset preset = scenario_preset(scenario);
  preset.net.n = nodes;
  Rng rng(static_cast<uint64_t>(seed));
  GroundTruth truth = generate_network(preset.net, rng);
  generate_cascade(truth, rng);
  const ObservationSet data =
      generate_observations(truth, preset.mu1, preset.sigma1, preset.mu2, preset.sigma2, rng);

  InferenceSpec spec;
  spec.hyper = hyper_from_truth(truth, preset.proposal_rate);
  spec.obs.assign(truth.size(), ObservationModel(GaussianObs{preset.mu1, preset.sigma1,
                                                             preset.mu2, preset.sigma2}));
  spec.clamps[0] = 1;  // the source and its infection time are known
  spec.mcmc.seed = static_cast<uint64_t>(seed);

  fs::create_directories(out);
  write_canonical_json((fs::path(out) / "truth.json").string(), truth_to_json(truth));
  write_series_csv((fs::path(out) / "series.csv").string(), data.series);
  write_canonical_json((fs::path(out) / "config.json").string(), spec_to_json(spec));
  note("generated scenario " + std::string(1, scenario) + " with " +
       std::to_string(truth.size()) + " nodes, horizon " + std::to_string(truth.horizon));
}

void cmd_infer_batch(const std::string& config, const std::string& data_path,
                     const ChainFlags& flags, const std::string& out) {
  InferenceSpec spec = load_spec(config);
  flags.apply(spec.mcmc);
  const ObservationSet data = load_data(data_path, 1);
  const ParticleSet ps = run_batch_gibbs(data, spec.hyper, spec.obs, spec.mcmc, spec.clamps);
  fs::create_directories(out);
  write_map_files(out, ps, "");
  note("batch inference done: " + std::to_string(ps.particles.size()) + " particles");
}

void cmd_infer_online(const std::string& config, const std::string& data_path, int blocks,
                      const ChainFlags& flags, const std::string& out) {
  InferenceSpec spec = load_spec(config);
  flags.apply(spec.mcmc);
  const int n_blocks = blocks > 0 ? blocks : spec.n_blocks;
  const ObservationSet data = load_data(data_path, n_blocks);
  ProgressSink sink;
  long every = 0;
  if (log_level() >= 1) {
    every = std::max(1L, spec.mcmc.n_mcmc / 10);
    sink = [](const BlockProgress& p) {
      json j;
      j["block"] = p.block;
      j["iteration"] = p.iteration;
      j["acceptance_rate"] = p.acceptance_rate;
      j["log_posterior"] = p.log_posterior;
      std::cerr << canonical_dump(j) << "\n";
    };
  }
  const std::vector<BlockResult> results =
      run_online(data, spec.hyper, spec.obs, spec.mcmc, spec.clamps, sink, every);
  fs::create_directories(out);
  json summary;
  summary["blocks"] = json::array();
  for (size_t b = 0; b < results.size(); ++b) {
    write_map_files(out, results[b].particles, "_block" + std::to_string(b + 1));
    summary["blocks"].push_back({{"index", static_cast<int>(b) + 1},
                                 {"first", data.blocks[b].first},
                                 {"last", data.blocks[b].last},
                                 {"acceptance_rate", results[b].acceptance_rate}});
  }
  write_canonical_json((fs::path(out) / "online_summary.json").string(), summary);
}

void cmd_eval(const std::string& truth_path, const std::string& estimate_path,
              const std::string& particles_path, int batch_end, const std::string& out) {
  const GroundTruth truth = truth_from_json(load_json(truth_path));
  const InfectionState estimate = state_from_json(load_json(estimate_path));
  const ModelHyperparams hyper = hyper_from_truth(truth);
  const Time end = batch_end > 0 ? batch_end : truth.horizon;
  DeviationReport report;
  report.d_time = deviation_times(estimate.time, truth.time, end);
  report.d_parent = deviation_parents(estimate.parent, truth.parent);
  report.d_strength = deviation_strengths(estimate.strength, truth.strength, hyper);
  if (!particles_path.empty()) {
    const ParticleSet ps = particles_from_json(load_json(particles_path));
    report.percent_correct_parent = percent_correct_parents(ps, truth.parent);
  }
  write_canonical_json(out, report_to_json(report));
}

void cmd_predict(const std::string& particles_path, const std::vector<std::string>& sources,
                 double placeholder, const std::string& out) {
  const ParticleSet ps = particles_from_json(load_json(particles_path));
  std::map<Node, double> source_times;
  for (const std::string& s : sources) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--source expects node=time, got '" + s + "'");
    try {
      source_times[std::stoi(s.substr(0, eq))] = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--source expects node=time, got '" + s + "'");
    }
  }
  write_canonical_json(out, predictions_to_json(predict_infection_times(ps, source_times,
                                                                        placeholder)));
}

void cmd_locate(const std::string& stations_path, const LocateConfig& cfg,
                const std::string& out) {
  const std::vector<GeoStation> stations = load_stations_csv(stations_path);
  const LocateResult r = locate_event(stations, cfg);
  fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path());
  write_canonical_json(out, locate_to_json(r, stations));
  note("epicenter estimate: " + std::to_string(r.epicenter_lat) + ", " +
       std::to_string(r.epicenter_lon));
}

void cmd_experiment(const ExperimentConfig& cfg) {
  const ExperimentResult r = run_experiment(cfg);
  for (const MethodSummary& s : r.summaries)
    std::cout << s.method << " block " << s.block << ": d_time " << s.d_time_mean << " +- "
              << s.d_time_ci95 << ", d_parent " << s.d_parent_mean << ", d_strength "
              << s.d_strength_mean << "\n";
  if (!r.csv_path.empty()) note("wrote " + r.csv_path + " and " + r.json_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion-network structure and infection-time inference"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "synthesize a network, cascade and observations");
  char gen_scenario = 'A';
  int gen_nodes = 10;
  long long gen_seed = 1;
  std::string gen_out;
  gen->add_option("--scenario", gen_scenario, "preset A|B|C|D")->check(CLI::IsMember({'A', 'B', 'C', 'D'}));
  gen->add_option("--nodes", gen_nodes, "network size")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // infer-batch
  auto* ib = app.add_subcommand("infer-batch", "batch Gibbs inference over the full horizon");
  std::string ib_config, ib_data, ib_out;
  ChainFlags ib_flags;
  ib->add_option("--config", ib_config, "inference config JSON")->required();
  ib->add_option("--data", ib_data, "series CSV")->required();
  ib->add_option("--out", ib_out, "output directory")->required();
  ib_flags.add_to(ib);

  // infer-online
  auto* io = app.add_subcommand("infer-online", "sequential block-by-block inference");
  std::string io_config, io_data, io_out;
  int io_blocks = 0;
  ChainFlags io_flags;
  io->add_option("--config", io_config, "inference config JSON")->required();
  io->add_option("--data", io_data, "series CSV")->required();
  io->add_option("--blocks", io_blocks, "block count (overrides the config)");
  io->add_option("--out", io_out, "output directory")->required();
  io_flags.add_to(io);

  // eval
  auto* ev = app.add_subcommand("eval", "deviation metrics of an estimate against a truth file");
  std::string ev_truth, ev_estimate, ev_particles, ev_out;
  int ev_batch_end = 0;
  ev->add_option("--truth", ev_truth, "truth JSON")->required();
  ev->add_option("--estimate", ev_estimate, "estimated state JSON")->required();
  ev->add_option("--particles", ev_particles, "particle set JSON (per-node parent accuracy)");
  ev->add_option("--batch-end", ev_batch_end, "evaluation horizon (default: truth horizon)");
  ev->add_option("--out", ev_out, "report JSON path")->required();

  // predict
  auto* pr = app.add_subcommand("predict", "expected-delay infection-time forecast");
  std::string pr_particles, pr_out;
  std::vector<std::string> pr_sources;
  double pr_placeholder = 0.0;
  pr->add_option("--particles", pr_particles, "particle set JSON")->required();
  pr->add_option("--source", pr_sources, "anchor time node=time (repeatable)");
  pr->add_option("--placeholder", pr_placeholder, "anchor for unlisted parentless nodes");
  pr->add_option("--out", pr_out, "prediction JSON path")->required();

  // locate
  auto* lo = app.add_subcommand("locate", "arrival-network epicenter estimation");
  std::string lo_stations, lo_out;
  LocateConfig lo_cfg;
  long long lo_seed = 1;
  lo->add_option("--stations", lo_stations, "stations CSV (id,lat,lon,samples...)")->required();
  lo->add_option("--velocity", lo_cfg.velocity_km_s, "wave velocity km/s");
  lo->add_option("--dummy-radius", lo_cfg.dummy_radius_km, "dummy-source radius km");
  lo->add_option("--dt", lo_cfg.dt_seconds, "sampling interval seconds");
  lo->add_option("--pre-mu", lo_cfg.pre_mu, "pre-arrival mean");
  lo->add_option("--pre-sigma", lo_cfg.pre_sigma, "pre-arrival sd");
  lo->add_option("--post-mu", lo_cfg.post_mu, "post-arrival mean");
  lo->add_option("--post-sigma", lo_cfg.post_sigma, "post-arrival sd");
  lo->add_option("--nmcmc", lo_cfg.n_mcmc, "MCMC iterations");
  lo->add_option("--nburn", lo_cfg.n_burn, "burn-in iterations");
  lo->add_option("--nthin", lo_cfg.n_thin, "thinning stride");
  lo->add_option("--seed", lo_seed, "RNG seed");
  lo->add_option("--out", lo_out, "result JSON path")->required();

  // experiment
  auto* ex = app.add_subcommand("experiment", "multi-realization synthetic study");
  ExperimentConfig ex_cfg;
  ChainFlags ex_flags;
  long long ex_seed = 1;
  bool ex_skip_batch = false, ex_skip_online = false;
  ex->add_option("--scenario", ex_cfg.scenario, "preset A|B|C|D")->check(CLI::IsMember({'A', 'B', 'C', 'D'}));
  ex->add_option("--nodes", ex_cfg.n_nodes, "network size")->check(CLI::PositiveNumber);
  ex->add_option("--realizations", ex_cfg.realizations, "instance count")->check(CLI::PositiveNumber);
  ex->add_option("--blocks", ex_cfg.n_blocks, "online block count")->check(CLI::PositiveNumber);
  ex->add_option("--workers", ex_cfg.workers, "worker threads (0: hardware)");
  ex->add_option("--seed", ex_seed, "master seed");
  ex->add_option("--out", ex_cfg.out_dir, "output directory");
  ex->add_flag("--known-times", ex_cfg.run_known_times, "also run batch with times clamped to truth");
  ex->add_flag("--skip-batch", ex_skip_batch, "skip the batch pass");
  ex->add_flag("--skip-online", ex_skip_online, "skip the online pass");
  ex_flags.add_to(ex, /*with_seed=*/false);  // --seed is the master seed here

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) {
      cmd_generate(gen_scenario, gen_nodes, gen_seed, gen_out);
    } else if (*ib) {
      cmd_infer_batch(ib_config, ib_data, ib_flags, ib_out);
    } else if (*io) {
      cmd_infer_online(io_config, io_data, io_blocks, io_flags, io_out);
    } else if (*ev) {
      cmd_eval(ev_truth, ev_estimate, ev_particles, ev_batch_end, ev_out);
    } else if (*pr) {
      cmd_predict(pr_particles, pr_sources, pr_placeholder, pr_out);
    } else if (*lo) {
      lo_cfg.seed = static_cast<uint64_t>(lo_seed);
      cmd_locate(lo_stations, lo_cfg, lo_out);
    } else if (*ex) {
      ex_cfg.seed = static_cast<uint64_t>(ex_seed);
      ex_cfg.run_batch = !ex_skip_batch;
      ex_cfg.run_online = !ex_skip_online;
      ex_flags.apply(ex_cfg.mcmc);
      cmd_experiment(ex_cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
