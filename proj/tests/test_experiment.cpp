#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diffnet/errors.hpp"
#include "diffnet/experiment.hpp"

using namespace diffnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// CSV line with the trailing wall-clock column removed.
std::string strip_wall(const std::string& line) {
  const auto pos = line.rfind(',');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.scenario = 'A';
  cfg.n_nodes = 5;
  cfg.realizations = 2;
  cfg.n_blocks = 2;
  cfg.seed = 11;
  cfg.mcmc.n_mcmc = 200;
  cfg.mcmc.n_burn = 100;
  cfg.mcmc.n_thin = 2;
  cfg.run_known_times = true;
  cfg.workers = 2;
  cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("experiment harness: row inventory, files and determinism") {
  const fs::path base = fs::temp_directory_path() / "diffnet_experiment_test";
  fs::remove_all(base);
  const auto cfg = tiny_config((base / "run1").string());
  const ExperimentResult res = run_experiment(cfg);

  // 2 realizations x (individual + batch + 2 online blocks + known times).
  REQUIRE(res.rows.size() == 10);
  std::set<std::pair<std::string, int>> seen;
  for (const auto& r : res.rows) seen.insert({r.method, r.block});
  const std::set<std::pair<std::string, int>> want{{"individual", 1},
                                                   {"batch", 1},
                                                   {"online", 1},
                                                   {"online", 2},
                                                   {"batch_known_times", 1}};
  CHECK(seen == want);

  for (const auto& r : res.rows) {
    CHECK(r.scenario == 'A');
    CHECK(r.horizon > 0);
    CHECK(r.batch_end > 0);
    CHECK(r.batch_end <= r.horizon);
    CHECK(std::isfinite(r.d_time));
    CHECK(r.d_time >= 0.0);
    if (r.method == "individual") {
      // The baseline has no network estimate at all.
      CHECK(std::isnan(r.d_parent));
      CHECK(std::isnan(r.d_strength));
      CHECK(std::isnan(r.pct_correct_mean));
      CHECK(std::isnan(r.d_time_particle_sd));
    } else {
      CHECK(std::isfinite(r.d_parent));
      CHECK(std::isfinite(r.d_strength));
      CHECK(r.pct_correct_mean >= 0.0);
      CHECK(r.pct_correct_mean <= 100.0);
    }
    if (r.method == "online") {
      // Block b scores against the prefix seen so far.
      CHECK((r.block == 2) == (r.batch_end == r.horizon));
    }
  }

  // Summaries aggregate per (method, block); NaN metrics are skipped.
  REQUIRE(res.summaries.size() == 5);
  const auto& batch = find_summary(res, "batch", 1);
  CHECK(batch.count == 2);
  double acc = 0.0;
  for (const auto& r : res.rows)
    if (r.method == "batch") acc += r.d_time;
  CHECK(batch.d_time_mean == doctest::Approx(acc / 2.0).epsilon(1e-12));
  CHECK(std::isnan(find_summary(res, "individual", 1).d_parent_mean));
  CHECK(find_summary(res, "online", 2).count == 2);
  CHECK_THROWS_AS(find_summary(res, "bogus", 1), DataError);
  CHECK_THROWS_AS(find_summary(res, "online", 7), DataError);

  // Output files: named by scenario and seed, csv header + one line per row.
  CHECK(res.csv_path == (base / "run1" / "metrics_A_seed11.csv").string());
  CHECK(res.json_path == (base / "run1" / "summary_A_seed11.json").string());
  REQUIRE(fs::exists(res.csv_path));
  REQUIRE(fs::exists(res.json_path));
  std::ifstream csv(res.csv_path);
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "scenario,realization,seed,method,block,batch_end,horizon,d_time,d_parent,"
        "d_strength,pct_correct_mean,d_time_particle_sd,wall_ms");
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);)
    if (!line.empty()) lines.push_back(line);
  CHECK(lines.size() == 10);

  // Same seed, fresh run: identical metrics (wall clock aside).
  auto cfg2 = tiny_config((base / "run2").string());
  const ExperimentResult res2 = run_experiment(cfg2);
  REQUIRE(res2.rows.size() == res.rows.size());
  for (size_t i = 0; i < res.rows.size(); ++i) {
    const auto &a = res.rows[i], &b = res2.rows[i];
    CHECK(a.method == b.method);
    CHECK(a.realization == b.realization);
    CHECK(a.block == b.block);
    CHECK(a.seed == b.seed);
    CHECK(a.d_time == b.d_time);
    CHECK((std::isnan(a.d_parent) ? std::isnan(b.d_parent) : a.d_parent == b.d_parent));
    CHECK((std::isnan(a.d_strength) ? std::isnan(b.d_strength)
                                    : a.d_strength == b.d_strength));
  }
  CHECK(slurp(res2.json_path) == slurp(res.json_path));
  std::ifstream csv2(res2.csv_path);
  std::getline(csv2, header);
  for (const std::string& first : lines) {
    std::string line;
    REQUIRE(std::getline(csv2, line));
    CHECK(strip_wall(line) == strip_wall(first));
  }

  // A serial run with one worker reproduces the same metrics too.
  auto cfg1 = tiny_config("");
  cfg1.workers = 1;
  const ExperimentResult res1 = run_experiment(cfg1);
  CHECK(res1.csv_path.empty());
  CHECK(res1.json_path.empty());
  REQUIRE(res1.rows.size() == res.rows.size());
  for (size_t i = 0; i < res.rows.size(); ++i)
    CHECK(res1.rows[i].d_time == res.rows[i].d_time);

  fs::remove_all(base);
}

TEST_CASE("experiment harness rejects bad configs") {
  ExperimentConfig cfg;
  cfg.realizations = 0;
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  ExperimentConfig blocks;
  blocks.n_blocks = 0;
  CHECK_THROWS_AS(run_experiment(blocks), ConfigError);
  ExperimentConfig scen;
  scen.scenario = 'E';
  CHECK_THROWS_AS(run_experiment(scen), ConfigError);
  ExperimentConfig chain;
  chain.mcmc.n_thin = 0;
  CHECK_THROWS_AS(run_experiment(chain), ConfigError);
}
