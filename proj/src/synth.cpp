#include "diffnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "diffnet/errors.hpp"

namespace diffnet {

InfectionState GroundTruth::as_state() const {
  InfectionState s;
  s.parent = parent;
  s.time = time;
  s.strength = strength;
  return s;
}

GroundTruth generate_network(const NetworkGenConfig& cfg, Rng& rng) {
  if (cfg.n < 2) throw ConfigError("generate_network: need at least 2 nodes");
  if (!(cfg.inclusion_prob > 0.0 && cfg.inclusion_prob <= 1.0))
    throw ConfigError("generate_network: inclusion_prob outside (0,1]");
  GroundTruth t;
  t.potential_parents.resize(cfg.n);
  t.tree_parent.assign(cfg.n, kNoParent);
  t.strength = Grid<double>(cfg.n, cfg.n, 0.0);
  t.kappa = Grid<double>(cfg.n, cfg.n, 0.0);
  t.theta = Grid<double>(cfg.n, cfg.n, 0.0);

  std::bernoulli_distribution include(cfg.inclusion_prob);
  const double k_tree = cfg.swap_tree_assignment ? cfg.kappa_off : cfg.kappa_tree;
  const double th_tree = cfg.swap_tree_assignment ? cfg.theta_off : cfg.theta_tree;
  const double k_off = cfg.swap_tree_assignment ? cfg.kappa_tree : cfg.kappa_off;
  const double th_off = cfg.swap_tree_assignment ? cfg.theta_tree : cfg.theta_off;

  for (Node i = 1; i < cfg.n; ++i) {
    auto& pi = t.potential_parents[i];
    do {
      pi.clear();
      for (Node j = 0; j < i; ++j)
        if (include(rng)) pi.push_back(j);
    } while (pi.empty());
    std::uniform_int_distribution<size_t> pick(0, pi.size() - 1);
    t.tree_parent[i] = pi[pick(rng)];
    for (Node j : pi) {
      const bool on_tree = (j == t.tree_parent[i]);
      t.kappa(i, j) = on_tree ? k_tree : k_off;
      t.theta(i, j) = on_tree ? th_tree : th_off;
      std::gamma_distribution<double> draw(t.kappa(i, j), t.theta(i, j));
      t.strength(i, j) = draw(rng);
    }
  }
  return t;
}

void generate_cascade(GroundTruth& truth, Rng& rng) {
  const int n = truth.size();
  truth.parent.assign(n, kNoParent);
  truth.time.assign(n, kNever);
  truth.time[0] = 1;
  Time latest = 1;
  for (Node i = 1; i < n; ++i) {
    const auto& pi = truth.potential_parents[i];
    if (pi.empty())
      throw ConfigError("generate_cascade: node " + std::to_string(i) +
                        " has no potential parents");
    std::vector<double> w;
    w.reserve(pi.size());
    for (Node j : pi) w.push_back(truth.strength(i, j));
    std::discrete_distribution<size_t> pick(w.begin(), w.end());
    const Node z = pi[pick(rng)];
    const double p = -std::expm1(-truth.strength(i, z));
    std::geometric_distribution<int> extra(p);
    truth.parent[i] = z;
    truth.time[i] = truth.time[z] + 1 + extra(rng);
    latest = std::max(latest, truth.time[i]);
  }
  truth.horizon = latest + 10;
}

namespace {

ObservationSet two_regime_series(const GroundTruth& truth,
                                 const std::function<double(bool, Rng&)>& draw, Rng& rng) {
  if (truth.horizon < 2) throw ConfigError("observations need a realized cascade");
  std::vector<std::vector<double>> series(truth.size());
  for (Node i = 0; i < truth.size(); ++i) {
    series[i].resize(truth.horizon);
    for (Time t = 1; t <= truth.horizon; ++t)
      series[i][t - 1] = draw(t > truth.time[i], rng);
  }
  return ObservationSet::with_blocks(std::move(series), 1);
}

}  // namespace

ObservationSet generate_observations(const GroundTruth& truth, double mu1, double sigma1,
                                     double mu2, double sigma2, Rng& rng) {
  // sigma == 0 is allowed here (exact step series for testing)
  auto gauss = [](double mu, double sigma, Rng& r) {
    if (sigma == 0.0) return mu;
    std::normal_distribution<double> d(mu, sigma);
    return d(r);
  };
  return two_regime_series(
      truth,
      [&](bool infected, Rng& r) {
        return infected ? gauss(mu2, sigma2, r) : gauss(mu1, sigma1, r);
      },
      rng);
}

ObservationSet generate_poisson_observations(const GroundTruth& truth, double rate1, double rate2,
                                             Rng& rng) {
  std::poisson_distribution<int> pre(rate1), post(rate2);
  return two_regime_series(
      truth,
      [&](bool infected, Rng& r) { return static_cast<double>(infected ? post(r) : pre(r)); },
      rng);
}

ScenarioPreset scenario_preset(char name) {
  ScenarioPreset p;
  p.name = name;
  switch (name) {
    case 'A': p.mu2 = 100.0; p.net.kappa_off = 40.0; break;
    case 'B': p.mu2 = 100.0; p.net.kappa_off = 2.0; break;
    case 'C': p.mu2 = 11.0; p.net.kappa_off = 40.0; break;
    case 'D': p.mu2 = 11.0; p.net.kappa_off = 2.0; break;
    default: throw ConfigError(std::string("unknown scenario '") + name + "'");
  }
  return p;
}

ModelHyperparams hyper_from_truth(const GroundTruth& truth, double proposal_rate) {
  ModelHyperparams h;
  h.potential_parents = truth.potential_parents;
  h.kappa = truth.kappa;
  h.theta = truth.theta;
  h.proposal_rate.assign(truth.size(), proposal_rate);
  h.validate();
  return h;
}

}  // namespace diffnet
