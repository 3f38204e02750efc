#pragma once

#include <cstdint>
#include <vector>

#include "diffnet/hyper.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/types.hpp"

namespace diffnet {

// A generated instance: the structure, the realized strengths, the realized
// cascade and the per-link prior classes used to draw the strengths.
struct GroundTruth {
  std::vector<std::vector<Node>> potential_parents;
  std::vector<Node> tree_parent;  // scaffold edge into each node (kNoParent for the source)
  Grid<double> strength;          // realized strengths on the support
  Grid<double> kappa, theta;      // per-link prior actually used to draw them
  std::vector<Node> parent;       // realized parent of each node
  std::vector<Time> time;         // realized infection times (source at 1)
  Time horizon = 0;               // 10 + latest infection time

  int size() const { return static_cast<int>(potential_parents.size()); }
  InfectionState as_state() const;
};

struct NetworkGenConfig {
  int n = 10;
  double inclusion_prob = 0.5;
  double kappa_tree = 1.0, theta_tree = 0.5;  // gamma prior on scaffold-tree links
  double kappa_off = 40.0, theta_off = 0.5;   // gamma prior on the other links
  bool swap_tree_assignment = false;          // give the tree links the *_off prior instead
};

// Node 0 is the source (empty potential-parent set). Every other node i
// includes each j < i independently with inclusion_prob, redrawn until
// nonempty, and one uniformly chosen member becomes the scaffold-tree edge.
// Strengths are drawn from the tree/off-tree gamma priors.
GroundTruth generate_network(const NetworkGenConfig& cfg, Rng& rng);

// Realizes the cascade on a generated network: the source is infected at
// time 1, every other node picks its parent with probability proportional
// to the realized strengths and is infected a geometric delay later.
// Sets time, parent and horizon.
void generate_cascade(GroundTruth& truth, Rng& rng);

// Per-node Gaussian series: N(mu1, sigma1^2) at times 1..t_i, then
// N(mu2, sigma2^2). A single block.
ObservationSet generate_observations(const GroundTruth& truth, double mu1, double sigma1,
                                     double mu2, double sigma2, Rng& rng);

// Poisson counterpart (observation-model testing).
ObservationSet generate_poisson_observations(const GroundTruth& truth, double rate1, double rate2,
                                             Rng& rng);

// The four synthetic study settings; strengths always share theta = 0.5 and
// observations mu1 = 10, sigma = 1.
//   A: mu2 = 100, kappa_off = 40    B: mu2 = 100, kappa_off = 2
//   C: mu2 = 11,  kappa_off = 40    D: mu2 = 11,  kappa_off = 2
struct ScenarioPreset {
  char name;
  double mu1 = 10.0, sigma1 = 1.0, mu2, sigma2 = 1.0;
  NetworkGenConfig net;
  double proposal_rate = 0.5;
};

ScenarioPreset scenario_preset(char name);  // 'A'..'D'; throws ConfigError otherwise

// Inference inputs matching a generated truth: its potential-parent sets,
// the per-link prior classes it was drawn from, and the common rate.
ModelHyperparams hyper_from_truth(const GroundTruth& truth, double proposal_rate = 0.5);

}  // namespace diffnet
