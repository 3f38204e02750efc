#pragma once

#include <vector>

#include "diffnet/types.hpp"

namespace diffnet {

// Structural model inputs: each node's potential-parent set, per-link gamma
// prior (shape kappa, scale theta) on link strengths, per-link minimum
// transmission delay (1 step unless physical constraints say otherwise, as
// with seismic wave travel times), and the per-node geometric rate of the
// online time proposal.
struct ModelHyperparams {
  std::vector<std::vector<Node>> potential_parents;  // sorted ascending, no self-loops
  Grid<double> kappa;
  Grid<double> theta;
  Grid<int> min_delay;
  std::vector<double> proposal_rate;

  int n() const { return static_cast<int>(potential_parents.size()); }

  bool in_support(Node i, Node j) const {
    for (Node k : potential_parents[i])
      if (k == j) return true;
    return false;
  }

  int delay(Node i, Node j) const { return min_delay.empty() ? 1 : min_delay(i, j); }

  // Throws ConfigError on malformed structure (bad indices, self-loops,
  // non-positive kappa/theta on support, delays < 1, rates outside (0,1)).
  void validate() const;

  // Same (kappa, theta) on every supported link, unit delays, common rate.
  static ModelHyperparams uniform(std::vector<std::vector<Node>> potential_parents,
                                  double kappa, double theta, double rate = 0.5);
};

}  // namespace diffnet
