#pragma once

#include <span>
#include <string>
#include <vector>

#include "diffnet/hyper.hpp"
#include "diffnet/obsmodel.hpp"
#include "diffnet/types.hpp"

namespace diffnet {

// Log-probability that a node infected at t_parent with link strength alpha
// transmits at time t_child, under the geometric delay law with success
// probability p = 1 - exp(-alpha) on delays {1, 2, ...}. t_child == kNever
// gives the survival mass: no transmission within [.., horizon].
//
// The min_delay overload shifts the support to delays {min_delay, ...}
// (seismic travel-time floors); min_delay == 1 is the plain law.
double log_geometric_transmission(Time t_child, Time t_parent, double alpha, Time horizon);
double log_geometric_transmission(Time t_child, Time t_parent, double alpha, Time horizon,
                                  int min_delay);

// Log-probability of picking candidate z with weights proportional to the
// given strengths. Throws std::domain_error if z is not a candidate or all
// weights vanish.
double log_parent_choice(Node z, std::span<const Node> candidates,
                         std::span<const double> strengths);

// Log-density of the Gamma(shape kappa, scale theta) prior at alpha >= 0,
// with the proper limits at alpha == 0.
double log_gamma_prior(double alpha, double kappa, double theta);

struct ParentTimeMass {
  Node parent = kNoParent;
  Time time = kNever;
  double mass = 0.0;
};

// Joint law of node i's (parent, time) up to block_end, given node i's
// previous-block values (delta continuation once infected) and the current
// times of the other nodes (times[i] itself is ignored):
//   - previously infected: point mass on the previous (parent, time);
//   - otherwise each infected potential parent l and each feasible time x
//     get mass [alpha_il / sum_k alpha_ik] * p_l (1-p_l)^(x - t_l - delay),
//     and the complement of the total goes to (kNoParent, kNever).
// Empty potential-parent set: point mass on (kNoParent, kNever).
std::vector<ParentTimeMass> node_infection_law(Node i, Time prev_time, Node prev_parent,
                                               std::span<const Time> times,
                                               const Grid<double>& strength,
                                               const ModelHyperparams& hyper, Time block_end);

// Log of the node_infection_law mass at one (parent, time) pair; -inf where
// the law assigns no mass. This is the workhorse shared by the posterior,
// the Gibbs conditionals and the online transition density.
double log_parent_time_mass(Node i, Node z, Time t, Time prev_time, Node prev_parent,
                            std::span<const Time> times, const Grid<double>& strength,
                            const ModelHyperparams& hyper, Time block_end);

// Log mass of "still uninfected at block_end" for node i given the other
// nodes' times (the complement term of node_infection_law).
double log_never_infected_mass(Node i, std::span<const Time> times, const Grid<double>& strength,
                               const ModelHyperparams& hyper, Time block_end);

// Unnormalized log posterior over a full-horizon state: per-node data
// likelihood + the joint (parent, time) law + gamma priors on supported
// strengths. Structural violations (parent outside the potential set,
// ordering violations, times beyond the horizon, negative strengths) yield
// -inf rather than exceptions.
double log_joint_posterior(const InfectionState& state, const ObservationSet& data,
                           const ModelHyperparams& hyper, const ObservationModelSet& obs);
double log_joint_posterior(const InfectionState& state, const std::vector<SeriesStats>& stats,
                           const ModelHyperparams& hyper, const ObservationModelSet& obs,
                           Time horizon);

// Empty string when the state satisfies the structural invariants (typed
// nulls paired, parents in support, parent-before-child with delays, times
// within [1..horizon], strengths finite and >= 0 exactly on support);
// otherwise a one-line diagnosis.
std::string invariant_violation(const InfectionState& state, const ModelHyperparams& hyper,
                                Time horizon);

}  // namespace diffnet
