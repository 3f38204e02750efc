#include "diffnet/model.hpp"

#include <algorithm>
#include <cmath>

#include "diffnet/errors.hpp"
#include "diffnet/mathutil.hpp"

namespace diffnet {

void ModelHyperparams::validate() const {
  const int nn = n();
  if (nn == 0) throw ConfigError("hyperparams: no nodes");
  if (static_cast<int>(proposal_rate.size()) != nn)
    throw ConfigError("hyperparams: proposal_rate size mismatch");
  for (double r : proposal_rate)
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("hyperparams: proposal rates must lie in (0,1)");
  if (kappa.rows() != nn || kappa.cols() != nn || theta.rows() != nn || theta.cols() != nn)
    throw ConfigError("hyperparams: kappa/theta shape mismatch");
  if (!min_delay.empty() && (min_delay.rows() != nn || min_delay.cols() != nn))
    throw ConfigError("hyperparams: min_delay shape mismatch");
  for (Node i = 0; i < nn; ++i) {
    Node prev = -1;
    for (Node j : potential_parents[i]) {
      if (j < 0 || j >= nn) throw ConfigError("hyperparams: parent index out of range");
      if (j == i) throw ConfigError("hyperparams: self-loop in potential parents");
      if (j <= prev) throw ConfigError("hyperparams: potential parents must be sorted unique");
      prev = j;
      if (!(kappa(i, j) > 0.0) || !(theta(i, j) > 0.0))
        throw ConfigError("hyperparams: kappa/theta must be positive on supported links");
      if (delay(i, j) < 1) throw ConfigError("hyperparams: min_delay must be >= 1");
    }
  }
}

ModelHyperparams ModelHyperparams::uniform(std::vector<std::vector<Node>> potential_parents,
                                           double kappa, double theta, double rate) {
  ModelHyperparams h;
  const int n = static_cast<int>(potential_parents.size());
  h.potential_parents = std::move(potential_parents);
  h.kappa = Grid<double>(n, n, kappa);
  h.theta = Grid<double>(n, n, theta);
  h.proposal_rate.assign(n, rate);
  h.validate();
  return h;
}

double log_geometric_transmission(Time t_child, Time t_parent, double alpha, Time horizon) {
  return log_geometric_transmission(t_child, t_parent, alpha, horizon, 1);
}

double log_geometric_transmission(Time t_child, Time t_parent, double alpha, Time horizon,
                                  int min_delay) {
  if (!(alpha > 0.0)) throw std::domain_error("geometric transmission: alpha must be positive");
  if (t_parent == kNever) throw std::domain_error("geometric transmission: parent never infected");
  if (min_delay < 1) throw std::domain_error("geometric transmission: min_delay must be >= 1");
  if (t_child == kNever) {
    // survival: no transmission success within [.., horizon]
    const Time support = horizon - t_parent - min_delay + 1;
    return support > 0 ? -alpha * static_cast<double>(support) : 0.0;
  }
  if (t_child <= t_parent) throw std::domain_error("geometric transmission: child not after parent");
  if (t_child > horizon) throw std::domain_error("geometric transmission: child beyond horizon");
  if (t_child - t_parent < min_delay) return kNegInf;  // below the physical delay floor
  // log p + (delay excess) * log(1-p), with log(1-p) = -alpha exactly
  const double log_p = std::log(-std::expm1(-alpha));
  return log_p - alpha * static_cast<double>(t_child - t_parent - min_delay);
}

double log_parent_choice(Node z, std::span<const Node> candidates,
                         std::span<const double> strengths) {
  if (candidates.size() != strengths.size())
    throw std::domain_error("parent choice: candidates/strengths size mismatch");
  double total = 0.0;
  double picked = -1.0;
  bool found = false;
  for (size_t k = 0; k < candidates.size(); ++k) {
    if (strengths[k] < 0.0) throw std::domain_error("parent choice: negative strength");
    total += strengths[k];
    if (candidates[k] == z) {
      picked = strengths[k];
      found = true;
    }
  }
  if (!found) throw std::domain_error("parent choice: z is not a candidate");
  if (total <= 0.0) throw std::domain_error("parent choice: all candidate strengths are zero");
  return picked > 0.0 ? std::log(picked) - std::log(total) : kNegInf;
}

double log_gamma_prior(double alpha, double kappa, double theta) {
  if (!(kappa > 0.0) || !(theta > 0.0))
    throw std::domain_error("gamma prior: kappa and theta must be positive");
  if (alpha < 0.0) throw std::domain_error("gamma prior: negative strength");
  if (alpha == 0.0) {
    if (kappa > 1.0) return kNegInf;
    if (kappa < 1.0) return std::numeric_limits<double>::infinity();
    return -std::log(theta);
  }
  return (kappa - 1.0) * std::log(alpha) - alpha / theta - std::lgamma(kappa) -
         kappa * std::log(theta);
}

namespace {

// Normalizer of the parent-choice weights for node i.
double strength_row_total(Node i, const Grid<double>& strength, const ModelHyperparams& hyper) {
  double total = 0.0;
  for (Node j : hyper.potential_parents[i]) total += std::max(strength(i, j), 0.0);
  return total;
}

}  // namespace

double log_never_infected_mass(Node i, std::span<const Time> times, const Grid<double>& strength,
                               const ModelHyperparams& hyper, Time block_end) {
  const double total = strength_row_total(i, strength, hyper);
  if (total <= 0.0) return 0.0;  // nothing can transmit: never infected w.p. 1
  // complement mass = sum_l w_l * survival_l over infected potential parents
  //                 + (1 - W) for the uninfected remainder of the choice law
  std::vector<double> terms;
  terms.reserve(hyper.potential_parents[i].size() + 1);
  double w_infected = 0.0;
  for (Node l : hyper.potential_parents[i]) {
    const double a = strength(i, l);
    if (a <= 0.0 || times[l] == kNever) continue;
    const double w = a / total;
    w_infected += w;
    const Time support = block_end - times[l] - hyper.delay(i, l) + 1;
    terms.push_back(std::log(w) - a * static_cast<double>(std::max(support, 0)));
  }
  if (w_infected < 1.0) terms.push_back(std::log1p(-w_infected));
  return log_sum_exp(terms);
}

double log_parent_time_mass(Node i, Node z, Time t, Time prev_time, Node prev_parent,
                            std::span<const Time> times, const Grid<double>& strength,
                            const ModelHyperparams& hyper, Time block_end) {
  if (prev_time != kNever)  // already infected: carried forward verbatim
    return (z == prev_parent && t == prev_time) ? 0.0 : kNegInf;
  if (t == kNever)
    return z == kNoParent ? log_never_infected_mass(i, times, strength, hyper, block_end)
                          : kNegInf;
  if (z == kNoParent) return kNegInf;  // infected without a parent: no mass
  if (!hyper.in_support(i, z)) return kNegInf;
  if (t > block_end) return kNegInf;
  const Time t_z = times[z];
  if (t_z == kNever || t - t_z < hyper.delay(i, z)) return kNegInf;
  const double a = strength(i, z);
  const double total = strength_row_total(i, strength, hyper);
  if (a <= 0.0 || total <= 0.0) return kNegInf;
  const double log_w = std::log(a) - std::log(total);
  const double log_p = std::log(-std::expm1(-a));
  return log_w + log_p - a * static_cast<double>(t - t_z - hyper.delay(i, z));
}

std::vector<ParentTimeMass> node_infection_law(Node i, Time prev_time, Node prev_parent,
                                               std::span<const Time> times,
                                               const Grid<double>& strength,
                                               const ModelHyperparams& hyper, Time block_end) {
  std::vector<ParentTimeMass> out;
  if (prev_time != kNever) {
    out.push_back({prev_parent, prev_time, 1.0});
    return out;
  }
  const double total = strength_row_total(i, strength, hyper);
  if (total > 0.0) {
    for (Node l : hyper.potential_parents[i]) {
      const double a = strength(i, l);
      if (a <= 0.0 || times[l] == kNever) continue;
      const double w = a / total;
      const double p = -std::expm1(-a);
      for (Time x = times[l] + hyper.delay(i, l); x <= block_end; ++x) {
        const double decay = std::exp(-a * static_cast<double>(x - times[l] - hyper.delay(i, l)));
        out.push_back({l, x, w * p * decay});
      }
    }
  }
  out.push_back({kNoParent, kNever,
                 std::exp(log_never_infected_mass(i, times, strength, hyper, block_end))});
  return out;
}

double log_joint_posterior(const InfectionState& state, const ObservationSet& data,
                           const ModelHyperparams& hyper, const ObservationModelSet& obs) {
  return log_joint_posterior(state, make_series_stats(data), hyper, obs, data.horizon());
}

double log_joint_posterior(const InfectionState& state, const std::vector<SeriesStats>& stats,
                           const ModelHyperparams& hyper, const ObservationModelSet& obs,
                           Time horizon) {
  if (!invariant_violation(state, hyper, horizon).empty()) return kNegInf;
  const int n = hyper.n();
  double acc = 0.0;
  for (Node i = 0; i < n; ++i) {
    acc += obs[i].node_data_loglik(stats[i], state.time[i], horizon);
    if (hyper.potential_parents[i].empty()) {
      // exogenous anchor (e.g. a known source): no structural term, but an
      // assigned parent would be inconsistent
      if (state.parent[i] != kNoParent) return kNegInf;
    } else {
      acc += log_parent_time_mass(i, state.parent[i], state.time[i], kNever, kNoParent,
                                  state.time, state.strength, hyper, horizon);
    }
    for (Node j : hyper.potential_parents[i])
      acc += log_gamma_prior(state.strength(i, j), hyper.kappa(i, j), hyper.theta(i, j));
    if (std::isinf(acc) && acc < 0.0) return kNegInf;
  }
  if (std::isnan(acc)) throw NumericalError("log_joint_posterior: NaN");
  return acc;
}

std::string invariant_violation(const InfectionState& state, const ModelHyperparams& hyper,
                                Time horizon) {
  const int n = hyper.n();
  if (state.size() != n || static_cast<int>(state.time.size()) != n ||
      state.strength.rows() != n || state.strength.cols() != n)
    return "state size does not match the hyperparameters";
  for (Node i = 0; i < n; ++i) {
    const Node z = state.parent[i];
    const Time t = state.time[i];
    if (t != kNever && (t < 1 || t > horizon))
      return "node " + std::to_string(i) + ": time outside [1..horizon]";
    if (z != kNoParent) {
      if (!hyper.in_support(i, z))
        return "node " + std::to_string(i) + ": parent outside the potential set";
      if (state.time[z] == kNever || (t != kNever && t - state.time[z] < hyper.delay(i, z)))
        return "node " + std::to_string(i) + ": parent not infected early enough";
    }
    if (t == kNever && z != kNoParent)
      return "node " + std::to_string(i) + ": never infected but has a parent";
    for (Node j = 0; j < n; ++j) {
      const double a = state.strength(i, j);
      if (hyper.in_support(i, j)) {
        if (!(a >= 0.0) || !std::isfinite(a))
          return "node " + std::to_string(i) + ": bad strength on a supported link";
      } else if (a != 0.0) {
        return "node " + std::to_string(i) + ": nonzero strength off support";
      }
    }
  }
  return {};
}

}  // namespace diffnet
