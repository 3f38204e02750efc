#include "diffnet/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "diffnet/errors.hpp"
#include "diffnet/mathutil.hpp"
#include "diffnet/sampling.hpp"

namespace diffnet {

void McmcConfig::validate() const {
  if (n_burn < 0 || n_thin < 1) throw ConfigError("mcmc: n_burn >= 0 and n_thin >= 1 required");
  if (n_mcmc <= n_burn) throw ConfigError("mcmc: n_mcmc must exceed n_burn");
  if ((n_mcmc - n_burn) % n_thin != 0)
    throw ConfigError("mcmc: n_mcmc - n_burn must be a multiple of n_thin");
  if (n_samples() < 1) throw ConfigError("mcmc: no retained samples");
  if (refinement_sweeps < 1) throw ConfigError("mcmc: refinement_sweeps must be >= 1");
}

namespace {

// Survival factors of still-uninfected nodes that list i as a potential
// parent; they tie node i's time to the rest of the state, so the enumerated
// conditional has to carry them. t_i must already be written into times.
double log_uninfected_dependents(Node i, std::span<const Time> times,
                                 const InfectionState& state, const ModelHyperparams& hyper,
                                 Time horizon) {
  double acc = 0.0;
  const int n = hyper.n();
  for (Node m = 0; m < n; ++m) {
    if (m == i || times[m] != kNever) continue;
    if (!hyper.in_support(m, i)) continue;
    acc += log_never_infected_mass(m, times, state.strength, hyper, horizon);
  }
  return acc;
}

// Legacy labelled-parent variant: an uninfected node m keeps a would-be
// parent z_m, and only the survival factor of the m<-i link varies with t_i.
double log_uninfected_dependents_legacy(Node i, std::span<const Time> times,
                                        const InfectionState& state,
                                        const ModelHyperparams& hyper, Time horizon) {
  double acc = 0.0;
  const int n = hyper.n();
  for (Node m = 0; m < n; ++m) {
    if (m == i || times[m] != kNever || state.parent[m] != i) continue;
    if (times[i] == kNever) continue;  // would-be parent never fired: factor 1
    acc += log_geometric_transmission(kNever, times[i], state.strength(m, i), horizon,
                                      hyper.delay(m, i));
  }
  return acc;
}

double log_children_terms(Node i, Time t_i, const InfectionState& state,
                          const ModelHyperparams& hyper, Time horizon) {
  double acc = 0.0;
  const int n = hyper.n();
  for (Node k = 0; k < n; ++k) {
    if (k == i || state.parent[k] != i) continue;
    if (t_i == kNever || state.time[k] == kNever ||
        state.time[k] - t_i < hyper.delay(k, i))
      return kNegInf;
    acc += log_geometric_transmission(state.time[k], t_i, state.strength(k, i), horizon,
                                      hyper.delay(k, i));
  }
  return acc;
}

bool has_children(Node i, const InfectionState& state) {
  for (Node k = 0; k < state.size(); ++k)
    if (k != i && state.parent[k] == i) return true;
  return false;
}

// Latest time node i may take without starving its children.
Time children_upper_bound(Node i, const InfectionState& state, const ModelHyperparams& hyper,
                          Time horizon) {
  Time bound = horizon;
  for (Node k = 0; k < state.size(); ++k) {
    if (k == i || state.parent[k] != i) continue;
    bound = std::min(bound, state.time[k] - hyper.delay(k, i));
  }
  return bound;
}

}  // namespace

Node sample_parent_conditional(Node i, const InfectionState& state, const ModelHyperparams& hyper,
                               Time horizon, Rng& rng) {
  return sample_parent_conditional(i, state, hyper, horizon, rng, false);
}

Node sample_parent_conditional(Node i, const InfectionState& state, const ModelHyperparams& hyper,
                               Time horizon, Rng& rng, bool legacy_null_parent) {
  const Time t_i = state.time[i];
  const auto& pi = hyper.potential_parents[i];
  if (t_i == kNever && !legacy_null_parent) return kNoParent;
  if (pi.empty()) {
    if (t_i == kNever) return kNoParent;
    throw InfeasibleStateError("node " + std::to_string(i) + ": infected but has no potential parents");
  }
  double total = 0.0;
  for (Node j : pi) total += std::max(state.strength(i, j), 0.0);
  if (total <= 0.0)
    throw InfeasibleStateError("node " + std::to_string(i) + ": all candidate strengths are zero");
  std::vector<Node> cand;
  std::vector<double> logw;
  for (Node j : pi) {
    const double a = state.strength(i, j);
    if (a <= 0.0) continue;
    const double lw = std::log(a) - std::log(total);
    if (t_i != kNever) {
      const Time t_j = state.time[j];
      if (t_j == kNever || t_i - t_j < hyper.delay(i, j)) continue;
      cand.push_back(j);
      logw.push_back(lw + log_geometric_transmission(t_i, t_j, a, horizon, hyper.delay(i, j)));
    } else {
      // legacy labelling: infected candidates weighted by survival, the rest
      // by their choice weight alone
      cand.push_back(j);
      logw.push_back(state.time[j] == kNever
                         ? lw
                         : lw + log_geometric_transmission(kNever, state.time[j], a, horizon,
                                                           hyper.delay(i, j)));
    }
  }
  if (cand.empty())
    throw InfeasibleStateError("node " + std::to_string(i) + ": no feasible parent for time " +
                               std::to_string(t_i));
  return cand[sample_from_log_weights(logw, rng)];
}

std::vector<ParentTimeMass> enumerate_time_conditional(Node i, const InfectionState& state,
                                                       const BatchProblem& prob) {
  const ModelHyperparams& hyper = *prob.hyper;
  const ObservationModel& obs = (*prob.obs)[i];
  const SeriesStats& stats = (*prob.stats)[i];
  const Time horizon = prob.horizon;

  std::vector<Node> cand_parent;
  std::vector<Time> cand_time;
  std::vector<double> logw;
  std::vector<Time> times(state.time.begin(), state.time.end());

  const Time upper = children_upper_bound(i, state, hyper, horizon);
  double total = 0.0;
  for (Node j : hyper.potential_parents[i]) total += std::max(state.strength(i, j), 0.0);

  for (Node j : hyper.potential_parents[i]) {
    const double a = state.strength(i, j);
    if (a <= 0.0 || state.time[j] == kNever || total <= 0.0) continue;
    const double log_w = std::log(a) - std::log(total);
    for (Time x = state.time[j] + hyper.delay(i, j); x <= upper; ++x) {
      times[i] = x;
      double lw = obs.node_data_loglik(stats, x, horizon) + log_w +
                  log_geometric_transmission(x, state.time[j], a, horizon, hyper.delay(i, j)) +
                  log_children_terms(i, x, state, hyper, horizon) +
                  log_uninfected_dependents(i, times, state, hyper, horizon);
      if (lw > kNegInf) {
        cand_parent.push_back(j);
        cand_time.push_back(x);
        logw.push_back(lw);
      }
    }
  }
  if (!has_children(i, state)) {
    times[i] = kNever;
    double lw = obs.node_data_loglik(stats, kNever, horizon) +
                log_never_infected_mass(i, times, state.strength, hyper, horizon) +
                log_uninfected_dependents(i, times, state, hyper, horizon);
    if (lw > kNegInf) {
      cand_parent.push_back(kNoParent);
      cand_time.push_back(kNever);
      logw.push_back(lw);
    }
  }
  if (logw.empty())
    throw InfeasibleStateError("node " + std::to_string(i) +
                               ": no feasible (parent, time) assignment");
  const double norm = log_sum_exp(logw);
  std::vector<ParentTimeMass> out(logw.size());
  for (size_t k = 0; k < logw.size(); ++k)
    out[k] = {cand_parent[k], cand_time[k], std::exp(logw[k] - norm)};
  return out;
}

std::pair<Node, Time> sample_time_conditional(Node i, const InfectionState& state,
                                              const BatchProblem& prob, Rng& rng) {
  const auto cond = enumerate_time_conditional(i, state, prob);
  std::vector<double> w(cond.size());
  for (size_t k = 0; k < cond.size(); ++k) w[k] = cond[k].mass;
  const size_t pick = sample_from_weights(w, rng);
  return {cond[pick].parent, cond[pick].time};
}

namespace {

// Legacy time draw: parent label fixed, survival-labelled uninfected
// dependents, null time allowed only without children.
std::pair<Node, Time> sample_time_conditional_legacy(Node i, const InfectionState& state,
                                                     const BatchProblem& prob, Rng& rng) {
  const ModelHyperparams& hyper = *prob.hyper;
  const ObservationModel& obs = (*prob.obs)[i];
  const SeriesStats& stats = (*prob.stats)[i];
  const Time horizon = prob.horizon;
  const Node z = state.parent[i];

  if (z == kNoParent || state.time[z] == kNever) {
    if (has_children(i, state))
      throw InfeasibleStateError("node " + std::to_string(i) +
                                 ": children without an infected parent");
    return {z, kNever};
  }
  const double a = state.strength(i, z);
  std::vector<Time> cand;
  std::vector<double> logw;
  std::vector<Time> times(state.time.begin(), state.time.end());
  const Time upper = children_upper_bound(i, state, hyper, horizon);
  for (Time x = state.time[z] + hyper.delay(i, z); x <= upper; ++x) {
    times[i] = x;
    double lw = obs.node_data_loglik(stats, x, horizon) +
                log_geometric_transmission(x, state.time[z], a, horizon, hyper.delay(i, z)) +
                log_children_terms(i, x, state, hyper, horizon) +
                log_uninfected_dependents_legacy(i, times, state, hyper, horizon);
    if (lw > kNegInf) {
      cand.push_back(x);
      logw.push_back(lw);
    }
  }
  if (!has_children(i, state)) {
    cand.push_back(kNever);
    logw.push_back(obs.node_data_loglik(stats, kNever, horizon) +
                   log_geometric_transmission(kNever, state.time[z], a, horizon,
                                              hyper.delay(i, z)));
  }
  if (logw.empty())
    throw InfeasibleStateError("node " + std::to_string(i) + ": empty legacy time support");
  return {z, cand[sample_from_log_weights(logw, rng)]};
}

double legacy_own_mass(Node i, const InfectionState& state, const ModelHyperparams& hyper,
                       Time horizon) {
  const Node z = state.parent[i];
  if (z == kNoParent) return 0.0;
  std::vector<double> strengths;
  strengths.reserve(hyper.potential_parents[i].size());
  for (Node j : hyper.potential_parents[i]) strengths.push_back(state.strength(i, j));
  double acc = log_parent_choice(z, hyper.potential_parents[i], strengths);
  if (state.time[z] != kNever)
    acc += log_geometric_transmission(state.time[i], state.time[z], state.strength(i, z), horizon,
                                      hyper.delay(i, z));
  return acc;
}

}  // namespace

double sample_strength_conditional(Node i, Node j, const InfectionState& state,
                                   const BatchProblem& prob, Rng& rng) {
  return sample_strength_conditional(i, j, state, prob, rng, false);
}

double sample_strength_conditional(Node i, Node j, const InfectionState& state,
                                   const BatchProblem& prob, Rng& rng, bool legacy_null_parent) {
  const ModelHyperparams& hyper = *prob.hyper;
  if (!hyper.in_support(i, j)) throw ConfigError("strength update outside the support");
  InfectionState work = state;  // scratch copy so the target can vary one entry
  const bool exogenous = hyper.potential_parents[i].empty();
  auto log_target = [&](double a) {
    work.strength(i, j) = a;
    double acc = log_gamma_prior(a, hyper.kappa(i, j), hyper.theta(i, j));
    if (exogenous) return acc;
    if (legacy_null_parent && state.time[i] == kNever)
      acc += legacy_own_mass(i, work, hyper, prob.horizon);
    else
      acc += log_parent_time_mass(i, work.parent[i], work.time[i], kNever, kNoParent, work.time,
                                  work.strength, hyper, prob.horizon);
    return acc;
  };
  return slice_sample_positive(log_target, state.strength(i, j), hyper.theta(i, j), 50, rng);
}

GibbsSampler::GibbsSampler(BatchProblem prob, const McmcConfig& cfg)
    : prob_(std::move(prob)), cfg_(cfg) {
  cfg_.validate();
  prob_.hyper->validate();
}

void GibbsSampler::init_state(Rng&) {
  const int n = prob_.hyper->n();
  InfectionState s = InfectionState::never_infected(n);
  for (Node i = 0; i < n; ++i)
    for (Node j : prob_.hyper->potential_parents[i])
      s.strength(i, j) = prob_.hyper->kappa(i, j) * prob_.hyper->theta(i, j);
  // clamped nodes start at their pinned times; everything else starts
  // uninfected and gets resolved by the sweeps
  for (Node i = 0; i < n; ++i) {
    const Time c = effective_clamp(prob_.clamps, i, prob_.horizon);
    if (is_clamped(prob_.clamps, i)) s.time[i] = c;
  }
  state_ = std::move(s);
}

void GibbsSampler::update_node(Node i, Rng& rng) {
  if (is_clamped(prob_.clamps, i)) {
    // time pinned; the parent label is still free when the node is infected
    if (state_.time[i] != kNever && !prob_.hyper->potential_parents[i].empty())
      state_.parent[i] = sample_parent_conditional(i, state_, *prob_.hyper, prob_.horizon, rng,
                                                   cfg_.legacy_null_parent_sampling);
    else if (cfg_.legacy_null_parent_sampling && !prob_.hyper->potential_parents[i].empty())
      state_.parent[i] = sample_parent_conditional(i, state_, *prob_.hyper, prob_.horizon, rng,
                                                   true);
    return;
  }
  if (prob_.hyper->potential_parents[i].empty()) return;  // exogenous: nothing to resolve
  if (cfg_.legacy_null_parent_sampling) {
    state_.parent[i] =
        sample_parent_conditional(i, state_, *prob_.hyper, prob_.horizon, rng, true);
    auto [z, t] = sample_time_conditional_legacy(i, state_, prob_, rng);
    state_.parent[i] = z;
    state_.time[i] = t;
  } else {
    auto [z, t] = sample_time_conditional(i, state_, prob_, rng);
    state_.parent[i] = z;
    state_.time[i] = t;
  }
}

void GibbsSampler::update_strengths(Node i, Rng& rng) {
  for (Node j : prob_.hyper->potential_parents[i])
    state_.strength(i, j) = sample_strength_conditional(i, j, state_, prob_, rng,
                                                        cfg_.legacy_null_parent_sampling);
}

void GibbsSampler::sweep(Rng& rng) {
  const int n = prob_.hyper->n();
  std::vector<Node> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (cfg_.random_scan) std::shuffle(order.begin(), order.end(), rng);
  for (Node i : order) {
    update_node(i, rng);
    if (!cfg_.fixed_strengths) update_strengths(i, rng);
  }
}

ParticleSet run_batch_gibbs(const ObservationSet& data, const ModelHyperparams& hyper,
                            const ObservationModelSet& obs, const McmcConfig& cfg,
                            const ClampMap& clamps, Time horizon) {
  if (horizon == 0) horizon = data.horizon();
  if (horizon < 2 || horizon > data.horizon()) throw ConfigError("batch: bad horizon");
  if (static_cast<int>(obs.size()) != hyper.n())
    throw ConfigError("batch: one observation model per node required");
  const auto stats = make_series_stats(data);
  BatchProblem prob{&stats, &obs, &hyper, horizon, clamps};

  GibbsSampler sampler(prob, cfg);
  Rng rng(cfg.seed);
  sampler.init_state(rng);

  ParticleSet out;
  out.block = Block{1, 1, horizon};
  out.provenance.seed = cfg.seed;
  out.particles.reserve(cfg.n_samples());
  for (long m = 1; m <= cfg.n_mcmc; ++m) {
    sampler.sweep(rng);
    if (m > cfg.n_burn && (m - cfg.n_burn) % cfg.n_thin == 0) {
      out.particles.push_back(sampler.state());
      out.provenance.retained_iterations.push_back(m);
    }
  }
  return out;
}

namespace {

// (parent, time) pairs flattened for counting; strengths handled separately.
std::vector<std::pair<Node, Time>> key_of(const InfectionState& s) {
  std::vector<std::pair<Node, Time>> key(s.size());
  for (int i = 0; i < s.size(); ++i) key[i] = {s.parent[i], s.time[i]};
  return key;
}

}  // namespace

InfectionState map_estimate(const ParticleSet& particles, MapMode mode) {
  const auto& ps = particles.particles;
  if (ps.empty()) throw ConfigError("map_estimate: empty particle set");
  const int n = ps.front().size();

  if (mode == MapMode::kJoint) {
    std::map<std::vector<std::pair<Node, Time>>, int> counts;
    for (const auto& p : ps) ++counts[key_of(p)];
    int best = 0;
    const std::vector<std::pair<Node, Time>>* best_key = nullptr;
    for (const auto& p : ps) {  // first occurrence wins ties
      const auto key = key_of(p);
      const int c = counts[key];
      if (c > best) {
        best = c;
        best_key = &counts.find(key)->first;
      }
    }
    InfectionState out = InfectionState::never_infected(n);
    for (int i = 0; i < n; ++i) {
      out.parent[i] = (*best_key)[i].first;
      out.time[i] = (*best_key)[i].second;
    }
    int used = 0;
    for (const auto& p : ps) {
      if (key_of(p) != *best_key) continue;
      ++used;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.strength(i, j) += p.strength(i, j);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.strength(i, j) /= used;
    return out;
  }

  InfectionState out = InfectionState::never_infected(n);
  for (int i = 0; i < n; ++i) {
    std::map<std::pair<Node, Time>, int> counts;
    for (const auto& p : ps) ++counts[{p.parent[i], p.time[i]}];
    int best = 0;
    std::pair<Node, Time> best_pair{kNoParent, kNever};
    for (const auto& p : ps) {
      const std::pair<Node, Time> pair{p.parent[i], p.time[i]};
      const int c = counts[pair];
      if (c > best) {
        best = c;
        best_pair = pair;
      }
    }
    out.parent[i] = best_pair.first;
    out.time[i] = best_pair.second;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (const auto& p : ps) acc += p.strength(i, j);
      out.strength(i, j) = acc / static_cast<double>(ps.size());
    }
  }
  return out;
}

}  // namespace diffnet
