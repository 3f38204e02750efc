#include "diffnet/smcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "diffnet/errors.hpp"
#include "diffnet/mathutil.hpp"
#include "diffnet/sampling.hpp"

namespace diffnet {

double transition_logdensity(const InfectionState& x, const InfectionState& x_prev,
                             const ModelHyperparams& hyper, Time block_end) {
  const int n = hyper.n();
  if (x.size() != n || x_prev.size() != n)
    throw ConfigError("transition: state size mismatch");
  double acc = 0.0;
  for (Node i = 0; i < n; ++i) {
    if (x_prev.time[i] != kNever) {
      // resolved in an earlier block: carried forward verbatim
      if (x.time[i] != x_prev.time[i] || x.parent[i] != x_prev.parent[i]) return kNegInf;
      for (Node j = 0; j < n; ++j)
        if (x.strength(i, j) != x_prev.strength(i, j)) return kNegInf;
      continue;
    }
    for (Node j : hyper.potential_parents[i])
      acc += log_gamma_prior(x.strength(i, j), hyper.kappa(i, j), hyper.theta(i, j));
    const double mass = log_parent_time_mass(i, x.parent[i], x.time[i], kNever, kNoParent,
                                             x.time, x.strength, hyper, block_end);
    if (mass == kNegInf) return kNegInf;
    acc += mass;
  }
  return acc;
}

namespace {

// In-block masses of the two-sided geometric centered at t_ml, plus the
// leftover mass assigned to never-infected. The leftover is at least r/2.
struct G2 {
  std::vector<double> mass;  // indexed by offset from block.first
  double leftover = 1.0;
};

G2 g2_masses(const Block& block, Time t_ml, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("proposal rate must lie in (0,1)");
  G2 out;
  out.mass.resize(block.length());
  double total = 0.0;
  for (Time t = block.first; t <= block.last; ++t) {
    const double m = 0.5 * r * std::pow(1.0 - r, std::abs(t - t_ml));
    out.mass[t - block.first] = m;
    total += m;
  }
  out.leftover = 1.0 - total;
  return out;
}

double gamma_draw(double kappa, double theta, Rng& rng) {
  std::gamma_distribution<double> d(kappa, theta);
  return d(rng);
}

double block_loglik(const InfectionState& x, const BatchProblem& prob, const Block& block) {
  double acc = 0.0;
  for (Node i = 0; i < x.size(); ++i)
    acc += (*prob.obs)[i].window_loglik((*prob.stats)[i], x.time[i], block.first, block.last);
  return acc;
}

}  // namespace

std::vector<Time> propose_times(const InfectionState& x_prev, const ProposalContext& ctx,
                                Rng& rng, double* logd) {
  const ModelHyperparams& hyper = *ctx.hyper;
  const int n = hyper.n();
  std::vector<Time> t(n);
  double acc = 0.0;
  for (Node i = 0; i < n; ++i) {
    if (x_prev.time[i] != kNever) {
      t[i] = x_prev.time[i];
      continue;
    }
    if (is_clamped(ctx.clamps, i)) {
      t[i] = effective_clamp(ctx.clamps, i, ctx.block.last);
      continue;
    }
    const G2 g2 = g2_masses(ctx.block, ctx.t_ml[i], hyper.proposal_rate[i]);
    std::vector<double> w(g2.mass);
    w.push_back(g2.leftover);
    const size_t pick = sample_from_weights(w, rng);
    if (pick == g2.mass.size()) {
      t[i] = kNever;
      acc += std::log(g2.leftover);
    } else {
      t[i] = ctx.block.first + static_cast<Time>(pick);
      acc += std::log(g2.mass[pick]);
    }
  }
  if (logd) *logd += acc;
  return t;
}

double times_proposal_logdensity(std::span<const Time> times, const InfectionState& x_prev,
                                 const ProposalContext& ctx) {
  const ModelHyperparams& hyper = *ctx.hyper;
  double acc = 0.0;
  for (Node i = 0; i < hyper.n(); ++i) {
    if (x_prev.time[i] != kNever) {
      if (times[i] != x_prev.time[i]) return kNegInf;
      continue;
    }
    if (is_clamped(ctx.clamps, i)) {
      if (times[i] != effective_clamp(ctx.clamps, i, ctx.block.last)) return kNegInf;
      continue;
    }
    const G2 g2 = g2_masses(ctx.block, ctx.t_ml[i], hyper.proposal_rate[i]);
    if (times[i] == kNever)
      acc += std::log(g2.leftover);
    else if (ctx.block.contains(times[i]))
      acc += std::log(g2.mass[times[i] - ctx.block.first]);
    else
      return kNegInf;
  }
  return acc;
}

Grid<double> propose_strengths(const InfectionState& x_prev, const ProposalContext& ctx,
                               Rng& rng, double* logd) {
  const ModelHyperparams& hyper = *ctx.hyper;
  const int n = hyper.n();
  Grid<double> a(n, n, 0.0);
  double acc = 0.0;
  for (Node i = 0; i < n; ++i) {
    if (x_prev.time[i] != kNever) {
      for (Node j = 0; j < n; ++j) a(i, j) = x_prev.strength(i, j);
      continue;
    }
    for (Node j : hyper.potential_parents[i]) {
      a(i, j) = gamma_draw(hyper.kappa(i, j), hyper.theta(i, j), rng);
      acc += log_gamma_prior(a(i, j), hyper.kappa(i, j), hyper.theta(i, j));
    }
  }
  if (logd) *logd += acc;
  return a;
}

double strengths_proposal_logdensity(const Grid<double>& strength, const InfectionState& x_prev,
                                     const ProposalContext& ctx) {
  const ModelHyperparams& hyper = *ctx.hyper;
  double acc = 0.0;
  for (Node i = 0; i < hyper.n(); ++i) {
    if (x_prev.time[i] != kNever) {
      for (Node j = 0; j < hyper.n(); ++j)
        if (strength(i, j) != x_prev.strength(i, j)) return kNegInf;
      continue;
    }
    for (Node j : hyper.potential_parents[i])
      acc += log_gamma_prior(strength(i, j), hyper.kappa(i, j), hyper.theta(i, j));
  }
  return acc;
}

namespace {

// Candidate weights of the parent stage for one newly infected node: infected
// potential parents weighted by strength, leftover mass on null.
struct ParentStage {
  std::vector<Node> cand;
  std::vector<double> weight;
  double leftover = 1.0;
};

ParentStage parent_stage(Node i, std::span<const Time> times, const Grid<double>& strength,
                         const ModelHyperparams& hyper, bool consistent) {
  ParentStage st;
  double total = 0.0;
  for (Node j : hyper.potential_parents[i]) total += std::max(strength(i, j), 0.0);
  if (total <= 0.0) return st;  // no usable weights: everything on null
  double covered = 0.0;
  for (Node j : hyper.potential_parents[i]) {
    if (times[j] == kNever || strength(i, j) <= 0.0) continue;
    st.cand.push_back(j);
    st.weight.push_back(strength(i, j) / total);
    covered += strength(i, j) / total;
  }
  st.leftover = std::max(0.0, 1.0 - covered);
  if (consistent && !st.cand.empty()) {
    for (double& w : st.weight) w /= covered;
    st.leftover = 0.0;
  }
  return st;
}

}  // namespace

std::vector<Node> propose_parents(std::span<const Time> times, const Grid<double>& strength,
                                  const InfectionState& x_prev, const ProposalContext& ctx,
                                  Rng& rng, double* logd) {
  const ModelHyperparams& hyper = *ctx.hyper;
  const int n = hyper.n();
  std::vector<Node> z(n, kNoParent);
  double acc = 0.0;
  for (Node i = 0; i < n; ++i) {
    if (x_prev.time[i] != kNever) {
      z[i] = x_prev.parent[i];
      continue;
    }
    if (times[i] == kNever) continue;  // still uninfected: null with probability 1
    const ParentStage st = parent_stage(i, times, strength, hyper, ctx.consistent);
    if (st.cand.empty()) continue;  // entire mass is leftover: null
    std::vector<double> w(st.weight);
    if (st.leftover > 0.0) w.push_back(st.leftover);
    const size_t pick = sample_from_weights(w, rng);
    if (pick < st.cand.size()) {
      z[i] = st.cand[pick];
      acc += std::log(st.weight[pick]);
    } else {
      acc += std::log(st.leftover);
    }
  }
  if (logd) *logd += acc;
  return z;
}

double parents_proposal_logdensity(std::span<const Node> parents, std::span<const Time> times,
                                   const Grid<double>& strength, const InfectionState& x_prev,
                                   const ProposalContext& ctx) {
  const ModelHyperparams& hyper = *ctx.hyper;
  double acc = 0.0;
  for (Node i = 0; i < hyper.n(); ++i) {
    if (x_prev.time[i] != kNever) {
      if (parents[i] != x_prev.parent[i]) return kNegInf;
      continue;
    }
    if (times[i] == kNever) {
      if (parents[i] != kNoParent) return kNegInf;
      continue;
    }
    const ParentStage st = parent_stage(i, times, strength, hyper, ctx.consistent);
    if (parents[i] == kNoParent) {
      if (st.cand.empty()) continue;  // forced null: probability 1
      if (st.leftover <= 0.0) return kNegInf;
      acc += std::log(st.leftover);
      continue;
    }
    const auto it = std::find(st.cand.begin(), st.cand.end(), parents[i]);
    if (it == st.cand.end()) return kNegInf;
    acc += std::log(st.weight[it - st.cand.begin()]);
  }
  return acc;
}

InfectionState propose_state(const InfectionState& x_prev, const ProposalContext& ctx, Rng& rng,
                             double* logd) {
  InfectionState x = InfectionState::never_infected(ctx.hyper->n());
  x.time = propose_times(x_prev, ctx, rng, logd);
  x.strength = propose_strengths(x_prev, ctx, rng, logd);
  x.parent = propose_parents(x.time, x.strength, x_prev, ctx, rng, logd);
  return x;
}

double proposal_logdensity(const InfectionState& x, const InfectionState& x_prev,
                           const ProposalContext& ctx) {
  double acc = times_proposal_logdensity(x.time, x_prev, ctx);
  if (acc == kNegInf) return kNegInf;
  const double a = strengths_proposal_logdensity(x.strength, x_prev, ctx);
  if (a == kNegInf) return kNegInf;
  const double z = parents_proposal_logdensity(x.parent, x.time, x.strength, x_prev, ctx);
  if (z == kNegInf) return kNegInf;
  return acc + a + z;
}

double mh_acceptance(const InfectionState& x_star, const InfectionState& x_prev_star,
                     const InfectionState& x_curr, const InfectionState& x_prev_curr,
                     const BatchProblem& block_data, const ProposalContext& ctx) {
  const double log_num = block_loglik(x_star, block_data, ctx.block) +
                         transition_logdensity(x_star, x_prev_star, *ctx.hyper, ctx.block.last) +
                         proposal_logdensity(x_curr, x_prev_curr, ctx);
  const double log_den = block_loglik(x_curr, block_data, ctx.block) +
                         transition_logdensity(x_curr, x_prev_curr, *ctx.hyper, ctx.block.last) +
                         proposal_logdensity(x_star, x_prev_star, ctx);
  if (std::isnan(log_num) || std::isnan(log_den))
    throw NumericalError("mh_acceptance: NaN in the log ratio");
  if (log_num == kNegInf) return 0.0;
  if (log_den == kNegInf) return 1.0;
  return std::min(1.0, std::exp(log_num - log_den));
}

void refinement_step(InfectionState& x, const InfectionState& anchor,
                     const BatchProblem& block_data, const ProposalContext& ctx,
                     const McmcConfig& cfg, Rng& rng) {
  const ModelHyperparams& hyper = *ctx.hyper;
  const Block& block = ctx.block;
  const int n = hyper.n();
  std::vector<Node> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int s = 0; s < cfg.refinement_sweeps; ++s) {
    if (cfg.random_scan) std::shuffle(order.begin(), order.end(), rng);
    for (Node i : order) {
      if (anchor.time[i] != kNever) {
        // settled before this block: frozen at the anchor's assignment
        x.time[i] = anchor.time[i];
        x.parent[i] = anchor.parent[i];
        for (Node j = 0; j < n; ++j) x.strength(i, j) = anchor.strength(i, j);
        continue;
      }
      const auto& pi = hyper.potential_parents[i];
      if (is_clamped(ctx.clamps, i)) {
        const Time ct = effective_clamp(ctx.clamps, i, block.last);
        if (ct == kNever || pi.empty()) {
          x.time[i] = ct;
          x.parent[i] = kNoParent;
        } else {
          // honor the clamp once a feasible parent is infected; until then
          // leave the node unresolved so the state keeps positive density
          bool feasible = false;
          for (Node j : pi)
            if (x.time[j] != kNever && ct - x.time[j] >= hyper.delay(i, j) &&
                x.strength(i, j) > 0.0)
              feasible = true;
          if (feasible) {
            x.time[i] = ct;
            x.parent[i] = sample_parent_conditional(i, x, hyper, block.last, rng);
          } else {
            x.time[i] = kNever;
            x.parent[i] = kNoParent;
          }
        }
      } else if (x.time[i] != kNever) {
        if (pi.empty())
          throw InfeasibleStateError("node " + std::to_string(i) +
                                     ": infected without potential parents");
        x.parent[i] = sample_parent_conditional(i, x, hyper, block.last, rng);
        // time over the in-block window permitted by the parent and children
        const Node z = x.parent[i];
        Time lo = std::max(block.first, x.time[z] + hyper.delay(i, z));
        Time hi = block.last;
        for (Node k = 0; k < n; ++k)
          if (k != i && x.parent[k] == i) hi = std::min(hi, x.time[k] - hyper.delay(k, i));
        std::vector<Time> cand;
        std::vector<double> logw;
        for (Time t = lo; t <= hi; ++t) {
          double lw =
              (*block_data.obs)[i].window_loglik((*block_data.stats)[i], t, block.first,
                                                 block.last) +
              log_geometric_transmission(t, x.time[z], x.strength(i, z), block.last,
                                         hyper.delay(i, z));
          for (Node k = 0; k < n; ++k) {
            if (k == i || x.parent[k] != i) continue;
            lw += log_geometric_transmission(x.time[k], t, x.strength(k, i), block.last,
                                             hyper.delay(k, i));
          }
          if (lw > kNegInf) {
            cand.push_back(t);
            logw.push_back(lw);
          }
        }
        if (cand.empty())
          throw InfeasibleStateError("node " + std::to_string(i) + ": empty refinement window");
        x.time[i] = cand[sample_from_log_weights(logw, rng)];
      }
      // strengths: fresh prior draws while unresolved, slice moves once infected
      for (Node j : pi) {
        if (x.time[i] == kNever)
          x.strength(i, j) = gamma_draw(hyper.kappa(i, j), hyper.theta(i, j), rng);
        else
          x.strength(i, j) = sample_strength_conditional(i, j, x, block_data, rng);
      }
    }
  }
}

namespace {

InfectionState null_extension(const InfectionState& x_prev, const ModelHyperparams& hyper,
                              Rng& rng) {
  InfectionState x = x_prev;
  for (Node i = 0; i < hyper.n(); ++i) {
    if (x_prev.time[i] != kNever) continue;
    x.parent[i] = kNoParent;
    x.time[i] = kNever;
    for (Node j : hyper.potential_parents[i])
      x.strength(i, j) = gamma_draw(hyper.kappa(i, j), hyper.theta(i, j), rng);
  }
  return x;
}

BlockResult finish_block(ParticleSet particles, double acceptance) {
  BlockResult r;
  r.map_joint = map_estimate(particles, MapMode::kJoint);
  r.map_marginal = map_estimate(particles, MapMode::kMarginal);
  r.particles = std::move(particles);
  r.acceptance_rate = acceptance;
  return r;
}

}  // namespace

std::vector<BlockResult> run_online(const ObservationSet& data, const ModelHyperparams& hyper,
                                    const ObservationModelSet& obs, const McmcConfig& cfg,
                                    const ClampMap& clamps, const ProgressSink& progress,
                                    long progress_every) {
  cfg.validate();
  data.validate();
  const std::vector<Block> blocks =
      data.blocks.empty() ? make_blocks(data.horizon(), 1) : data.blocks;
  for (const auto& [node, time] : clamps) {
    if (node < 0 || node >= hyper.n()) throw ConfigError("clamp on an unknown node");
    if (hyper.potential_parents[node].empty() && time != kNever && time > blocks.front().last &&
        time <= data.horizon())
      throw ConfigError("a parentless node can only be clamped within the first block");
  }

  std::vector<BlockResult> results;
  results.push_back(finish_block(
      run_batch_gibbs(data, hyper, obs, cfg, clamps, blocks.front().last), 1.0));
  if (blocks.size() == 1) return results;

  const auto stats = make_series_stats(data);
  for (size_t bi = 1; bi < blocks.size(); ++bi) {
    const Block& block = blocks[bi];
    Rng rng(derive_seed(cfg.seed, bi));
    ProposalContext ctx;
    ctx.hyper = &hyper;
    ctx.block = block;
    ctx.clamps = clamps;
    ctx.consistent = cfg.consistent_proposal;
    ctx.t_ml.resize(hyper.n());
    for (Node i = 0; i < hyper.n(); ++i)
      ctx.t_ml[i] = obs[i].ml_changepoint(stats[i], block.first, block.last);
    BatchProblem prob{&stats, &obs, &hyper, block.last, clamps};

    const auto& prev = results.back().particles.particles;
    std::uniform_int_distribution<size_t> pick_anchor(0, prev.size() - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    InfectionState x_prev_curr = prev[pick_anchor(rng)];
    InfectionState x_curr = null_extension(x_prev_curr, hyper, rng);

    ParticleSet particles;
    particles.block = block;
    particles.provenance.seed = cfg.seed;
    particles.particles.reserve(cfg.n_samples());
    long accepted = 0;
    for (long m = 1; m <= cfg.n_mcmc; ++m) {
      const InfectionState& x_prev_star = prev[pick_anchor(rng)];
      const InfectionState x_star = propose_state(x_prev_star, ctx, rng, nullptr);
      const double rho = mh_acceptance(x_star, x_prev_star, x_curr, x_prev_curr, prob, ctx);
      if (unif(rng) < rho) {
        x_curr = x_star;
        x_prev_curr = x_prev_star;
        ++accepted;
      }
      refinement_step(x_curr, x_prev_curr, prob, ctx, cfg, rng);
      if (m > cfg.n_burn && (m - cfg.n_burn) % cfg.n_thin == 0) {
        particles.particles.push_back(x_curr);
        particles.provenance.retained_iterations.push_back(m);
      }
      if (progress && progress_every > 0 && m % progress_every == 0) {
        BlockProgress p;
        p.block = static_cast<int>(bi) + 1;
        p.iteration = m;
        p.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(m);
        p.log_posterior = block_loglik(x_curr, prob, block) +
                          transition_logdensity(x_curr, x_prev_curr, hyper, block.last);
        progress(p);
      }
    }
    results.push_back(finish_block(std::move(particles),
                                   static_cast<double>(accepted) / static_cast<double>(cfg.n_mcmc)));
  }
  return results;
}

}  // namespace diffnet
