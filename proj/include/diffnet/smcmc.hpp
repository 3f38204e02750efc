#pragma once

#include <functional>
#include <vector>

#include "diffnet/gibbs.hpp"

namespace diffnet {

// Log-density of moving from the previous block's state to x within the
// current block (ending at block_end): delta terms for already infected
// nodes (parent, time and strength row must be copied exactly), the
// node_infection_law masses for newly resolved nodes, and gamma prior terms
// for the redrawn strength rows of previously uninfected nodes. -inf when x
// is unreachable (e.g. a rewritten history, or a finite time with a null
// parent).
double transition_logdensity(const InfectionState& x, const InfectionState& x_prev,
                             const ModelHyperparams& hyper, Time block_end);

// Shared inputs of the per-block proposal.
struct ProposalContext {
  const ModelHyperparams* hyper;
  std::vector<Time> t_ml;  // per-node ML changepoint within the block
  Block block;
  ClampMap clamps;             // absolute clamps (not yet prefix-filtered)
  bool consistent = false;     // renormalize the parent stage over infected candidates
};

// Stage 1: infection times. Previously infected nodes copy; previously
// uninfected ones draw from a two-sided geometric over the block's indices
// centered at their ML changepoint (rate hyper->proposal_rate), leftover
// mass on kNever. Clamped nodes are set deterministically.
std::vector<Time> propose_times(const InfectionState& x_prev, const ProposalContext& ctx,
                                Rng& rng, double* logd);
double times_proposal_logdensity(std::span<const Time> times, const InfectionState& x_prev,
                                 const ProposalContext& ctx);

// Stage 2: strength rows. Copied where the node was already infected, fresh
// gamma draws otherwise.
Grid<double> propose_strengths(const InfectionState& x_prev, const ProposalContext& ctx,
                               Rng& rng, double* logd);
double strengths_proposal_logdensity(const Grid<double>& strength, const InfectionState& x_prev,
                                     const ProposalContext& ctx);

// Stage 3: parents, given the proposed times and strengths. Copy for nodes
// infected before the block; null for still-uninfected nodes; otherwise a
// draw over currently infected potential parents weighted by strength with
// the leftover mass on null (a null parent for an infected node is
// proposable but has zero transition density, so it is always rejected;
// ctx.consistent folds that leftover back onto the candidates).
std::vector<Node> propose_parents(std::span<const Time> times, const Grid<double>& strength,
                                  const InfectionState& x_prev, const ProposalContext& ctx,
                                  Rng& rng, double* logd);
double parents_proposal_logdensity(std::span<const Node> parents, std::span<const Time> times,
                                   const Grid<double>& strength, const InfectionState& x_prev,
                                   const ProposalContext& ctx);

InfectionState propose_state(const InfectionState& x_prev, const ProposalContext& ctx, Rng& rng,
                             double* logd);
double proposal_logdensity(const InfectionState& x, const InfectionState& x_prev,
                           const ProposalContext& ctx);

// Acceptance probability of ((x_star, x_prev_star)) against the current pair:
// block-data likelihood ratio x transition ratio x reverse/forward proposal
// ratio, clipped to [0, 1]. Throws NumericalError on NaN.
double mh_acceptance(const InfectionState& x_star, const InfectionState& x_prev_star,
                     const InfectionState& x_curr, const InfectionState& x_prev_curr,
                     const BatchProblem& block_data, const ProposalContext& ctx);

// One (or cfg.refinement_sweeps) Gibbs sweeps of x given its anchor state:
// nodes infected before the block are frozen; still-uninfected and newly
// infected nodes are resampled from their block-restricted conditionals
// (block data term, transition masses, children terms; strengths from the
// gamma prior while uninfected, slice moves once infected).
void refinement_step(InfectionState& x, const InfectionState& anchor,
                     const BatchProblem& block_data, const ProposalContext& ctx,
                     const McmcConfig& cfg, Rng& rng);

struct BlockProgress {
  int block = 0;
  long iteration = 0;
  double acceptance_rate = 0.0;
  double log_posterior = 0.0;  // block-data loglik + transition logdensity
};
using ProgressSink = std::function<void(const BlockProgress&)>;

struct BlockResult {
  ParticleSet particles;
  InfectionState map_joint;
  InfectionState map_marginal;
  double acceptance_rate = 0.0;  // 1.0 for the Gibbs-only first block
};

// Sequential posterior tracking over the data's block partition: block 1 by
// batch Gibbs, later blocks by anchored MH with refinement. With a single
// block this is exactly run_batch_gibbs. progress_every == 0 silences
// progress records.
std::vector<BlockResult> run_online(const ObservationSet& data, const ModelHyperparams& hyper,
                                    const ObservationModelSet& obs, const McmcConfig& cfg,
                                    const ClampMap& clamps = {},
                                    const ProgressSink& progress = nullptr,
                                    long progress_every = 0);

}  // namespace diffnet
