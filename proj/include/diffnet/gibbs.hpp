#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "diffnet/model.hpp"
#include "diffnet/rng.hpp"

namespace diffnet {

// Chain length bookkeeping: n_mcmc = n_burn + n_samples * n_thin, with at
// least one retained sample. validate() throws ConfigError otherwise.
struct McmcConfig {
  long n_mcmc = 20000;
  long n_burn = 1000;
  long n_thin = 10;
  uint64_t seed = 1;

  bool random_scan = false;        // random node visit order instead of 0..N-1
  bool fixed_strengths = false;    // skip strength updates (reduced sampler)
  int refinement_sweeps = 1;       // online: Gibbs sweeps after each MH step
  bool consistent_proposal = false;  // online: renormalize the parent proposal
                                     // so infected nodes never draw a null parent
  bool legacy_null_parent_sampling = false;  // label never-infected nodes with a
                                             // would-be parent (survival-split draw)

  long n_samples() const { return (n_mcmc - n_burn) / n_thin; }
  void validate() const;
};

struct Provenance {
  uint64_t seed = 0;
  std::vector<long> retained_iterations;
};

// Retained, equally weighted posterior draws for one block prefix.
struct ParticleSet {
  std::vector<InfectionState> particles;
  Block block;
  Provenance provenance;
};

enum class MapMode { kJoint, kMarginal };

// kJoint: the most repeated (parent, time) configuration (first occurrence
// wins ties), strengths averaged over the particles sharing it.
// kMarginal: per-node most frequent (parent, time) pair, strengths averaged
// over all particles.
InfectionState map_estimate(const ParticleSet& particles, MapMode mode);

// Everything a batch sweep needs, bundled once per run.
struct BatchProblem {
  const std::vector<SeriesStats>* stats;
  const ObservationModelSet* obs;
  const ModelHyperparams* hyper;
  Time horizon;
  ClampMap clamps;
};

// Conditional draw of node i's parent given its (fixed) infection time and
// the rest of the state. Throws InfeasibleStateError when t_i is finite and
// no potential parent is infected early enough.
Node sample_parent_conditional(Node i, const InfectionState& state, const ModelHyperparams& hyper,
                               Time horizon, Rng& rng);
// legacy_null_parent: draw a would-be parent label even when t_i is never
// (infected candidates weighted by survival, uninfected by choice weight).
Node sample_parent_conditional(Node i, const InfectionState& state, const ModelHyperparams& hyper,
                               Time horizon, Rng& rng, bool legacy_null_parent);

// Enumerated full conditional of node i's (parent, time) pair given the rest
// of the state: data term, own transmission term, children terms, and the
// survival masses of still-uninfected nodes that list i as a potential
// parent. Normalized. Used by the joint draw and by tests.
std::vector<ParentTimeMass> enumerate_time_conditional(Node i, const InfectionState& state,
                                                       const BatchProblem& prob);

// Joint (parent, time) draw from the conditional above.
std::pair<Node, Time> sample_time_conditional(Node i, const InfectionState& state,
                                              const BatchProblem& prob, Rng& rng);

// One slice-sampling move on strength(i, j) from its full conditional
// (gamma prior times node i's own parent/time mass). Returns the new value.
double sample_strength_conditional(Node i, Node j, const InfectionState& state,
                                   const BatchProblem& prob, Rng& rng);
double sample_strength_conditional(Node i, Node j, const InfectionState& state,
                                   const BatchProblem& prob, Rng& rng, bool legacy_null_parent);

// Systematic-sweep Gibbs over a horizon prefix. Exposed as a class so the
// online sampler can reuse block-1 runs and tests can step single sweeps.
class GibbsSampler {
 public:
  GibbsSampler(BatchProblem prob, const McmcConfig& cfg);

  void init_state(Rng& rng);         // prior-seeded valid starting point
  void sweep(Rng& rng);              // one full iteration over nodes
  const InfectionState& state() const { return state_; }
  void set_state(InfectionState s) { state_ = std::move(s); }

 private:
  BatchProblem prob_;
  McmcConfig cfg_;
  InfectionState state_;

  void update_node(Node i, Rng& rng);
  void update_strengths(Node i, Rng& rng);
};

// Full batch run: init, n_mcmc sweeps, burn-in dropped, every n_thin-th
// state retained. horizon == 0 means the full data horizon. Clamped nodes
// keep their given times (kNever if the clamp exceeds the horizon).
ParticleSet run_batch_gibbs(const ObservationSet& data, const ModelHyperparams& hyper,
                            const ObservationModelSet& obs, const McmcConfig& cfg,
                            const ClampMap& clamps = {}, Time horizon = 0);

}  // namespace diffnet
