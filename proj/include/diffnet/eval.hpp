#pragma once

#include <map>
#include <span>
#include <vector>

#include "diffnet/gibbs.hpp"
#include "diffnet/types.hpp"

namespace diffnet {

struct DeviationReport {
  double d_time = 0.0;       // mean absolute infection-time deviation
  double d_parent = 0.0;     // number of nodes with a different parent
  double d_strength = 0.0;   // mean absolute strength deviation over supported links
  std::vector<double> percent_correct_parent;  // per node, over particles
};

// Mean |estimate - truth| after null handling: values beyond batch_end are
// treated as null, and nulls stand in as batch_end. Symmetric in its
// arguments. Throws DataError on length mismatch.
double deviation_times(std::span<const Time> estimate, std::span<const Time> truth,
                       Time batch_end);

// Number of nodes whose parents differ (null is an ordinary label).
double deviation_parents(std::span<const Node> estimate, std::span<const Node> truth);

// Mean |estimate - truth| over the supported links. Throws DataError if the
// supports disagree with the hyperparameters' sets.
double deviation_strengths(const Grid<double>& estimate, const Grid<double>& truth,
                           const ModelHyperparams& hyper);

// Share of particles agreeing with the true parent, per node, in percent.
std::vector<double> percent_correct_parents(const ParticleSet& particles,
                                            std::span<const Node> truth);

struct PredictedTimes {
  std::vector<double> mean;
  std::vector<double> q25;
  std::vector<double> q75;
};

// Expected-delay forecast per particle, resolved along parent chains:
// nodes with a null parent anchor at source_times (falling back to the
// placeholder when absent), every other node adds 1/(1 - exp(-strength))
// to its parent's forecast. Band = 25th..75th percentile over particles.
PredictedTimes predict_infection_times(const ParticleSet& particles,
                                       const std::map<Node, double>& source_times,
                                       double placeholder);

}  // namespace diffnet
