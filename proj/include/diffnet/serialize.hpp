#pragma once

#include <string>

#include "json.hpp"

#include "diffnet/adapters.hpp"
#include "diffnet/eval.hpp"
#include "diffnet/gibbs.hpp"
#include "diffnet/synth.hpp"

namespace diffnet {

using json = nlohmann::json;

// Canonical form: compact, keys sorted, every float printed with 12
// significant digits. Reruns with the same seed must produce byte-identical
// files, and dump(load(dump(x))) == dump(x).
std::string canonical_dump(const json& j);
void write_canonical_json(const std::string& path, const json& j);
json load_json(const std::string& path);  // ParseError on malformed input

json state_to_json(const InfectionState& s);
InfectionState state_from_json(const json& j);

json particles_to_json(const ParticleSet& p);
ParticleSet particles_from_json(const json& j);

json truth_to_json(const GroundTruth& t);
GroundTruth truth_from_json(const json& j);

json report_to_json(const DeviationReport& r);
json predictions_to_json(const PredictedTimes& p);
json locate_to_json(const LocateResult& r, const std::vector<GeoStation>& stations);

// Inference problem as read from --config: structure, priors, observation
// models, clamps, block count and chain settings.
struct InferenceSpec {
  ModelHyperparams hyper;
  ObservationModelSet obs;
  ClampMap clamps;
  int n_blocks = 1;
  McmcConfig mcmc;
};

json spec_to_json(const InferenceSpec& s);
InferenceSpec spec_from_json(const json& j);  // ConfigError on inconsistencies

}  // namespace diffnet
