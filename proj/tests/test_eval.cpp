#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "diffnet/errors.hpp"
#include "diffnet/eval.hpp"
#include "diffnet/synth.hpp"

using namespace diffnet;

namespace {

const double kLn2 = std::log(2.0);

InfectionState chain_state(std::vector<Node> parent, std::vector<Time> time, double alpha) {
  InfectionState s = InfectionState::never_infected(int(parent.size()));
  s.parent = std::move(parent);
  s.time = std::move(time);
  for (Node i = 0; i < s.size(); ++i)
    if (s.parent[i] != kNoParent) s.strength(i, s.parent[i]) = alpha;
  return s;
}

}  // namespace

TEST_CASE("time deviation: null handling, symmetry and frozen values") {
  CHECK(deviation_times(std::vector<Time>{3, 5}, std::vector<Time>{3, 7}, 20) == 1.0);
  CHECK(deviation_times(std::vector<Time>{kNever}, std::vector<Time>{10}, 12) == 2.0);
  CHECK(deviation_times(std::vector<Time>{4, 9}, std::vector<Time>{4, 9}, 12) == 0.0);
  // A value beyond the evaluation horizon counts as null.
  CHECK(deviation_times(std::vector<Time>{15}, std::vector<Time>{10}, 12) == 2.0);
  CHECK(deviation_times(std::vector<Time>{kNever}, std::vector<Time>{kNever}, 12) == 0.0);

  Rng rng(61);
  std::uniform_int_distribution<int> tu(1, 15);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Time> a(6), b(6), c(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = rng() % 4 == 0 ? kNever : tu(rng);
      b[i] = rng() % 4 == 0 ? kNever : tu(rng);
      c[i] = rng() % 4 == 0 ? kNever : tu(rng);
    }
    const double ab = deviation_times(a, b, 10);
    CHECK(ab == deviation_times(b, a, 10));
    CHECK(ab >= 0.0);
    // Triangle inequality of the substituted metric.
    CHECK(ab <= deviation_times(a, c, 10) + deviation_times(c, b, 10) + 1e-12);
  }

  CHECK_THROWS_AS(deviation_times(std::vector<Time>{1}, std::vector<Time>{1, 2}, 10),
                  DataError);
  CHECK_THROWS_AS(deviation_times(std::vector<Time>{}, std::vector<Time>{}, 10), DataError);
}

TEST_CASE("parent deviation counts disagreements, null included") {
  CHECK(deviation_parents(std::vector<Node>{1, kNoParent, 2},
                          std::vector<Node>{1, kNoParent, 3}) == 1.0);
  CHECK(deviation_parents(std::vector<Node>{0, 1}, std::vector<Node>{1, 0}) == 2.0);
  CHECK(deviation_parents(std::vector<Node>{kNoParent}, std::vector<Node>{0}) == 1.0);
  CHECK(deviation_parents(std::vector<Node>{2, 2}, std::vector<Node>{2, 2}) == 0.0);
  CHECK_THROWS_AS(deviation_parents(std::vector<Node>{1}, std::vector<Node>{1, 2}), DataError);
}

TEST_CASE("strength deviation averages over the supported links only") {
  const auto hyper = ModelHyperparams::uniform({{}, {0}, {0, 1}}, 1.0, 0.5);
  Grid<double> truth(3, 3, 0.0);
  truth(1, 0) = 1.0;
  truth(2, 0) = 0.5;
  truth(2, 1) = 2.0;

  Grid<double> est = truth;
  est(1, 0) = 1.3;
  CHECK(deviation_strengths(est, truth, hyper) == doctest::Approx(0.1).epsilon(1e-12));

  // Uniform offset shows up as itself.
  Grid<double> off = truth;
  for (Node i = 0; i < 3; ++i)
    for (Node j = 0; j < 3; ++j)
      if (truth(i, j) > 0.0) off(i, j) += 0.25;
  CHECK(deviation_strengths(off, truth, hyper) == doctest::Approx(0.25).epsilon(1e-12));

  // Mass off the support is a hard error, not a silent zero.
  Grid<double> leak = truth;
  leak(0, 2) = 0.4;
  CHECK_THROWS_AS(deviation_strengths(leak, truth, hyper), DataError);
  Grid<double> wrong_shape(2, 2, 0.0);
  CHECK_THROWS_AS(deviation_strengths(wrong_shape, truth, hyper), DataError);

  // No supported links at all: zero by convention.
  const auto lonely = ModelHyperparams::uniform({{}}, 1.0, 0.5);
  CHECK(deviation_strengths(Grid<double>(1, 1, 0.0), Grid<double>(1, 1, 0.0), lonely) == 0.0);
}

TEST_CASE("per-node parent accuracy over a particle set") {
  ParticleSet ps;
  ps.block = Block{1, 1, 10};
  const std::vector<Node> truth{kNoParent, 0, 1};
  for (int k = 0; k < 4; ++k) {
    InfectionState s = InfectionState::never_infected(3);
    s.parent = {kNoParent, 0, k < 2 ? 1 : 0};  // node 2 right half the time
    s.time = {1, 2, 3};
    ps.particles.push_back(s);
  }
  const auto pct = percent_correct_parents(ps, truth);
  REQUIRE(pct.size() == 3);
  CHECK(pct[0] == 100.0);
  CHECK(pct[1] == 100.0);
  CHECK(pct[2] == 50.0);
}

TEST_CASE("forecasts walk the parent chain with expected delays") {
  // alpha = ln 2: expected delay 1 / (1 - e^-alpha) = 2 per hop.
  ParticleSet ps;
  ps.block = Block{1, 1, 10};
  ps.particles.push_back(
      chain_state({kNoParent, 0, 1}, {5, 7, 9}, kLn2));

  const auto pred = predict_infection_times(ps, {{0, 5.0}}, 0.0);
  REQUIRE(pred.mean.size() == 3);
  CHECK(pred.mean[0] == doctest::Approx(5.0));
  CHECK(pred.mean[1] == doctest::Approx(7.0));
  CHECK(pred.mean[2] == doctest::Approx(9.0));
  // Single particle: the band collapses onto the mean.
  CHECK(pred.q25[2] == doctest::Approx(9.0));
  CHECK(pred.q75[2] == doctest::Approx(9.0));

  // Unlisted anchors fall back to the placeholder.
  const auto fallback = predict_infection_times(ps, {}, 3.0);
  CHECK(fallback.mean[0] == doctest::Approx(3.0));
  CHECK(fallback.mean[2] == doctest::Approx(7.0));

  // Quartile band with two distinct particles (linear interpolation).
  ParticleSet two = ps;
  two.particles.push_back(chain_state({kNoParent, 0, 1}, {5, 7, 9}, 1.0));
  const double hop = 1.0 / (1.0 - std::exp(-1.0));
  const auto band = predict_infection_times(two, {{0, 5.0}}, 0.0);
  const double lo = 5.0 + 2.0 * std::min(2.0, hop), hi = 5.0 + 2.0 * std::max(2.0, hop);
  CHECK(band.mean[2] == doctest::Approx((lo + hi) / 2.0));
  CHECK(band.q25[2] == doctest::Approx(lo + 0.25 * (hi - lo)));
  CHECK(band.q75[2] == doctest::Approx(lo + 0.75 * (hi - lo)));

  // A parent cycle cannot be resolved.
  ParticleSet cyc;
  cyc.block = ps.block;
  InfectionState bad = InfectionState::never_infected(2);
  bad.parent = {1, 0};
  bad.time = {2, 3};
  bad.strength(0, 1) = 1.0;
  bad.strength(1, 0) = 1.0;
  cyc.particles.push_back(bad);
  CHECK_THROWS_AS(predict_infection_times(cyc, {}, 0.0), InfeasibleStateError);

  // A zero-strength link on the chain has no finite expected delay.
  ParticleSet dead;
  dead.block = ps.block;
  dead.particles.push_back(chain_state({kNoParent, 0}, {5, 7}, 0.0));
  CHECK_THROWS_AS(predict_infection_times(dead, {}, 0.0), InfeasibleStateError);
}

TEST_CASE("deviations are invariant under a common relabeling") {
  Rng rng(62);
  NetworkGenConfig net;
  net.n = 6;
  auto truth = generate_network(net, rng);
  generate_cascade(truth, rng);
  const auto hyper = hyper_from_truth(truth);
  const InfectionState t_state = truth.as_state();

  // A mildly perturbed estimate.
  InfectionState est = t_state;
  est.time[3] = est.time[3] + 2;
  est.parent[4] = hyper.potential_parents[4].front();
  for (Node i = 0; i < 6; ++i)
    for (Node j : hyper.potential_parents[i]) est.strength(i, j) += 0.1;

  const double dt = deviation_times(est.time, t_state.time, truth.horizon);
  const double dp = deviation_parents(est.parent, t_state.parent);
  const double ds = deviation_strengths(est.strength, t_state.strength, hyper);

  const int n = 6;
  auto relab = [&](Node v) { return v == kNoParent ? kNoParent : n - 1 - v; };
  ModelHyperparams h2 = hyper;
  InfectionState e2 = InfectionState::never_infected(n), t2 = InfectionState::never_infected(n);
  for (Node i = 0; i < n; ++i) {
    const Node ri = relab(i);
    std::vector<Node> pp;
    for (Node j : hyper.potential_parents[i]) pp.push_back(relab(j));
    std::sort(pp.begin(), pp.end());
    h2.potential_parents[ri] = pp;
    for (Node j = 0; j < n; ++j) {
      h2.kappa(ri, relab(j)) = hyper.kappa(i, j);
      h2.theta(ri, relab(j)) = hyper.theta(i, j);
      e2.strength(ri, relab(j)) = est.strength(i, j);
      t2.strength(ri, relab(j)) = t_state.strength(i, j);
    }
    e2.time[ri] = est.time[i];
    t2.time[ri] = t_state.time[i];
    e2.parent[ri] = relab(est.parent[i]);
    t2.parent[ri] = relab(t_state.parent[i]);
  }
  CHECK(deviation_times(e2.time, t2.time, truth.horizon) == doctest::Approx(dt));
  CHECK(deviation_parents(e2.parent, t2.parent) == doctest::Approx(dp));
  CHECK(deviation_strengths(e2.strength, t2.strength, h2) == doctest::Approx(ds));
}
