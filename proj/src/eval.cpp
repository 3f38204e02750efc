#include "diffnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffnet/errors.hpp"
#include "diffnet/model.hpp"

namespace diffnet {

namespace {

// Null handling shared by both arguments: anything beyond batch_end counts
// as null, and null stands in as batch_end.
double effective_time(Time t, Time batch_end) {
  if (t == kNever || t > batch_end) return static_cast<double>(batch_end);
  return static_cast<double>(t);
}

}  // namespace

double deviation_times(std::span<const Time> estimate, std::span<const Time> truth,
                       Time batch_end) {
  if (estimate.size() != truth.size()) throw DataError("deviation_times: length mismatch");
  if (estimate.empty()) throw DataError("deviation_times: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i)
    acc += std::abs(effective_time(estimate[i], batch_end) - effective_time(truth[i], batch_end));
  return acc / static_cast<double>(estimate.size());
}

double deviation_parents(std::span<const Node> estimate, std::span<const Node> truth) {
  if (estimate.size() != truth.size()) throw DataError("deviation_parents: length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i)
    if (estimate[i] != truth[i]) acc += 1.0;
  return acc;
}

double deviation_strengths(const Grid<double>& estimate, const Grid<double>& truth,
                           const ModelHyperparams& hyper) {
  const int n = hyper.n();
  if (estimate.rows() != n || estimate.cols() != n || truth.rows() != n || truth.cols() != n)
    throw DataError("deviation_strengths: grid shape mismatch");
  double acc = 0.0;
  long links = 0;
  for (Node i = 0; i < n; ++i) {
    for (Node j = 0; j < n; ++j) {
      if (hyper.in_support(i, j)) {
        acc += std::abs(estimate(i, j) - truth(i, j));
        ++links;
      } else if (estimate(i, j) != 0.0 || truth(i, j) != 0.0) {
        throw DataError("deviation_strengths: nonzero strength off the support at (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  return links == 0 ? 0.0 : acc / static_cast<double>(links);
}

std::vector<double> percent_correct_parents(const ParticleSet& particles,
                                            std::span<const Node> truth) {
  if (particles.particles.empty()) throw DataError("percent_correct_parents: no particles");
  const int n = particles.particles.front().size();
  if (truth.size() != static_cast<size_t>(n))
    throw DataError("percent_correct_parents: length mismatch");
  std::vector<double> pct(n, 0.0);
  for (const InfectionState& s : particles.particles)
    for (Node i = 0; i < n; ++i)
      if (s.parent[i] == truth[i]) pct[i] += 1.0;
  for (double& p : pct) p *= 100.0 / static_cast<double>(particles.particles.size());
  return pct;
}

namespace {

// Expected-delay forecast for one particle, resolved along parent chains.
std::vector<double> forecast_one(const InfectionState& s,
                                 const std::map<Node, double>& source_times,
                                 double placeholder) {
  const int n = s.size();
  std::vector<double> f(n, 0.0);
  std::vector<int> status(n, 0);  // 0 fresh, 1 on the current chain, 2 done
  for (Node start = 0; start < n; ++start) {
    if (status[start] == 2) continue;
    // walk up the chain to a resolved node or an anchor
    std::vector<Node> chain;
    Node i = start;
    while (true) {
      if (status[i] == 2) break;
      if (status[i] == 1) throw InfeasibleStateError("parent chain contains a cycle");
      status[i] = 1;
      chain.push_back(i);
      if (s.parent[i] == kNoParent) {
        auto it = source_times.find(i);
        f[i] = it != source_times.end() ? it->second : placeholder;
        status[i] = 2;
        chain.pop_back();
        break;
      }
      i = s.parent[i];
    }
    for (auto r = chain.rbegin(); r != chain.rend(); ++r) {
      const Node c = *r;
      const Node z = s.parent[c];
      const double a = s.strength(c, z);
      if (!(a > 0.0))
        throw InfeasibleStateError("prediction needs a positive strength on the used link");
      f[c] = f[z] + 1.0 / -std::expm1(-a);
      status[c] = 2;
    }
  }
  return f;
}

double percentile(std::vector<double>& sorted, double q) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

PredictedTimes predict_infection_times(const ParticleSet& particles,
                                       const std::map<Node, double>& source_times,
                                       double placeholder) {
  if (particles.particles.empty()) throw DataError("predict_infection_times: no particles");
  const int n = particles.particles.front().size();
  const size_t m = particles.particles.size();
  std::vector<std::vector<double>> per_node(n, std::vector<double>(m));
  for (size_t p = 0; p < m; ++p) {
    const std::vector<double> f = forecast_one(particles.particles[p], source_times, placeholder);
    for (Node i = 0; i < n; ++i) per_node[i][p] = f[i];
  }
  PredictedTimes out;
  out.mean.resize(n);
  out.q25.resize(n);
  out.q75.resize(n);
  for (Node i = 0; i < n; ++i) {
    double acc = 0.0;
    for (double v : per_node[i]) acc += v;
    out.mean[i] = acc / static_cast<double>(m);
    std::sort(per_node[i].begin(), per_node[i].end());
    out.q25[i] = percentile(per_node[i], 0.25);
    out.q75[i] = percentile(per_node[i], 0.75);
  }
  return out;
}

}  // namespace diffnet
