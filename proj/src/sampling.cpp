#include "diffnet/sampling.hpp"

#include <cmath>
#include <vector>

#include "diffnet/errors.hpp"
#include "diffnet/mathutil.hpp"

namespace diffnet {

double slice_sample_positive(const std::function<double(double)>& log_f, double x0, double w,
                             int max_steps, Rng& rng) {
  const double g0 = log_f(x0);
  if (!std::isfinite(g0)) throw NumericalError("slice sampler: starting point has zero density");

  std::exponential_distribution<double> exp1(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_y = g0 - exp1(rng);  // slice level

  // Place an interval of width w around x0, then step out, sharing the step
  // budget randomly between the two ends. The domain is (0, inf).
  double left = x0 - unif(rng) * w;
  double right = left + w;
  std::uniform_int_distribution<int> split(0, max_steps);
  int j = split(rng);
  int k = max_steps - j;
  while (j-- > 0 && left > 0.0 && log_f(left) > log_y) left -= w;
  while (k-- > 0 && log_f(right) > log_y) right += w;
  left = std::max(left, 0.0);

  // Shrinkage: sample within [left, right], pulling the bounds in on
  // rejection. Falls back to x0 if the interval collapses numerically.
  for (int it = 0; it < 1000; ++it) {
    const double x1 = left + unif(rng) * (right - left);
    if (x1 > 0.0 && log_f(x1) > log_y) return x1;
    if (x1 < x0)
      left = x1;
    else
      right = x1;
    if (right - left < 1e-300) break;
  }
  return x0;
}

int sample_from_log_weights(std::span<const double> log_weights, Rng& rng) {
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm))
    throw InfeasibleStateError("sample_from_log_weights: empty support (all weights zero)");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  int last_finite = -1;
  for (size_t i = 0; i < log_weights.size(); ++i) {
    if (!std::isfinite(log_weights[i])) continue;
    last_finite = static_cast<int>(i);
    acc += std::exp(log_weights[i] - norm);
    if (u <= acc) return static_cast<int>(i);
  }
  return last_finite;  // guard against rounding in the final bin
}

int sample_from_weights(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw NumericalError("sample_from_weights: bad weight");
    total += w;
  }
  if (total <= 0.0) throw InfeasibleStateError("sample_from_weights: all weights zero");
  std::uniform_real_distribution<double> unif(0.0, total);
  const double u = unif(rng);
  double acc = 0.0;
  int last_positive = -1;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += weights[i];
    if (u <= acc) return static_cast<int>(i);
  }
  return last_positive;
}

}  // namespace diffnet
