#pragma once

#include <functional>
#include <span>

#include "diffnet/rng.hpp"

namespace diffnet {

// One slice-sampling transition for a univariate log-density on (0, inf),
// stepping out from x0 with initial width w (capped at max_steps interval
// widenings split randomly between the two ends), then shrinking. Returns a
// value with log_f finite; throws NumericalError if log_f(x0) is not finite.
double slice_sample_positive(const std::function<double(double)>& log_f, double x0, double w,
                             int max_steps, Rng& rng);

// Index draw from unnormalized log-weights; throws InfeasibleStateError when
// every weight is -inf (empty support).
int sample_from_log_weights(std::span<const double> log_weights, Rng& rng);

// Index draw from nonnegative linear weights (sum must be positive).
int sample_from_weights(std::span<const double> weights, Rng& rng);

}  // namespace diffnet
