#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace diffnet {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(x_i)), tolerant of -inf entries; returns -inf for an empty
// or all--inf input.
double log_sum_exp(std::span<const double> xs);
double log_sum_exp(double a, double b);

// log(1 - exp(x)) for x <= 0, stable near both ends.
double log1m_exp(double x);

// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
// Series + continued-fraction evaluation; used by goodness-of-fit tests and
// the gamma-prior quantile-free checks.
double reg_lower_gamma(double a, double x);
double reg_upper_gamma(double a, double x);

// Survival function of a chi-square distribution with k degrees of freedom.
inline double chi_square_sf(double x, double k) { return reg_upper_gamma(k / 2.0, x / 2.0); }

}  // namespace diffnet
