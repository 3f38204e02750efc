#include "diffnet/mathutil.hpp"

#include <algorithm>
#include <cmath>

#include "diffnet/errors.hpp"

namespace diffnet {

double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return kNegInf;
  double acc = 0.0;
  for (double x : xs)
    if (std::isfinite(x)) acc += std::exp(x - m);
  return m + std::log(acc);
}

double log_sum_exp(double a, double b) {
  const double xs[] = {a, b};
  return log_sum_exp(xs);
}

double log1m_exp(double x) {
  // x <= 0; uses expm1 for small |x| and log1p otherwise (Maechler's rule).
  if (x >= 0.0) return x == 0.0 ? kNegInf : std::numeric_limits<double>::quiet_NaN();
  if (x > -0.6931471805599453)  // -log 2
    return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double lower_gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1 (Lentz).
double upper_gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double reg_lower_gamma(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw NumericalError("reg_lower_gamma: need a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return lower_gamma_series(a, x);
  return 1.0 - upper_gamma_cf(a, x);
}

double reg_upper_gamma(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw NumericalError("reg_upper_gamma: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - lower_gamma_series(a, x);
  return upper_gamma_cf(a, x);
}

}  // namespace diffnet
