#pragma once

#include <span>
#include <variant>
#include <vector>

#include "diffnet/types.hpp"

namespace diffnet {

// Prefix-sum summaries of one series, sufficient for O(1) Gaussian/Poisson
// segment log-likelihoods on arbitrary [from..to] (1-based, inclusive).
// Sums of squares are kept about a fixed pivot (the series mean) to avoid
// catastrophic cancellation on long segments.
class SeriesStats {
 public:
  static SeriesStats from_series(std::span<const double> values);

  int length() const { return static_cast<int>(values_.size()); }
  double value(Time t) const;  // d_t

  // All of these throw std::domain_error unless 1 <= from and to <= length;
  // an empty segment (from > to) contributes 0.
  double sum(Time from, Time to) const;
  double centered_sum(Time from, Time to) const;     // sum of (d - pivot)
  double centered_sum_sq(Time from, Time to) const;  // sum of (d - pivot)^2
  double log_factorial_sum(Time from, Time to) const;
  int count(Time from, Time to) const;

  double pivot() const { return pivot_; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
  std::vector<double> cum_;      // centered prefix sums
  std::vector<double> cum_sq_;   // centered squared prefix sums
  std::vector<double> cum_lf_;   // prefix sums of lgamma(d + 1)
  double pivot_ = 0.0;

  void check_range(Time from, Time to) const;
};

// Gaussian log-likelihood of the segment [from..to] under N(mu, sigma^2).
double gaussian_segment_loglik(const SeriesStats& stats, Time from, Time to,
                               double mu, double sigma);

// Poisson log-likelihood of the segment [from..to] at the given rate.
double poisson_segment_loglik(const SeriesStats& stats, Time from, Time to, double rate);

// Expected epidemic curve value at sample n given infection time t: a
// log-normal-shaped pulse over elapsed days 7*(n - t) (weekly sampling),
// peaking d_peak_days after infection with width sigma and area scale a.
// Defined for n > t.
double lognormal_epidemic_value(Time n, Time t, double a, double sigma, double d_peak_days);

struct LogNormalFit {
  double sigma = 0.0;        // curve width
  double d_peak_days = 0.0;  // days from infection to the curve peak
  double a = 0.0;            // area scale pinning the curve to the peak sample
  double mse = 0.0;          // mean squared error over the post-infection samples
};

// Fits the epidemic curve to the samples after candidate_t: the peak day is
// taken from the largest post-infection sample, the scale pins the curve
// through that sample, and the width minimizes post-infection MSE by
// golden-section search on [0.05, 5] (tolerance 1e-4). Throws
// InsufficientDataError with fewer than 3 post-infection samples.
LogNormalFit fit_lognormal_epidemic(std::span<const double> series, Time candidate_t);

// Two-regime observation parameters for one node.
struct GaussianObs {
  double mu1, sigma1;  // before and at the infection time
  double mu2, sigma2;  // after
};

struct PoissonObs {
  double rate1, rate2;
};

struct LogNormalEpidemicObs {
  double pre_mu, pre_sigma;      // plain Gaussian regime up to the infection time
  double a, sigma, d_peak_days;  // fitted curve parameters
  double resid_mu, resid_sigma;  // Gaussian residual around the shifted curve
};

// A node's data law: the samples at times 1..t come from the first regime
// and the samples at t+1..horizon from the second, where t is the node's
// infection time (the last pre-infection index). t == kNever puts the whole
// series in the first regime.
class ObservationModel {
 public:
  ObservationModel() : v_(GaussianObs{0, 1, 0, 1}) {}
  explicit ObservationModel(GaussianObs g);
  explicit ObservationModel(PoissonObs p);
  explicit ObservationModel(LogNormalEpidemicObs l);

  double pre_segment_loglik(const SeriesStats& stats, Time from, Time to) const;
  double post_segment_loglik(const SeriesStats& stats, Time from, Time to, Time t_infect) const;

  // Full-series log-likelihood given infection time t (kNever or 1..horizon).
  double node_data_loglik(const SeriesStats& stats, Time t, Time horizon) const;

  // Log-likelihood of the window [w_first..w_last] only, with the regime
  // split still at the global time t (which may fall outside the window).
  double window_loglik(const SeriesStats& stats, Time t, Time w_first, Time w_last) const;

  // argmax over t in [w_first..w_last] of window_loglik; earliest tie wins.
  Time ml_changepoint(const SeriesStats& stats, Time w_first, Time w_last) const;

  const std::variant<GaussianObs, PoissonObs, LogNormalEpidemicObs>& variant() const { return v_; }

 private:
  std::variant<GaussianObs, PoissonObs, LogNormalEpidemicObs> v_;
};

using ObservationModelSet = std::vector<ObservationModel>;

std::vector<SeriesStats> make_series_stats(const ObservationSet& data);

}  // namespace diffnet
