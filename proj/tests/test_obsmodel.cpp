#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "diffnet/errors.hpp"
#include "diffnet/mathutil.hpp"
#include "diffnet/obsmodel.hpp"
#include "diffnet/rng.hpp"

using namespace diffnet;

namespace {

double direct_gaussian(std::span<const double> xs, Time from, Time to, double mu, double sigma) {
  double acc = 0.0;
  for (Time t = from; t <= to; ++t) {
    const double z = (xs[t - 1] - mu) / sigma;
    acc += -0.5 * std::log(2.0 * M_PI) - std::log(sigma) - 0.5 * z * z;
  }
  return acc;
}

double direct_poisson(std::span<const double> xs, Time from, Time to, double rate) {
  double acc = 0.0;
  for (Time t = from; t <= to; ++t)
    acc += xs[t - 1] * std::log(rate) - rate - std::lgamma(xs[t - 1] + 1.0);
  return acc;
}

}  // namespace

TEST_CASE("prefix statistics agree with direct summation on random series") {
  Rng rng(5);
  std::uniform_real_distribution<double> val(-3.0, 120.0);
  std::uniform_int_distribution<int> len(1, 1000);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = len(rng);
    std::vector<double> xs(n);
    for (double& x : xs) x = val(rng);
    const auto stats = SeriesStats::from_series(xs);
    CHECK(stats.length() == n);
    std::uniform_int_distribution<int> idx(1, n);
    for (int seg = 0; seg < 30; ++seg) {
      Time a = idx(rng), b = idx(rng);
      if (a > b) std::swap(a, b);
      long double sum = 0.0L, cs = 0.0L, css = 0.0L;
      for (Time t = a; t <= b; ++t) {
        sum += xs[t - 1];
        cs += xs[t - 1] - stats.pivot();
        css += (xs[t - 1] - stats.pivot()) * (xs[t - 1] - stats.pivot());
      }
      CHECK(stats.sum(a, b) == doctest::Approx(double(sum)).epsilon(1e-9));
      CHECK(stats.centered_sum(a, b) == doctest::Approx(double(cs)).scale(1.0).epsilon(1e-9));
      CHECK(stats.centered_sum_sq(a, b) == doctest::Approx(double(css)).epsilon(1e-9));
      CHECK(stats.count(a, b) == b - a + 1);
    }
    // Empty segment contributes nothing; out-of-range is an error.
    CHECK(stats.sum(3, 2) == 0.0);
    CHECK(stats.count(3, 2) == 0);
    CHECK_THROWS_AS(stats.sum(0, 1), std::domain_error);
    CHECK_THROWS_AS(stats.sum(1, n + 1), std::domain_error);
  }
}

TEST_CASE("segment log-likelihood closed forms") {
  // Two points exactly at the mean of a unit Gaussian: 2 * (-log sqrt(2 pi)).
  const std::vector<double> at_mean{4.0, 4.0};
  const auto stats = SeriesStats::from_series(at_mean);
  CHECK(gaussian_segment_loglik(stats, 1, 2, 4.0, 1.0) ==
        doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-12));
  CHECK(gaussian_segment_loglik(stats, 2, 1, 4.0, 1.0) == 0.0);

  // One count of 1 at unit rate: log(1 * e^-1 / 1!) = -1.
  const std::vector<double> one{1.0};
  const auto pstats = SeriesStats::from_series(one);
  CHECK(poisson_segment_loglik(pstats, 1, 1, 1.0) == doctest::Approx(-1.0).epsilon(1e-12));

  // Random series, random segments, both families vs direct evaluation.
  Rng rng(9);
  std::vector<double> xs(200);
  std::poisson_distribution<int> pois(6.0);
  for (double& x : xs) x = pois(rng);
  const auto rstats = SeriesStats::from_series(xs);
  std::uniform_int_distribution<int> idx(1, 200);
  for (int rep = 0; rep < 40; ++rep) {
    Time a = idx(rng), b = idx(rng);
    if (a > b) std::swap(a, b);
    CHECK(gaussian_segment_loglik(rstats, a, b, 5.5, 2.25) ==
          doctest::Approx(direct_gaussian(xs, a, b, 5.5, 2.25)).epsilon(1e-9));
    CHECK(poisson_segment_loglik(rstats, a, b, 6.0) ==
          doctest::Approx(direct_poisson(xs, a, b, 6.0)).epsilon(1e-9));
  }
}

TEST_CASE("two-regime node likelihood splits at the infection time") {
  const std::vector<double> xs{10.0, 10.0, 100.0, 100.0};
  const auto stats = SeriesStats::from_series(xs);
  const ObservationModel m(GaussianObs{10.0, 1.0, 100.0, 1.0});

  // t = kNever and t = horizon both put everything in the first regime.
  CHECK(m.node_data_loglik(stats, kNever, 4) ==
        doctest::Approx(direct_gaussian(xs, 1, 4, 10.0, 1.0)));
  CHECK(m.node_data_loglik(stats, 4, 4) == m.node_data_loglik(stats, kNever, 4));

  // Brute-force the best split: the change is after sample 2.
  double best = kNegInf;
  Time best_t = 0;
  for (Time t = 1; t <= 4; ++t) {
    const double ll = m.node_data_loglik(stats, t, 4);
    const double want = direct_gaussian(xs, 1, t, 10.0, 1.0) +
                        direct_gaussian(xs, t + 1, 4, 100.0, 1.0);
    CHECK(ll == doctest::Approx(want).epsilon(1e-10));
    if (ll > best) {
      best = ll;
      best_t = t;
    }
  }
  CHECK(best_t == 2);
  CHECK(m.ml_changepoint(stats, 1, 4) == 2);
}

TEST_CASE("window likelihood adds up over a partition of the horizon") {
  Rng rng(13);
  std::normal_distribution<double> g1(10.0, 1.0), g2(100.0, 1.0);
  std::vector<double> xs(30);
  const Time t_true = 11;
  for (int k = 0; k < 30; ++k) xs[k] = (k < t_true) ? g1(rng) : g2(rng);
  const auto stats = SeriesStats::from_series(xs);
  const ObservationModel m(GaussianObs{10.0, 1.0, 100.0, 1.0});

  for (Time t : {Time(1), Time(7), Time(11), Time(29), kNever}) {
    const double whole = m.node_data_loglik(stats, t, 30);
    const double parts = m.window_loglik(stats, t, 1, 10) + m.window_loglik(stats, t, 11, 24) +
                         m.window_loglik(stats, t, 25, 30);
    CHECK(whole == doctest::Approx(parts).epsilon(1e-10));
  }

  // The split time may sit outside the window on either side.
  CHECK(m.window_loglik(stats, 5, 11, 30) ==
        doctest::Approx(direct_gaussian(xs, 11, 30, 100.0, 1.0)));
  CHECK(m.window_loglik(stats, kNever, 11, 20) ==
        doctest::Approx(direct_gaussian(xs, 11, 20, 10.0, 1.0)));
}

TEST_CASE("ml_changepoint brute force, tie breaking, tiny windows") {
  const std::vector<double> xs{10.0, 10.0, 10.0, 100.0, 100.0};
  const auto stats = SeriesStats::from_series(xs);
  const ObservationModel m(GaussianObs{10.0, 1.0, 100.0, 1.0});
  // Brute force over the window.
  double best = kNegInf;
  Time best_t = 0;
  for (Time t = 1; t <= 5; ++t) {
    const double ll = m.window_loglik(stats, t, 1, 5);
    if (ll > best) {
      best = ll;
      best_t = t;
    }
  }
  CHECK(best_t == 3);
  CHECK(m.ml_changepoint(stats, 1, 5) == 3);

  // Identical regimes: every split scores the same, earliest wins.
  const ObservationModel flat(GaussianObs{10.0, 1.0, 10.0, 1.0});
  CHECK(flat.ml_changepoint(stats, 1, 5) == 1);
  CHECK(flat.ml_changepoint(stats, 3, 5) == 3);

  // Length-1 window has exactly one candidate.
  CHECK(m.ml_changepoint(stats, 4, 4) == 4);
}

TEST_CASE("poisson two-regime model picks the rate shift") {
  Rng rng(17);
  std::vector<double> xs(40);
  std::poisson_distribution<int> lo(3.0), hi(30.0);
  for (int k = 0; k < 40; ++k) xs[k] = (k < 15) ? lo(rng) : hi(rng);
  const auto stats = SeriesStats::from_series(xs);
  const ObservationModel m(PoissonObs{3.0, 30.0});
  CHECK(m.ml_changepoint(stats, 1, 40) == 15);
  // Additivity holds for the Poisson family too.
  CHECK(m.node_data_loglik(stats, 15, 40) ==
        doctest::Approx(m.window_loglik(stats, 15, 1, 22) + m.window_loglik(stats, 15, 23, 40)));
}

TEST_CASE("epidemic curve shape and domain") {
  // Peaks d_peak_days after infection (weekly sampling: 7 days per step).
  const double a = 500.0, sigma = 0.6, d_peak = 70.0;
  double best = -1.0;
  Time best_n = 0;
  for (Time n = 3; n <= 32; ++n) {
    const double v = lognormal_epidemic_value(n, 2, a, sigma, d_peak);
    if (v > best) {
      best = v;
      best_n = n;
    }
  }
  CHECK(best_n == 12);  // 7 * (12 - 2) = 70 elapsed days
  CHECK(lognormal_epidemic_value(5, 2, 0.0, sigma, d_peak) == 0.0);
  CHECK_THROWS_AS(lognormal_epidemic_value(2, 2, a, sigma, d_peak), std::domain_error);
  CHECK_THROWS_AS(lognormal_epidemic_value(5, 2, a, -1.0, d_peak), std::domain_error);
}

TEST_CASE("epidemic fit recovers the generating curve from clean samples") {
  const double a = 500.0, sigma = 0.6, d_peak = 70.0;
  const Time t = 2;
  std::vector<double> xs(30, 0.0);
  for (Time n = t + 1; n <= 30; ++n) xs[n - 1] = lognormal_epidemic_value(n, t, a, sigma, d_peak);

  const auto fit = fit_lognormal_epidemic(xs, t);
  CHECK(fit.d_peak_days == doctest::Approx(70.0));
  CHECK(std::abs(fit.sigma - sigma) / sigma < 0.05);
  CHECK(std::abs(fit.a - a) / a < 0.05);
  CHECK(fit.mse < 1e-6);

  // Flat post-infection data still fits something without throwing.
  const std::vector<double> flat(10, 5.0);
  CHECK_NOTHROW(fit_lognormal_epidemic(flat, 3));

  // Too few post-infection samples.
  CHECK_THROWS_AS(fit_lognormal_epidemic(flat, 8), InsufficientDataError);
  CHECK_THROWS_AS(fit_lognormal_epidemic(flat, -1), InsufficientDataError);
}

TEST_CASE("epidemic observation model prefers the true onset") {
  // Gaussian pre-regime, then curve + residual noise.
  const double a = 4000.0, sigma = 0.5, d_peak = 63.0;
  const Time t_true = 6;
  Rng rng(23);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> xs(30);
  for (Time n = 1; n <= 30; ++n) {
    const double base =
        (n <= t_true) ? 0.0 : lognormal_epidemic_value(n, t_true, a, sigma, d_peak);
    xs[n - 1] = base + noise(rng);
  }
  const auto stats = SeriesStats::from_series(xs);
  const ObservationModel m(
      LogNormalEpidemicObs{0.0, 1.0, a, sigma, d_peak, 0.0, 1.0});
  CHECK(m.ml_changepoint(stats, 1, 30) == t_true);
}
