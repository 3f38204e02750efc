#include "diffnet/obsmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "diffnet/errors.hpp"
#include "diffnet/mathutil.hpp"

namespace diffnet {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kDaysPerStep = 7.0;  // weekly sampling of the epidemic curves

double gaussian_logpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * (kLog2Pi + z * z) - std::log(sigma);
}

}  // namespace

SeriesStats SeriesStats::from_series(std::span<const double> values) {
  SeriesStats s;
  s.values_.assign(values.begin(), values.end());
  const size_t n = s.values_.size();
  double mean = 0.0;
  for (double v : s.values_) mean += v;
  s.pivot_ = n > 0 ? mean / static_cast<double>(n) : 0.0;

  s.cum_.assign(n + 1, 0.0);
  s.cum_sq_.assign(n + 1, 0.0);
  s.cum_lf_.assign(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double c = s.values_[i] - s.pivot_;
    s.cum_[i + 1] = s.cum_[i] + c;
    s.cum_sq_[i + 1] = s.cum_sq_[i] + c * c;
    s.cum_lf_[i + 1] = s.cum_lf_[i] + std::lgamma(s.values_[i] + 1.0);
  }
  return s;
}

double SeriesStats::value(Time t) const {
  if (t < 1 || t > length()) throw std::domain_error("series value: index out of range");
  return values_[t - 1];
}

void SeriesStats::check_range(Time from, Time to) const {
  if (from < 1 || to > length())
    throw std::domain_error("series segment [" + std::to_string(from) + ".." +
                            std::to_string(to) + "] out of range (length " +
                            std::to_string(length()) + ")");
}

int SeriesStats::count(Time from, Time to) const {
  if (from > to) return 0;
  check_range(from, to);
  return to - from + 1;
}

double SeriesStats::centered_sum(Time from, Time to) const {
  if (from > to) return 0.0;
  check_range(from, to);
  return cum_[to] - cum_[from - 1];
}

double SeriesStats::centered_sum_sq(Time from, Time to) const {
  if (from > to) return 0.0;
  check_range(from, to);
  return cum_sq_[to] - cum_sq_[from - 1];
}

double SeriesStats::sum(Time from, Time to) const {
  if (from > to) return 0.0;
  return centered_sum(from, to) + pivot_ * count(from, to);
}

double SeriesStats::log_factorial_sum(Time from, Time to) const {
  if (from > to) return 0.0;
  check_range(from, to);
  return cum_lf_[to] - cum_lf_[from - 1];
}

double gaussian_segment_loglik(const SeriesStats& stats, Time from, Time to, double mu,
                               double sigma) {
  if (sigma <= 0.0) throw std::domain_error("gaussian segment: sigma must be positive");
  const int n = stats.count(from, to);
  if (n == 0) return 0.0;
  // sum (d - mu)^2 expanded about the stats pivot
  const double d = mu - stats.pivot();
  const double quad = stats.centered_sum_sq(from, to) - 2.0 * d * stats.centered_sum(from, to) +
                      static_cast<double>(n) * d * d;
  return -0.5 * n * (kLog2Pi + 2.0 * std::log(sigma)) - quad / (2.0 * sigma * sigma);
}

double poisson_segment_loglik(const SeriesStats& stats, Time from, Time to, double rate) {
  if (rate <= 0.0) throw std::domain_error("poisson segment: rate must be positive");
  const int n = stats.count(from, to);
  if (n == 0) return 0.0;
  return std::log(rate) * stats.sum(from, to) - static_cast<double>(n) * rate -
         stats.log_factorial_sum(from, to);
}

double lognormal_epidemic_value(Time n, Time t, double a, double sigma, double d_peak_days) {
  if (n <= t) throw std::domain_error("epidemic curve: defined only after the infection time");
  if (sigma <= 0.0 || d_peak_days <= 0.0)
    throw std::domain_error("epidemic curve: need sigma > 0 and a positive peak day");
  const double x = kDaysPerStep * static_cast<double>(n - t);  // elapsed days
  const double mu = std::log(d_peak_days) + sigma * sigma;     // curve peaks at d_peak_days
  const double z = (std::log(x) - mu) / sigma;
  return a / (std::sqrt(2.0 * M_PI) * sigma * x) * std::exp(-0.5 * z * z);
}

namespace {

struct CurveObjective {
  std::span<const double> series;
  Time t;
  Time peak_n;
  double peak_value;

  // Pins the scale through the peak sample, then scores the remaining
  // post-infection samples.
  std::pair<double, double> scale_and_mse(double sigma) const {
    const double unit = lognormal_epidemic_value(peak_n, t, 1.0, sigma, kDaysPerStep * (peak_n - t));
    const double a = peak_value / unit;
    double mse = 0.0;
    int n_post = 0;
    for (Time n = t + 1; n <= static_cast<Time>(series.size()); ++n) {
      const double h = lognormal_epidemic_value(n, t, a, sigma, kDaysPerStep * (peak_n - t));
      const double r = series[n - 1] - h;
      mse += r * r;
      ++n_post;
    }
    return {a, mse / n_post};
  }
};

}  // namespace

LogNormalFit fit_lognormal_epidemic(std::span<const double> series, Time candidate_t) {
  const Time len = static_cast<Time>(series.size());
  if (candidate_t < 0 || len - candidate_t < 3)
    throw InsufficientDataError("epidemic fit: need at least 3 samples after the candidate time");

  CurveObjective obj;
  obj.series = series;
  obj.t = candidate_t;
  obj.peak_n = candidate_t + 1;
  obj.peak_value = series[candidate_t];
  for (Time n = candidate_t + 1; n <= len; ++n) {
    if (series[n - 1] > obj.peak_value) {
      obj.peak_value = series[n - 1];
      obj.peak_n = n;
    }
  }

  // Golden-section search for the width on [0.05, 5], tolerance 1e-4.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.05, hi = 5.0;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = obj.scale_and_mse(x1).second;
  double f2 = obj.scale_and_mse(x2).second;
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = obj.scale_and_mse(x1).second;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = obj.scale_and_mse(x2).second;
    }
  }
  LogNormalFit fit;
  fit.sigma = (f1 <= f2) ? x1 : x2;
  fit.d_peak_days = kDaysPerStep * static_cast<double>(obj.peak_n - candidate_t);
  auto [a, mse] = obj.scale_and_mse(fit.sigma);
  fit.a = a;
  fit.mse = mse;
  return fit;
}

ObservationModel::ObservationModel(GaussianObs g) : v_(g) {
  if (g.sigma1 <= 0.0 || g.sigma2 <= 0.0)
    throw ConfigError("gaussian observation model: sigmas must be positive");
}

ObservationModel::ObservationModel(PoissonObs p) : v_(p) {
  if (p.rate1 <= 0.0 || p.rate2 <= 0.0)
    throw ConfigError("poisson observation model: rates must be positive");
}

ObservationModel::ObservationModel(LogNormalEpidemicObs l) : v_(l) {
  if (l.pre_sigma <= 0.0 || l.resid_sigma <= 0.0 || l.sigma <= 0.0 || l.d_peak_days <= 0.0)
    throw ConfigError("epidemic observation model: scale parameters must be positive");
}

double ObservationModel::pre_segment_loglik(const SeriesStats& stats, Time from, Time to) const {
  if (const auto* g = std::get_if<GaussianObs>(&v_))
    return gaussian_segment_loglik(stats, from, to, g->mu1, g->sigma1);
  if (const auto* p = std::get_if<PoissonObs>(&v_))
    return poisson_segment_loglik(stats, from, to, p->rate1);
  const auto& l = std::get<LogNormalEpidemicObs>(v_);
  return gaussian_segment_loglik(stats, from, to, l.pre_mu, l.pre_sigma);
}

double ObservationModel::post_segment_loglik(const SeriesStats& stats, Time from, Time to,
                                             Time t_infect) const {
  if (const auto* g = std::get_if<GaussianObs>(&v_))
    return gaussian_segment_loglik(stats, from, to, g->mu2, g->sigma2);
  if (const auto* p = std::get_if<PoissonObs>(&v_))
    return poisson_segment_loglik(stats, from, to, p->rate2);
  const auto& l = std::get<LogNormalEpidemicObs>(v_);
  if (from > to) return 0.0;
  if (from <= t_infect)
    throw std::domain_error("epidemic post segment: starts at or before the infection time");
  double acc = 0.0;
  for (Time n = from; n <= to; ++n) {
    const double h = lognormal_epidemic_value(n, t_infect, l.a, l.sigma, l.d_peak_days);
    acc += gaussian_logpdf(stats.value(n), h + l.resid_mu, l.resid_sigma);
  }
  return acc;
}

double ObservationModel::node_data_loglik(const SeriesStats& stats, Time t, Time horizon) const {
  if (horizon < 1 || horizon > stats.length())
    throw std::domain_error("node data loglik: horizon out of range");
  if (t != kNever && (t < 1 || t > horizon))
    throw std::domain_error("node data loglik: infection time outside [1..horizon]");
  if (t == kNever) return pre_segment_loglik(stats, 1, horizon);
  return pre_segment_loglik(stats, 1, t) + post_segment_loglik(stats, t + 1, horizon, t);
}

double ObservationModel::window_loglik(const SeriesStats& stats, Time t, Time w_first,
                                       Time w_last) const {
  if (w_first < 1 || w_last > stats.length() || w_first > w_last)
    throw std::domain_error("window loglik: bad window");
  if (t == kNever || t >= w_last) return pre_segment_loglik(stats, w_first, w_last);
  const Time pre_to = std::min(t, w_last);
  const Time post_from = std::max(t + 1, w_first);
  double acc = 0.0;
  if (w_first <= pre_to) acc += pre_segment_loglik(stats, w_first, pre_to);
  acc += post_segment_loglik(stats, post_from, w_last, t);
  return acc;
}

Time ObservationModel::ml_changepoint(const SeriesStats& stats, Time w_first, Time w_last) const {
  if (w_first < 1 || w_last > stats.length() || w_first > w_last)
    throw std::domain_error("ml changepoint: bad window");
  Time best_t = w_first;
  double best = kNegInf;
  for (Time t = w_first; t <= w_last; ++t) {
    const double ll = window_loglik(stats, t, w_first, w_last);
    if (ll > best) {  // strict: earliest maximizer wins
      best = ll;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<SeriesStats> make_series_stats(const ObservationSet& data) {
  std::vector<SeriesStats> stats;
  stats.reserve(data.series.size());
  for (const auto& s : data.series) stats.push_back(SeriesStats::from_series(s));
  return stats;
}

}  // namespace diffnet
