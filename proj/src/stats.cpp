#include "socta/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "socta/error.hpp"

namespace socta::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("variance needs at least two samples");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double chi_square_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile probability must lie in (0,1)");
  if (!(dof > 0.0)) throw ValidationError("chi-square degrees of freedom must be positive");
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(dist, p);
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, x));
}

NormalityTest dagostino_pearson(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 20) throw ValidationError("normality test needs at least 20 samples");
  const double m = mean(x);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  NormalityTest t;
  if (!(m2 > 0.0)) {
    t.p_value = 0.0;
    t.k2 = std::numeric_limits<double>::infinity();
    return t;
  }
  const double b1 = m3 / std::pow(m2, 1.5);  // sqrt(b1)
  const double b2 = m4 / (m2 * m2);

  // Skewness transformation (D'Agostino 1970).
  const double y = b1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  const double ya = y / alpha;
  t.skew_z = delta * std::log(ya + std::sqrt(ya * ya + 1.0));

  // Kurtosis transformation (Anscombe & Glynn 1983).
  const double eb2 = 3.0 * (n - 1.0) / (n + 1.0);
  const double vb2 = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double xk = (b2 - eb2) / std::sqrt(vb2);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term = (1.0 - 2.0 / a) / (1.0 + xk * std::sqrt(2.0 / (a - 4.0)));
  const double cube = std::cbrt(term);
  t.kurtosis_z = ((1.0 - 2.0 / (9.0 * a)) - cube) / std::sqrt(2.0 / (9.0 * a));

  t.k2 = t.skew_z * t.skew_z + t.kurtosis_z * t.kurtosis_z;
  t.p_value = std::exp(-0.5 * t.k2);  // chi-square(2) survival function
  return t;
}

double box_quantile(double sample_mean, double sample_variance, double p) {
  if (!(sample_mean > 0.0) || !(sample_variance > 0.0)) {
    throw NumericalError("degenerate statistic: zero mean or variance");
  }
  const double g = sample_variance / (2.0 * sample_mean);
  const double h = 2.0 * sample_mean * sample_mean / sample_variance;
  return g * chi_square_quantile(p, h);
}

double empirical_quantile(std::vector<double> x, double p) {
  if (x.empty()) throw ValidationError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double pos = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double silverman_bandwidth(std::span<const double> x) {
  const double sd = std::sqrt(variance(x));
  std::vector<double> copy(x.begin(), x.end());
  const double iqr = empirical_quantile(copy, 0.75) - empirical_quantile(copy, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

GaussianKde::GaussianKde(std::vector<double> sample, double bandwidth)
    : sample_(std::move(sample)), bandwidth_(bandwidth) {
  if (sample_.size() < 2) throw ValidationError("KDE needs at least two samples");
  if (bandwidth_ <= 0.0) bandwidth_ = silverman_bandwidth(sample_);
  if (!(bandwidth_ > 0.0)) throw NumericalError("degenerate statistic: zero KDE bandwidth");
  std::sort(sample_.begin(), sample_.end());
}

double GaussianKde::pdf(double x) const {
  const double inv = 1.0 / bandwidth_;
  double acc = 0.0;
  for (double s : sample_) {
    const double u = (x - s) * inv;
    acc += std::exp(-0.5 * u * u);
  }
  return acc * inv / (std::sqrt(2.0 * std::numbers::pi) * static_cast<double>(sample_.size()));
}

double GaussianKde::cdf(double x) const {
  const double inv = 1.0 / bandwidth_;
  // Kernels more than 10 bandwidths away contribute exactly 0 or 1.
  const auto lo = std::lower_bound(sample_.begin(), sample_.end(), x - 10.0 * bandwidth_);
  const auto hi = std::upper_bound(sample_.begin(), sample_.end(), x + 10.0 * bandwidth_);
  double acc = static_cast<double>(lo - sample_.begin());
  for (auto it = lo; it != hi; ++it) acc += normal_cdf((x - *it) * inv);
  return acc / static_cast<double>(sample_.size());
}

double GaussianKde::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile probability must lie in (0,1)");
  double lo = sample_.front() - 10.0 * bandwidth_;
  double hi = sample_.back() + 10.0 * bandwidth_;
  const double tol = 1e-10 * std::max(1.0, hi - lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace socta::stats
