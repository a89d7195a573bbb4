#pragma once

#include <span>
#include <vector>

namespace socta::stats {

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);

double normal_cdf(double x);
/// Upper quantile of the chi-square distribution: P(X <= q) = p.
double chi_square_quantile(double p, double dof);
/// Survival function of the chi-square distribution.
double chi_square_sf(double x, double dof);

/// D'Agostino-Pearson omnibus normality test from sample skewness and kurtosis.
struct NormalityTest {
  double skew_z = 0.0;
  double kurtosis_z = 0.0;
  double k2 = 0.0;
  double p_value = 1.0;
};

/// Requires at least 20 samples; constant data reports p = 0.
NormalityTest dagostino_pearson(std::span<const double> x);

/// Weighted chi-square approximation g·χ²_h matched to the sample mean and
/// variance of a nonnegative statistic: g = v / 2m, h = 2m² / v.
double box_quantile(double sample_mean, double sample_variance, double p);

/// Silverman's rule of thumb: 0.9 · min(sd, IQR / 1.34) · n^(-1/5).
double silverman_bandwidth(std::span<const double> x);

/// Gaussian-kernel density estimate of a univariate sample.
class GaussianKde {
 public:
  explicit GaussianKde(std::vector<double> sample, double bandwidth = 0.0);

  double pdf(double x) const;
  double cdf(double x) const;
  /// Inverts the CDF by bisection to absolute tolerance 1e-10 · scale.
  double quantile(double p) const;
  double bandwidth() const { return bandwidth_; }

 private:
  std::vector<double> sample_;
  double bandwidth_;
};

/// Linear-interpolated empirical quantile (type 7).
double empirical_quantile(std::vector<double> x, double p);

}  // namespace socta::stats
