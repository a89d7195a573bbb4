#pragma once

#include <optional>
#include <vector>

#include "socta/error.hpp"
#include "socta/linalg.hpp"
#include "socta/wavelet.hpp"

namespace socta {

/// Number of past samples (l) and future samples (h) stacked per anchor.
struct LagSpec {
  int past = 1;
  int future = 1;

  void validate() const;
  bool operator==(const LagSpec&) const = default;
};

struct LagSelection {
  LagSpec lag;
  /// Root-summed-squares autocorrelation for lags 0, 1, 2, ...
  std::vector<double> curve;
};

/// Raised when no lag enters the confidence band; carries the curve for diagnosis.
class LagSelectionError : public ValidationError {
 public:
  LagSelectionError(const std::string& what, std::vector<double> curve)
      : ValidationError(what), curve_(std::move(curve)) {}
  const std::vector<double>& curve() const { return curve_; }

 private:
  std::vector<double> curve_;
};

/// Picks l = h as the first lag at which the root summed squares (over channels)
/// of the per-channel autocorrelation enters [-band, band] and stays there for
/// three consecutive lags. Lags are searched up to a quarter of the longest cycle.
LagSelection select_lags(const std::vector<ChannelMatrix>& cycles, double band = 0.05);

/// Pooled autocorrelation RSS curve for lags 0..max_lag.
std::vector<double> autocorrelation_rss(const std::vector<ChannelMatrix>& cycles, int max_lag);

/// Per-column affine normalisation to zero mean and unit variance. Columns whose
/// standard deviation is below 1e-12 map to zero.
struct ColumnScaler {
  Vector mean;
  Vector inv_std;

  static ColumnScaler fit(const Matrix& rows);
  Matrix apply(const Matrix& rows) const;
  Vector apply(const Vector& row) const;
};

struct PastFutureMatrices {
  LagSpec lag;
  int channels = 0;
  /// Normalised, one anchor per row.
  Matrix past;
  Matrix future;
  ColumnScaler past_scaler;
  ColumnScaler future_scaler;
  /// Row count contributed by each input cycle (zero for cycles that were too short).
  std::vector<Eigen::Index> rows_per_cycle;
};

/// Stacks x(k-1), ..., x(k-l) into a past row and x(k), ..., x(k+h-1) into the
/// future row of the same anchor k, for every anchor with a complete window.
PastFutureMatrices arrange_past_future(const std::vector<ChannelMatrix>& cycles, const LagSpec& lag);

/// Unnormalised past rows ending at every sample from l - 1 to K - 1 (K - l + 1
/// rows). Row i holds samples l - 1 + i, l - 2 + i, ..., i (newest first).
Matrix past_rows(const ChannelMatrix& cycle, int past_lag);

/// Flattens the l most recent channel rows (newest first) into one past vector.
Vector past_vector(const std::vector<RowVector>& newest_first);

struct CvaModel {
  LagSpec lag;
  int channels = 0;
  ColumnScaler past_scaler;
  ColumnScaler future_scaler;
  Matrix whiten_past;    ///< Σ_pp^{-1/2}
  Matrix whiten_future;  ///< Σ_ff^{-1/2}
  Matrix singvecs_past;  ///< columns pair with singvals, span the whitened past space
  Matrix singvecs_future;
  Vector singvals;       ///< canonical correlations, descending, one per past dimension
  int retained = 1;      ///< R, the number of system canonical variates
  Matrix proj_full;      ///< Z_x = proj_full · x
  Matrix proj_future;    ///< Z_y = proj_future · x_f
  Matrix proj_sys;       ///< first R rows of proj_full
  Matrix proj_res;       ///< (I - V_s V_sᵀ) Σ_pp^{-1/2}

  int past_dim() const { return static_cast<int>(proj_full.cols()); }

  /// Rebuilds proj_sys/proj_res for a different R.
  void set_retained(int r);
};

struct CvaOptions {
  double ridge = 1e-8;
  double eigen_floor = 1e-12;
};

/// Whitened-SVD canonical variate analysis of normalised past/future matrices.
/// Without an explicit R, the knee of the singular-value curve is used.
CvaModel fit_cva(const PastFutureMatrices& pf, std::optional<int> retained = std::nullopt,
                 const CvaOptions& options = {});

/// Index (1-based) of the point farthest from the chord joining the curve's endpoints.
int select_retained(const Vector& singvals);

struct Projection {
  Vector system;    ///< z_s, R entries
  Vector residual;  ///< z_r, full past dimension
  Vector full;      ///< z, full past dimension
};

/// Projects one normalised past vector.
Projection project(const CvaModel& model, const Vector& normalized_past);

/// Canonical variates (one row per past row) for unnormalised past rows.
Matrix canonical_variates(const CvaModel& model, const Matrix& raw_past_rows);

/// Symmetric inverse square root with eigenvalue floor.
Matrix inverse_sqrt(const Matrix& symmetric, double eigen_floor);

/// Adds ridge * trace / dim to the diagonal.
void regularize(Matrix& covariance, double ridge);

}  // namespace socta
