#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "socta/cva.hpp"
#include "socta/lstm.hpp"
#include "socta/wavelet.hpp"

namespace socta {

enum class LimitMethod { ChiSquare, BoxApprox, Kde };

std::string to_string(LimitMethod m);
LimitMethod limit_method_from_string(const std::string& s);

/// Control limit for a nonnegative statistic plus how it was derived.
struct ControlLimit {
  double value = 0.0;
  LimitMethod method = LimitMethod::Kde;
  /// Fraction of the underlying variates that passed the normality test.
  double normal_fraction = 0.0;
};

struct MonitorOptions {
  double significance = 0.95;
  /// Per-variate normality test level.
  double normality_alpha = 0.05;
  /// Share of variates that must pass for the Gaussian path.
  double normal_share_required = 0.9;
  /// Consecutive exceedances that trigger Case II.
  int consecutive_limit = 3;
};

struct MonitoringModel {
  int retained = 1;
  int past_dim = 0;
  ControlLimit t2_limit;
  ControlLimit spe_limit;
  MonitorOptions options;
};

/// Fraction of columns passing the D'Agostino-Pearson test at `alpha`.
double normal_fraction(const Matrix& columns, double alpha);

/// Gaussian path: chi-square(dof) quantile. Otherwise a Gaussian-kernel density
/// of the training statistic and its `significance` quantile.
ControlLimit t2_limit(const Vector& statistic, int dof, double normal_share, const MonitorOptions& o);
/// Gaussian path: Box's weighted chi-square. Otherwise the KDE quantile.
ControlLimit spe_limit(const Vector& statistic, double normal_share, const MonitorOptions& o);

struct MonitorStatistics {
  Vector t2;
  Vector spe;
};

/// T² and SPE for canonical-variate rows (one row per sample).
MonitorStatistics monitor_statistics(const CvaModel& cva, const Matrix& canonical_variates);

/// Residual variates Z_r = (I - V_s V_sᵀ) Σ_pp^{-1/2} x expressed from canonical variates.
Matrix residual_variates(const CvaModel& cva, const Matrix& canonical_variates);

/// Builds control limits from the training canonical variates of `cva`.
MonitoringModel build_monitor(const CvaModel& cva, const Matrix& training_variates,
                              const MonitorOptions& options = {});

enum class Case { I, II };

struct MonitoringVerdict {
  double t2 = 0.0;
  double spe = 0.0;
  bool t2_exceeds = false;
  bool spe_exceeds = false;
  /// Longest current run of consecutive exceedances of either statistic.
  int consecutive_exceed_count = 0;
  Case decision = Case::I;
};

/// Statistics and exceedance flags for one sample; run-length fields are left at zero.
MonitoringVerdict score(const MonitoringModel& model, const Vector& z_system, const Vector& z_residual);

/// Tracks consecutive exceedances per statistic; any non-exceeding sample resets that counter.
class CaseTracker {
 public:
  explicit CaseTracker(int consecutive_limit = 3) : limit_(consecutive_limit) {}
  void update(MonitoringVerdict& verdict);
  bool latched() const { return latched_; }

 private:
  int limit_;
  int t2_run_ = 0;
  int spe_run_ = 0;
  bool latched_ = false;
};

struct StreamStep {
  /// Sample index in the stream (0-based).
  std::size_t k = 0;
  MonitoringVerdict verdict;
  /// Latched decision so far.
  Case latched = Case::I;
  /// Reference-model estimate, emitted only while the latched decision is Case I.
  std::optional<double> estimate;
};

struct StreamReport {
  /// Samples consumed before the first verdict.
  std::size_t warmup = 0;
  std::vector<StreamStep> steps;
  Case decision = Case::I;
  /// Index of the sample at which Case II latched.
  std::optional<std::size_t> latch_index;
};

/// Online monitor: raw samples in, verdicts out.
class StreamMonitor {
 public:
  StreamMonitor(const MonitoringModel& model, const CvaModel& cva, const WaveletConfig& wavelet,
                const LstmNetwork* reference_net = nullptr);

  /// Returns a verdict once l samples have arrived.
  std::optional<StreamStep> push(double current_A, double voltage_V);
  std::size_t warmup() const;

 private:
  const MonitoringModel* model_;
  const CvaModel* cva_;
  ChannelStream channels_;
  std::deque<RowVector> window_;  // newest first
  CaseTracker tracker_;
  std::optional<LstmStepper> estimator_;
  std::size_t count_ = 0;
};

StreamReport evaluate_stream(const MonitoringModel& model, const CvaModel& cva,
                             const WaveletConfig& wavelet, const std::vector<double>& current_A,
                             const std::vector<double>& voltage_V,
                             const LstmNetwork* reference_net = nullptr);

/// Whole-cycle counterpart of `evaluate_stream` (no estimates).
StreamReport evaluate_batch(const MonitoringModel& model, const CvaModel& cva,
                            const ChannelMatrix& cycle);

}  // namespace socta
