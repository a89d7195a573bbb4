#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "socta/cva.hpp"
#include "socta/lstm.hpp"
#include "socta/monitor.hpp"
#include "socta/wavelet.hpp"

namespace socta {

struct TargetFeatures {
  /// Canonical variates of the target cycle, all features retained.
  Matrix variates;
  CvaModel cva;
};

/// Arranges, self-normalises and fits CVA on one target-temperature cycle.
TargetFeatures extract_target_cvs(const ChannelMatrix& target_cycle, const LagSpec& lag);

struct ConsistentSelection {
  int q = 0;
  /// Control limit for each candidate prefix length that was evaluated (index q-1).
  std::vector<double> per_q_limits;
  /// Longest run of consecutive target exceedances for each evaluated prefix.
  std::vector<int> longest_run;
};

/// Ascending scan over prefix lengths q: the limit for the first q reference
/// variates is built as for T², the target statistic over its first q variates
/// is checked against it, and the scan stops at the first q showing
/// `consecutive_limit` consecutive exceedances; the result is the previous q.
ConsistentSelection select_consistent(const Matrix& reference_variates, const Matrix& target_variates,
                                      const MonitorOptions& options = {});

/// H = var(G_q) / var(G), where G is the sample-by-sample Gram matrix Z Zᵀ of the
/// reference variates and G_q its counterpart over the first q variates; var is the
/// population variance over all matrix entries.
double similarity_index(const Matrix& reference_variates, int q);

/// Adjusting factors (α₁, α₂) for the shared and specific predictors.
///
/// Each update multiplies a factor by Ψ = exp(-η (f - y)²) of its predictor and
/// renormalises. The state is kept as log(α₂/α₁) so long sequences neither
/// underflow nor leave the open interval.
class AdjustingFactors {
 public:
  explicit AdjustingFactors(double eta = 0.5, double alpha1 = 0.5);

  void update(double shared_prediction, double specific_prediction, double truth);
  double alpha1() const;
  double alpha2() const;
  double eta() const { return eta_; }

 private:
  double eta_;
  double log_ratio_;
};

struct TransferOptions {
  double eta = 0.5;
  /// Evaluate F_q on the reference rows Z_{x,q}(k) during α adaptation instead of
  /// the target's own consistent features.
  bool shared_on_reference_rows = false;
  /// Ψ is evaluated on SoC fractions (percent / 100).
  double error_scale = 0.01;
};

struct TransferModel {
  int q = 0;
  LstmNetwork shared_net;
  LstmNetwork specific_net;
  bool has_shared = false;
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  double eta = 0.5;
  /// Target-side CVA; supplies normalisation and both projections.
  CvaModel target_cva;
  Matrix proj_consistent;  ///< first q rows of the target projection
  Matrix proj_specific;    ///< (I - V_q V_qᵀ) Σ_tt^{-1/2}
  double similarity_H = 0.0;
  std::vector<double> alpha1_trace;
};

/// Specific-feature projection for the first q target variates.
Matrix specific_projection(const CvaModel& target_cva, int q);

/// Trains F_q on the first q reference variates.
LstmNetwork train_shared(const std::vector<Sequence>& reference_q_sequences, const NetworkSpec& spec,
                         const TrainConfig& cfg, const std::vector<Sequence>& validation = {});

struct TransferTrainingData {
  /// Target cycle past rows (unnormalised) and SoC labels aligned to them.
  Matrix target_past_rows;
  Vector target_soc;
  /// Reference variates, used only for H and the reference-row option.
  Matrix reference_variates;
};

/// Trains the single-layer specific predictor on the target's specific
/// features, then adapts (α₁, α₂) over the target training sequence.
TransferModel train_transfer(std::optional<LstmNetwork> shared_net, int q, const CvaModel& target_cva,
                             const TransferTrainingData& data, const NetworkSpec& specific_spec,
                             const TrainConfig& cfg, const TransferOptions& options = {});

/// α₁·F_q(z_q) + α₂·F_t(z_resid) over unnormalised target past rows, clamped to [0,100].
Vector predict_target(const TransferModel& model, const Matrix& raw_past_rows);

/// Online version fed with raw (current, voltage) samples.
class TransferStream {
 public:
  TransferStream(const TransferModel& model, const WaveletConfig& wavelet);
  std::optional<double> push(double current_A, double voltage_V);
  std::size_t warmup() const { return static_cast<std::size_t>(model_->target_cva.lag.past) - 1; }

 private:
  const TransferModel* model_;
  ChannelStream channels_;
  std::deque<RowVector> window_;
  std::optional<LstmStepper> shared_;
  LstmStepper specific_;
};

}  // namespace socta
