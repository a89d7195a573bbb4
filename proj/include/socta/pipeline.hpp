#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "socta/cva.hpp"
#include "socta/dataset.hpp"
#include "socta/lstm.hpp"
#include "socta/monitor.hpp"
#include "socta/transfer.hpp"
#include "socta/wavelet.hpp"

namespace socta {

/// Simulates `count` drive cycles at one temperature, each from its own profile seed.
std::vector<DischargeCycle> simulate_cycles(const EcmParams& params, const DriveProfileSpec& profile,
                                            double temperature_C, int count, std::uint64_t seed,
                                            const std::string& id_prefix);

/// Past rows of a cycle with the SoC label of each row's newest sample.
struct LabeledRows {
  Matrix rows;
  Vector soc;
};

LabeledRows labeled_past_rows(const DischargeCycle& cycle, const WaveletConfig& wavelet, int past_lag);

/// SoC at samples l - 1, ..., K - 1 (the samples that receive estimates).
Vector aligned_truth(const DischargeCycle& cycle, int past_lag);

struct ReferenceConfig {
  WaveletConfig wavelet;
  /// Unset: autocorrelation rule.
  std::optional<int> lag;
  /// Unset: knee of the canonical correlations.
  std::optional<int> retained;
  NetworkSpec network = NetworkSpec::parse("L(16)N(16)");
  TrainConfig train;
  MonitorOptions monitor;
};

struct ReferenceModel {
  WaveletConfig wavelet;
  CvaModel cva;
  MonitoringModel monitor;
  LstmNetwork network;
  /// Autocorrelation curve when the lag was selected automatically.
  std::vector<double> lag_curve;
  TrainResult training;
};

struct ReferenceData {
  std::vector<DischargeCycle> train;
  std::vector<DischargeCycle> validation;
};

/// Wavelet extension, CVA, monitoring limits, and the reference regressor Γ on all CVs.
ReferenceModel train_reference(const ReferenceData& data, const ReferenceConfig& cfg);

/// Canonical variates of every past row of a cycle through the reference CVA.
Matrix reference_variates(const ReferenceModel& model, const DischargeCycle& cycle);

/// Γ applied to a whole cycle; entries align with `aligned_truth`.
Vector predict_reference(const ReferenceModel& model, const DischargeCycle& cycle);

/// Canonical variates and labels stacked over several cycles (one Sequence per cycle).
std::vector<Sequence> reference_sequences(const ReferenceModel& model, const std::vector<DischargeCycle>& cycles,
                                          int columns);

struct TransferConfig {
  NetworkSpec shared_network = NetworkSpec::parse("L(16)N(16)");
  NetworkSpec specific_network = NetworkSpec::parse("L(16)N(16)");
  TrainConfig shared_train;
  TrainConfig specific_train;
  TransferOptions options;
  MonitorOptions monitor;
};

struct TransferOutcome {
  TransferModel model;
  ConsistentSelection selection;
};

/// Consistent-feature selection against the reference training variates, F_q,
/// F_t and the adjusting factors from one labelled target cycle.
TransferOutcome fit_transfer(const ReferenceModel& reference, const ReferenceData& reference_data,
                             const DischargeCycle& target_train, const TransferConfig& cfg);

/// Transfer-model estimates for a whole target cycle; align with `aligned_truth`.
Vector predict_transfer(const TransferModel& model, const WaveletConfig& wavelet, const DischargeCycle& cycle);

/// Split by position: the last `test_cycles` cycles test, the `validation_cycles`
/// before them validation, the rest training.
struct CycleSplit {
  std::vector<DischargeCycle> train;
  std::vector<DischargeCycle> validation;
  std::vector<DischargeCycle> test;
};
CycleSplit split_cycles(const std::vector<DischargeCycle>& cycles, int test_cycles = 1,
                        int validation_cycles = 1);

}  // namespace socta
