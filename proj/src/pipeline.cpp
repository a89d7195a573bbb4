#include "socta/pipeline.hpp"

#include <algorithm>

#include "socta/error.hpp"

namespace socta {

std::vector<DischargeCycle> simulate_cycles(const EcmParams& params, const DriveProfileSpec& profile,
                                            double temperature_C, int count, std::uint64_t seed,
                                            const std::string& id_prefix) {
  if (count < 1) throw ValidationError("cycle count must be >= 1");
  std::vector<DischargeCycle> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = seed * 1000003ULL + static_cast<std::uint64_t>(i) * 7919ULL + 17ULL;
    const auto prof = make_drive_profile(profile, s);
    out.push_back(simulate_cycle(params, prof, temperature_C, s + 1, id_prefix + std::to_string(i)));
  }
  return out;
}

LabeledRows labeled_past_rows(const DischargeCycle& cycle, const WaveletConfig& wavelet, int past_lag) {
  LabeledRows out;
  out.rows = past_rows(extend_cycle(cycle, wavelet), past_lag);
  out.soc = aligned_truth(cycle, past_lag);
  return out;
}

Vector aligned_truth(const DischargeCycle& cycle, int past_lag) {
  const auto k = static_cast<Eigen::Index>(cycle.size());
  const Eigen::Index n = k - past_lag + 1;
  if (n <= 0) throw ValidationError("cycle " + cycle.cycle_id + " is shorter than the past lag");
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = cycle.soc_pct[static_cast<std::size_t>(past_lag - 1 + i)];
  return y;
}

CycleSplit split_cycles(const std::vector<DischargeCycle>& cycles, int test_cycles, int validation_cycles) {
  if (cycles.empty()) throw ValidationError("no cycles to split");
  if (test_cycles < 0 || validation_cycles < 0) throw ValidationError("split counts must be >= 0");
  // At least one training cycle is kept; validation gives way first, then test.
  const int n = static_cast<int>(cycles.size());
  const int test = std::min(test_cycles, n - 1);
  const int val = std::min(validation_cycles, n - 1 - test);
  CycleSplit s;
  s.train.assign(cycles.begin(), cycles.begin() + (n - test - val));
  s.validation.assign(cycles.begin() + (n - test - val), cycles.begin() + (n - test));
  s.test.assign(cycles.begin() + (n - test), cycles.end());
  return s;
}

ReferenceModel train_reference(const ReferenceData& data, const ReferenceConfig& cfg) {
  if (data.train.empty()) throw ValidationError("no reference training cycles");
  ReferenceModel model;
  model.wavelet = cfg.wavelet;

  std::vector<ChannelMatrix> channels;
  channels.reserve(data.train.size());
  for (const auto& c : data.train) channels.push_back(extend_cycle(c, cfg.wavelet));

  LagSpec lag;
  if (cfg.lag) {
    lag = {*cfg.lag, *cfg.lag};
  } else {
    auto sel = select_lags(channels);
    lag = sel.lag;
    model.lag_curve = std::move(sel.curve);
  }
  const auto pf = arrange_past_future(channels, lag);
  model.cva = fit_cva(pf, cfg.retained);
  const Matrix z = pf.past * model.cva.proj_full.transpose();
  model.monitor = build_monitor(model.cva, z, cfg.monitor);

  model.network = LstmNetwork(model.cva.past_dim(), cfg.network, cfg.train.seed);
  const int dim = model.cva.past_dim();
  model.training = train(model.network, reference_sequences(model, data.train, dim), cfg.train,
                         data.validation.empty() ? std::vector<Sequence>{}
                                                 : reference_sequences(model, data.validation, dim));
  return model;
}

Matrix reference_variates(const ReferenceModel& model, const DischargeCycle& cycle) {
  return canonical_variates(model.cva, past_rows(extend_cycle(cycle, model.wavelet), model.cva.lag.past));
}

std::vector<Sequence> reference_sequences(const ReferenceModel& model, const std::vector<DischargeCycle>& cycles,
                                          int columns) {
  std::vector<Sequence> out;
  out.reserve(cycles.size());
  for (const auto& c : cycles) {
    const Matrix z = reference_variates(model, c);
    out.push_back({z.leftCols(columns), aligned_truth(c, model.cva.lag.past)});
  }
  return out;
}

Vector predict_reference(const ReferenceModel& model, const DischargeCycle& cycle) {
  return predict(model.network, reference_variates(model, cycle)).cwiseMax(0.0).cwiseMin(100.0);
}

TransferOutcome fit_transfer(const ReferenceModel& reference, const ReferenceData& reference_data,
                             const DischargeCycle& target_train, const TransferConfig& cfg) {
  if (reference_data.train.empty()) throw ValidationError("no reference training cycles");
  const int dim = reference.cva.past_dim();
  const int l = reference.cva.lag.past;

  Eigen::Index rows = 0;
  std::vector<Matrix> parts;
  for (const auto& c : reference_data.train) {
    parts.push_back(reference_variates(reference, c));
    rows += parts.back().rows();
  }
  Matrix zx(rows, dim);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    zx.middleRows(r, p.rows()) = p;
    r += p.rows();
  }

  const auto target = extract_target_cvs(extend_cycle(target_train, reference.wavelet), reference.cva.lag);
  TransferOutcome out;
  out.selection = select_consistent(zx, target.variates, cfg.monitor);
  const int q = out.selection.q;

  std::optional<LstmNetwork> shared;
  if (q == dim && cfg.shared_network == reference.network.spec()) {
    shared = reference.network;
  } else if (q > 0) {
    shared = train_shared(reference_sequences(reference, reference_data.train, q), cfg.shared_network,
                          cfg.shared_train,
                          reference_data.validation.empty()
                              ? std::vector<Sequence>{}
                              : reference_sequences(reference, reference_data.validation, q));
  }

  TransferTrainingData data;
  const auto labeled = labeled_past_rows(target_train, reference.wavelet, l);
  data.target_past_rows = labeled.rows;
  data.target_soc = labeled.soc;
  data.reference_variates = std::move(zx);
  out.model = train_transfer(std::move(shared), q, target.cva, data, cfg.specific_network, cfg.specific_train,
                             cfg.options);
  return out;
}

Vector predict_transfer(const TransferModel& model, const WaveletConfig& wavelet, const DischargeCycle& cycle) {
  return predict_target(model, past_rows(extend_cycle(cycle, wavelet), model.target_cva.lag.past));
}

}  // namespace socta
