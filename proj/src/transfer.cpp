#include "socta/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "socta/error.hpp"

namespace socta {

TargetFeatures extract_target_cvs(const ChannelMatrix& target_cycle, const LagSpec& lag) {
  lag.validate();
  const auto needed = static_cast<Eigen::Index>(lag.past + lag.future);
  if (target_cycle.rows() < needed) {
    throw ValidationError("target cycle has " + std::to_string(target_cycle.rows()) +
                          " samples, the lag needs at least " + std::to_string(needed));
  }
  const auto pf = arrange_past_future({target_cycle}, lag);
  TargetFeatures out;
  out.cva = fit_cva(pf, static_cast<int>(pf.past.cols()));
  out.variates = canonical_variates(out.cva, past_rows(target_cycle, lag.past));
  return out;
}

namespace {

int longest_run(const Vector& stat, double limit) {
  int run = 0;
  int best = 0;
  for (Eigen::Index i = 0; i < stat.size(); ++i) {
    run = stat(i) > limit ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

}  // namespace

ConsistentSelection select_consistent(const Matrix& reference_variates, const Matrix& target_variates,
                                      const MonitorOptions& options) {
  if (reference_variates.cols() != target_variates.cols()) {
    throw ValidationError("reference and target variates differ in width (" +
                          std::to_string(reference_variates.cols()) + " vs " +
                          std::to_string(target_variates.cols()) + ")");
  }
  if (reference_variates.rows() < 2 || target_variates.rows() < 1) {
    throw ValidationError("too few rows for consistent-feature selection");
  }
  const auto dim = reference_variates.cols();

  std::vector<bool> normal(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    normal[static_cast<std::size_t>(j)] =
        normal_fraction(reference_variates.col(j), options.normality_alpha) >= 1.0;
  }

  ConsistentSelection sel;
  Vector ref_t2 = Vector::Zero(reference_variates.rows());
  Vector tgt_t2 = Vector::Zero(target_variates.rows());
  int passing = 0;
  for (Eigen::Index q = 1; q <= dim; ++q) {
    ref_t2 += reference_variates.col(q - 1).array().square().matrix();
    tgt_t2 += target_variates.col(q - 1).array().square().matrix();
    if (normal[static_cast<std::size_t>(q - 1)]) ++passing;
    const double share = static_cast<double>(passing) / static_cast<double>(q);
    const auto cl = t2_limit(ref_t2, static_cast<int>(q), share, options);
    const int run = longest_run(tgt_t2, cl.value);
    sel.per_q_limits.push_back(cl.value);
    sel.longest_run.push_back(run);
    if (run >= options.consecutive_limit) {
      sel.q = static_cast<int>(q) - 1;
      return sel;
    }
  }
  sel.q = static_cast<int>(dim);
  return sel;
}

double similarity_index(const Matrix& reference_variates, int q) {
  const auto dim = reference_variates.cols();
  const auto n = static_cast<double>(reference_variates.rows());
  if (q < 0 || q > dim) throw ValidationError("q must lie in [0, " + std::to_string(dim) + "]");
  if (reference_variates.rows() == 0) throw ValidationError("no reference variates");
  if (q == 0) return 0.0;
  // Entries of Z Zᵀ: sum of squares equals ‖ZᵀZ‖_F², sum equals ‖Zᵀ1‖².
  auto gram_variance = [n](const Matrix& z) {
    const Matrix c = z.transpose() * z;
    const double mean = z.colwise().sum().squaredNorm() / (n * n);
    return c.squaredNorm() / (n * n) - mean * mean;
  };
  const double full = gram_variance(reference_variates);
  if (!(full > 0.0)) throw NumericalError("reference Gram matrix has zero variance");
  if (q == dim) return 1.0;
  return std::clamp(gram_variance(reference_variates.leftCols(q)) / full, 0.0, 1.0);
}

AdjustingFactors::AdjustingFactors(double eta, double alpha1) : eta_(eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in [0,1]");
  if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw ValidationError("initial alpha1 must lie in (0,1)");
  log_ratio_ = std::log((1.0 - alpha1) / alpha1);
}

void AdjustingFactors::update(double shared_prediction, double specific_prediction, double truth) {
  const double e1 = shared_prediction - truth;
  const double e2 = specific_prediction - truth;
  if (!std::isfinite(e1) || !std::isfinite(e2)) throw NumericalError("non-finite prediction error");
  log_ratio_ += eta_ * (e1 * e1 - e2 * e2);
}

double AdjustingFactors::alpha1() const {
  const double r = std::clamp(log_ratio_, -36.0, 36.0);
  return 1.0 / (1.0 + std::exp(r));
}

double AdjustingFactors::alpha2() const {
  const double r = std::clamp(log_ratio_, -36.0, 36.0);
  return 1.0 / (1.0 + std::exp(-r));
}

Matrix specific_projection(const CvaModel& target_cva, int q) {
  const int dim = target_cva.past_dim();
  if (q < 0 || q > dim) throw ValidationError("q must lie in [0, " + std::to_string(dim) + "]");
  const Matrix vq = target_cva.singvecs_past.leftCols(q);
  return (Matrix::Identity(dim, dim) - vq * vq.transpose()) * target_cva.whiten_past;
}

LstmNetwork train_shared(const std::vector<Sequence>& reference_q_sequences, const NetworkSpec& spec,
                         const TrainConfig& cfg, const std::vector<Sequence>& validation) {
  if (reference_q_sequences.empty()) throw ValidationError("no reference sequences for the shared predictor");
  const auto q = reference_q_sequences.front().inputs.cols();
  if (q < 1) throw ValidationError("shared predictor needs q >= 1");
  LstmNetwork net(static_cast<int>(q), spec, cfg.seed);
  train(net, reference_q_sequences, cfg, validation);
  return net;
}

namespace {

struct TargetInputs {
  Matrix consistent;
  Matrix specific;
};

TargetInputs target_inputs(const TransferModel& model, const Matrix& raw_past_rows) {
  if (raw_past_rows.cols() != model.target_cva.past_dim()) {
    throw ValidationError("past rows have width " + std::to_string(raw_past_rows.cols()) + ", expected " +
                          std::to_string(model.target_cva.past_dim()));
  }
  const Matrix xn = model.target_cva.past_scaler.apply(raw_past_rows);
  return {xn * model.proj_consistent.transpose(), xn * model.proj_specific.transpose()};
}

}  // namespace

TransferModel train_transfer(std::optional<LstmNetwork> shared_net, int q, const CvaModel& target_cva,
                             const TransferTrainingData& data, const NetworkSpec& specific_spec,
                             const TrainConfig& cfg, const TransferOptions& options) {
  const int dim = target_cva.past_dim();
  if (q < 0 || q > dim) throw ValidationError("q must lie in [0, " + std::to_string(dim) + "]");
  if (specific_spec.lstm_cells.size() != 1) {
    throw ValidationError("the specific predictor must have exactly one LSTM layer, got " +
                          specific_spec.to_string());
  }
  if (data.target_past_rows.rows() != data.target_soc.size() || data.target_soc.size() == 0) {
    throw ValidationError("target rows and labels must be non-empty and of equal length");
  }
  if (q > 0) {
    if (!shared_net) throw ValidationError("q > 0 requires a shared predictor");
    if (shared_net->input_dim() != q) {
      throw ValidationError("shared predictor expects " + std::to_string(shared_net->input_dim()) +
                            " inputs, q = " + std::to_string(q));
    }
  }

  TransferModel model;
  model.q = q;
  model.eta = options.eta;
  model.target_cva = target_cva;
  model.proj_consistent = target_cva.proj_full.topRows(q);
  model.proj_specific = specific_projection(target_cva, q);
  model.has_shared = q > 0;
  if (model.has_shared) model.shared_net = *shared_net;

  const auto in = target_inputs(model, data.target_past_rows);
  model.specific_net = LstmNetwork(dim, specific_spec, cfg.seed);
  train(model.specific_net, {Sequence{in.specific, data.target_soc}}, cfg);

  if (!model.has_shared) {
    model.alpha1 = 0.0;
    model.alpha2 = 1.0;
    model.similarity_H = 0.0;
    return model;
  }

  const Vector f_t = predict(model.specific_net, in.specific);
  Vector f_q;
  if (options.shared_on_reference_rows) {
    if (data.reference_variates.cols() < q) throw ValidationError("reference variates narrower than q");
    f_q = predict(model.shared_net, data.reference_variates.leftCols(q));
  } else {
    f_q = predict(model.shared_net, in.consistent);
  }

  AdjustingFactors factors(options.eta);
  const auto steps = std::min(f_q.size(), f_t.size());
  model.alpha1_trace.reserve(static_cast<std::size_t>(steps));
  const double s = options.error_scale;
  for (Eigen::Index k = 0; k < steps; ++k) {
    factors.update(s * f_q(k), s * f_t(k), s * data.target_soc(k));
    model.alpha1_trace.push_back(factors.alpha1());
  }
  model.alpha1 = factors.alpha1();
  model.alpha2 = factors.alpha2();
  if (data.reference_variates.size() > 0) model.similarity_H = similarity_index(data.reference_variates, q);
  return model;
}

Vector predict_target(const TransferModel& model, const Matrix& raw_past_rows) {
  const auto in = target_inputs(model, raw_past_rows);
  Vector y = model.alpha2 * predict(model.specific_net, in.specific);
  if (model.has_shared && model.alpha1 != 0.0) y += model.alpha1 * predict(model.shared_net, in.consistent);
  return y.cwiseMax(0.0).cwiseMin(100.0);
}

TransferStream::TransferStream(const TransferModel& model, const WaveletConfig& wavelet)
    : model_(&model), channels_(wavelet), specific_(model.specific_net) {
  if (wavelet.channel_count() != model.target_cva.channels) {
    throw ValidationError("wavelet configuration yields " + std::to_string(wavelet.channel_count()) +
                          " channels, transfer model expects " + std::to_string(model.target_cva.channels));
  }
  if (model.has_shared) shared_.emplace(model.shared_net);
}

std::optional<double> TransferStream::push(double current_A, double voltage_V) {
  const auto l = static_cast<std::size_t>(model_->target_cva.lag.past);
  window_.push_front(channels_.push(current_A, voltage_V));
  if (window_.size() > l) window_.pop_back();
  if (window_.size() < l) return std::nullopt;
  const Vector x = model_->target_cva.past_scaler.apply(
      past_vector(std::vector<RowVector>(window_.begin(), window_.end())));
  double y = model_->alpha2 * specific_.step(model_->proj_specific * x);
  if (shared_) {
    const double f = shared_->step(model_->proj_consistent * x);
    if (model_->alpha1 != 0.0) y += model_->alpha1 * f;
  }
  return std::clamp(y, 0.0, 100.0);
}

}  // namespace socta
