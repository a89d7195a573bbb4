#include "socta/monitor.hpp"

#include <cmath>

#include "socta/error.hpp"
#include "socta/stats.hpp"

namespace socta {

std::string to_string(LimitMethod m) {
  switch (m) {
    case LimitMethod::ChiSquare:
      return "chi-square";
    case LimitMethod::BoxApprox:
      return "box-approx";
    case LimitMethod::Kde:
      return "kde";
  }
  return "kde";
}

LimitMethod limit_method_from_string(const std::string& s) {
  if (s == "chi-square") return LimitMethod::ChiSquare;
  if (s == "box-approx") return LimitMethod::BoxApprox;
  if (s == "kde") return LimitMethod::Kde;
  throw ValidationError("unknown limit method '" + s + "'");
}

double normal_fraction(const Matrix& columns, double alpha) {
  if (columns.cols() == 0) return 1.0;
  int pass = 0;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const Vector col = columns.col(j);
    auto test = stats::dagostino_pearson(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    if (test.p_value >= alpha) ++pass;
  }
  return static_cast<double>(pass) / static_cast<double>(columns.cols());
}

namespace {

void check_statistic(const Vector& s, const char* name) {
  if (s.size() < 2) throw ValidationError(std::string("too few samples for the ") + name + " limit");
  const double mean = s.mean();
  const double var = (s.array() - mean).square().sum() / static_cast<double>(s.size() - 1);
  if (!(var > 0.0)) {
    throw NumericalError(std::string("degenerate training ") + name + " statistic (zero variance)");
  }
}

double kde_limit(const Vector& s, double significance) {
  stats::GaussianKde kde(std::vector<double>(s.data(), s.data() + s.size()));
  return kde.quantile(significance);
}

}  // namespace

ControlLimit t2_limit(const Vector& statistic, int dof, double normal_share, const MonitorOptions& o) {
  ControlLimit cl;
  cl.normal_fraction = normal_share;
  if (normal_share >= o.normal_share_required) {
    cl.method = LimitMethod::ChiSquare;
    cl.value = stats::chi_square_quantile(o.significance, dof);
  } else {
    check_statistic(statistic, "T2");
    cl.method = LimitMethod::Kde;
    cl.value = kde_limit(statistic, o.significance);
  }
  return cl;
}

ControlLimit spe_limit(const Vector& statistic, double normal_share, const MonitorOptions& o) {
  check_statistic(statistic, "SPE");
  ControlLimit cl;
  cl.normal_fraction = normal_share;
  if (normal_share >= o.normal_share_required) {
    cl.method = LimitMethod::BoxApprox;
    const double mean = statistic.mean();
    const double var =
        (statistic.array() - mean).square().sum() / static_cast<double>(statistic.size() - 1);
    cl.value = stats::box_quantile(mean, var, o.significance);
  } else {
    cl.method = LimitMethod::Kde;
    cl.value = kde_limit(statistic, o.significance);
  }
  return cl;
}

Matrix residual_variates(const CvaModel& cva, const Matrix& z) {
  const int r = cva.retained;
  const auto rest = cva.past_dim() - r;
  if (z.cols() != cva.past_dim()) throw ValidationError("canonical variate width mismatch");
  if (rest == 0) return Matrix::Zero(z.rows(), z.cols());
  return z.rightCols(rest) * cva.singvecs_past.rightCols(rest).transpose();
}

MonitorStatistics monitor_statistics(const CvaModel& cva, const Matrix& z) {
  if (z.cols() != cva.past_dim()) throw ValidationError("canonical variate width mismatch");
  MonitorStatistics s;
  s.t2 = z.leftCols(cva.retained).rowwise().squaredNorm();
  s.spe = residual_variates(cva, z).rowwise().squaredNorm();
  return s;
}

MonitoringModel build_monitor(const CvaModel& cva, const Matrix& z, const MonitorOptions& options) {
  if (!(options.significance > 0.0 && options.significance < 1.0)) {
    throw ValidationError("significance must lie in (0,1)");
  }
  MonitoringModel m;
  m.retained = cva.retained;
  m.past_dim = cva.past_dim();
  m.options = options;
  const auto stats = monitor_statistics(cva, z);

  const Matrix zs = z.leftCols(cva.retained);
  if (stats.t2.maxCoeff() == 0.0) {
    // No variation in the system subspace: any positive limit gives zero false alarms.
    m.t2_limit = {stats::chi_square_quantile(options.significance, cva.retained), LimitMethod::ChiSquare, 1.0};
  } else {
    m.t2_limit = t2_limit(stats.t2, cva.retained, normal_fraction(zs, options.normality_alpha), options);
  }
  if (cva.retained == cva.past_dim() || stats.spe.maxCoeff() == 0.0) {
    m.spe_limit = {stats::chi_square_quantile(options.significance, 1.0), LimitMethod::ChiSquare, 1.0};
  } else {
    const Matrix zr = residual_variates(cva, z);
    m.spe_limit = spe_limit(stats.spe, normal_fraction(zr, options.normality_alpha), options);
  }
  if (!(m.t2_limit.value > 0.0) || !(m.spe_limit.value > 0.0)) {
    throw NumericalError("non-positive control limit");
  }
  return m;
}

MonitoringVerdict score(const MonitoringModel& model, const Vector& z_system, const Vector& z_residual) {
  if (z_system.size() != model.retained || z_residual.size() != model.past_dim) {
    throw ValidationError("projection dimensions do not match the monitoring model");
  }
  MonitoringVerdict v;
  v.t2 = z_system.squaredNorm();
  v.spe = z_residual.squaredNorm();
  v.t2_exceeds = v.t2 > model.t2_limit.value;
  v.spe_exceeds = v.spe > model.spe_limit.value;
  return v;
}

void CaseTracker::update(MonitoringVerdict& v) {
  t2_run_ = v.t2_exceeds ? t2_run_ + 1 : 0;
  spe_run_ = v.spe_exceeds ? spe_run_ + 1 : 0;
  v.consecutive_exceed_count = std::max(t2_run_, spe_run_);
  v.decision = v.consecutive_exceed_count >= limit_ ? Case::II : Case::I;
  if (v.decision == Case::II) latched_ = true;
}

StreamMonitor::StreamMonitor(const MonitoringModel& model, const CvaModel& cva,
                             const WaveletConfig& wavelet, const LstmNetwork* reference_net)
    : model_(&model), cva_(&cva), channels_(wavelet), tracker_(model.options.consecutive_limit) {
  if (wavelet.channel_count() != cva.channels) {
    throw ValidationError("wavelet configuration yields " + std::to_string(wavelet.channel_count()) +
                          " channels, CVA model expects " + std::to_string(cva.channels));
  }
  if (reference_net != nullptr) estimator_.emplace(*reference_net);
}

std::size_t StreamMonitor::warmup() const { return static_cast<std::size_t>(cva_->lag.past) - 1; }

std::optional<StreamStep> StreamMonitor::push(double current_A, double voltage_V) {
  window_.push_front(channels_.push(current_A, voltage_V));
  if (window_.size() > static_cast<std::size_t>(cva_->lag.past)) window_.pop_back();
  const std::size_t k = count_++;
  if (window_.size() < static_cast<std::size_t>(cva_->lag.past)) return std::nullopt;

  const Vector x = cva_->past_scaler.apply(
      past_vector(std::vector<RowVector>(window_.begin(), window_.end())));
  const auto proj = project(*cva_, x);
  StreamStep step;
  step.k = k;
  step.verdict = score(*model_, proj.system, proj.residual);
  tracker_.update(step.verdict);
  step.latched = tracker_.latched() ? Case::II : Case::I;
  if (estimator_) {
    const double y = estimator_->step(proj.full);
    if (step.latched == Case::I) step.estimate = y;
  }
  return step;
}

StreamReport evaluate_stream(const MonitoringModel& model, const CvaModel& cva,
                             const WaveletConfig& wavelet, const std::vector<double>& current_A,
                             const std::vector<double>& voltage_V, const LstmNetwork* reference_net) {
  if (current_A.size() != voltage_V.size()) throw ValidationError("current/voltage stream lengths differ");
  StreamMonitor monitor(model, cva, wavelet, reference_net);
  StreamReport report;
  report.warmup = monitor.warmup();
  if (current_A.size() <= report.warmup) {
    throw ValidationError("stream of " + std::to_string(current_A.size()) +
                          " samples is shorter than the warm-up of " + std::to_string(report.warmup + 1));
  }
  for (std::size_t k = 0; k < current_A.size(); ++k) {
    auto step = monitor.push(current_A[k], voltage_V[k]);
    if (!step) continue;
    if (step->latched == Case::II && !report.latch_index) report.latch_index = step->k;
    report.steps.push_back(*step);
  }
  report.decision = report.latch_index ? Case::II : Case::I;
  return report;
}

StreamReport evaluate_batch(const MonitoringModel& model, const CvaModel& cva, const ChannelMatrix& cycle) {
  const Matrix rows = past_rows(cycle, cva.lag.past);
  StreamReport report;
  report.warmup = static_cast<std::size_t>(cva.lag.past) - 1;
  CaseTracker tracker(model.options.consecutive_limit);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    // Row i ends at sample l - 1 + i.
    const Vector x = cva.past_scaler.apply(Vector(rows.row(i).transpose()));
    const auto proj = project(cva, x);
    StreamStep step;
    step.k = report.warmup + static_cast<std::size_t>(i);
    step.verdict = score(model, proj.system, proj.residual);
    tracker.update(step.verdict);
    step.latched = tracker.latched() ? Case::II : Case::I;
    if (step.latched == Case::II && !report.latch_index) report.latch_index = step.k;
    report.steps.push_back(step);
  }
  report.decision = report.latch_index ? Case::II : Case::I;
  return report;
}

}  // namespace socta
