#include "socta/cva.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace socta {

void LagSpec::validate() const {
  if (past < 1 || future < 1) throw ValidationError("lags must be >= 1");
}

std::vector<double> autocorrelation_rss(const std::vector<ChannelMatrix>& cycles, int max_lag) {
  if (cycles.empty()) throw ValidationError("no cycles for autocorrelation");
  const auto channels = cycles.front().channels();
  Eigen::Index total = 0;
  Vector mean = Vector::Zero(channels);
  for (const auto& c : cycles) {
    if (c.channels() != channels) throw ValidationError("cycles differ in channel count");
    mean += c.values.colwise().sum().transpose();
    total += c.rows();
  }
  mean /= static_cast<double>(total);

  std::vector<Matrix> centered;
  centered.reserve(cycles.size());
  Vector denom = Vector::Zero(channels);
  for (const auto& c : cycles) {
    centered.push_back(c.values.rowwise() - mean.transpose());
    denom += centered.back().colwise().squaredNorm().transpose();
  }

  std::vector<double> curve(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    Vector num = Vector::Zero(channels);
    for (const auto& x : centered) {
      const auto n = x.rows() - k;
      if (n <= 0) continue;
      num += (x.topRows(n).array() * x.bottomRows(n).array()).colwise().sum().matrix().transpose();
    }
    double ss = 0.0;
    for (Eigen::Index ch = 0; ch < channels; ++ch) {
      if (denom(ch) > 0.0) {
        double rho = num(ch) / denom(ch);
        ss += rho * rho;
      }
    }
    curve[static_cast<std::size_t>(k)] = std::sqrt(ss);
  }
  return curve;
}

LagSelection select_lags(const std::vector<ChannelMatrix>& cycles, double band) {
  if (cycles.empty()) throw ValidationError("no cycles for lag selection");
  if (!(band > 0.0)) throw ValidationError("confidence band must be positive");
  Eigen::Index longest = 0;
  for (const auto& c : cycles) longest = std::max(longest, c.rows());
  const int max_lag = static_cast<int>(longest / 4);
  if (max_lag < 3) throw ValidationError("cycles too short for lag selection");

  auto curve = autocorrelation_rss(cycles, max_lag);
  constexpr int kStay = 3;
  for (int k = 1; k + kStay - 1 <= max_lag; ++k) {
    bool inside = true;
    for (int s = 0; s < kStay; ++s) {
      if (std::abs(curve[static_cast<std::size_t>(k + s)]) > band) {
        inside = false;
        break;
      }
    }
    if (inside) return {LagSpec{k, k}, std::move(curve)};
  }
  throw LagSelectionError("no lag up to " + std::to_string(max_lag) +
                              " brings the autocorrelation inside the confidence band; "
                              "signals too persistent, set the lag explicitly",
                          std::move(curve));
}

ColumnScaler ColumnScaler::fit(const Matrix& rows) {
  if (rows.rows() < 2) throw ValidationError("need at least two rows to normalise");
  ColumnScaler s;
  s.mean = rows.colwise().mean().transpose();
  s.inv_std.resize(rows.cols());
  const double denom = static_cast<double>(rows.rows() - 1);
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    double var = (rows.col(j).array() - s.mean(j)).square().sum() / denom;
    double sd = std::sqrt(var);
    s.inv_std(j) = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  return s;
}

Matrix ColumnScaler::apply(const Matrix& rows) const {
  if (rows.cols() != mean.size()) throw ValidationError("normalisation width mismatch");
  return (rows.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array();
}

Vector ColumnScaler::apply(const Vector& row) const {
  if (row.size() != mean.size()) throw ValidationError("normalisation width mismatch");
  return (row - mean).cwiseProduct(inv_std);
}

PastFutureMatrices arrange_past_future(const std::vector<ChannelMatrix>& cycles, const LagSpec& lag) {
  lag.validate();
  if (cycles.empty()) throw ValidationError("no cycles to arrange");
  const auto channels = cycles.front().channels();
  const Eigen::Index l = lag.past;
  const Eigen::Index h = lag.future;

  PastFutureMatrices pf;
  pf.lag = lag;
  pf.channels = static_cast<int>(channels);
  Eigen::Index total = 0;
  for (const auto& c : cycles) {
    if (c.channels() != channels) throw ValidationError("cycles differ in channel count");
    Eigen::Index n = std::max<Eigen::Index>(0, c.rows() - l - h + 1);
    pf.rows_per_cycle.push_back(n);
    total += n;
  }
  if (total == 0) {
    throw ValidationError("all cycles too short for l=" + std::to_string(l) +
                          ", h=" + std::to_string(h));
  }

  Matrix past(total, channels * l);
  Matrix future(total, channels * h);
  Eigen::Index row = 0;
  for (std::size_t ci = 0; ci < cycles.size(); ++ci) {
    const auto& x = cycles[ci].values;
    for (Eigen::Index i = 0; i < pf.rows_per_cycle[ci]; ++i, ++row) {
      const Eigen::Index anchor = l + i;
      for (Eigen::Index j = 0; j < l; ++j) {
        past.block(row, j * channels, 1, channels) = x.row(anchor - 1 - j);
      }
      for (Eigen::Index j = 0; j < h; ++j) {
        future.block(row, j * channels, 1, channels) = x.row(anchor + j);
      }
    }
  }
  if (total < 2) throw ValidationError("need at least two past/future pairs");
  pf.past_scaler = ColumnScaler::fit(past);
  pf.future_scaler = ColumnScaler::fit(future);
  pf.past = pf.past_scaler.apply(past);
  pf.future = pf.future_scaler.apply(future);
  return pf;
}

Matrix past_rows(const ChannelMatrix& cycle, int past_lag) {
  if (past_lag < 1) throw ValidationError("past lag must be >= 1");
  const auto channels = cycle.channels();
  const Eigen::Index l = past_lag;
  const Eigen::Index n = cycle.rows() - l + 1;
  if (n <= 0) throw ValidationError("cycle shorter than the past lag");
  Matrix out(n, channels * l);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index anchor = l + i;
    for (Eigen::Index j = 0; j < l; ++j) {
      out.block(i, j * channels, 1, channels) = cycle.values.row(anchor - 1 - j);
    }
  }
  return out;
}

Vector past_vector(const std::vector<RowVector>& newest_first) {
  if (newest_first.empty()) throw ValidationError("empty past window");
  const auto channels = newest_first.front().size();
  Vector out(channels * static_cast<Eigen::Index>(newest_first.size()));
  for (std::size_t j = 0; j < newest_first.size(); ++j) {
    out.segment(static_cast<Eigen::Index>(j) * channels, channels) = newest_first[j].transpose();
  }
  return out;
}

void regularize(Matrix& covariance, double ridge) {
  const double dim = static_cast<double>(covariance.rows());
  const double shift = ridge * covariance.trace() / dim;
  covariance.diagonal().array() += shift;
}

Matrix inverse_sqrt(const Matrix& symmetric, double eigen_floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  Vector inv = eig.eigenvalues().cwiseMax(eigen_floor).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

void CvaModel::set_retained(int r) {
  const int dim = past_dim();
  if (r < 1 || r > dim) {
    throw ValidationError("R must lie in [1, " + std::to_string(dim) + "], got " + std::to_string(r));
  }
  retained = r;
  proj_sys = proj_full.topRows(r);
  const Matrix vs = singvecs_past.leftCols(r);
  proj_res = (Matrix::Identity(dim, dim) - vs * vs.transpose()) * whiten_past;
}

int select_retained(const Vector& singvals) {
  const auto n = singvals.size();
  if (n <= 2) return 1;
  const double first = singvals(0);
  const double last = singvals(n - 1);
  int best = 1;
  double best_dist = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double chord = first + (last - first) * static_cast<double>(i) / static_cast<double>(n - 1);
    double dist = std::abs(singvals(i) - chord);
    if (dist > best_dist + 1e-15) {
      best_dist = dist;
      best = static_cast<int>(i) + 1;
    }
  }
  return best;
}

CvaModel fit_cva(const PastFutureMatrices& pf, std::optional<int> retained, const CvaOptions& options) {
  const auto n = pf.past.rows();
  const auto dp = pf.past.cols();
  const auto df = pf.future.cols();
  if (n <= dp) {
    throw ValidationError("CVA needs more rows (" + std::to_string(n) + ") than past dimensions (" +
                          std::to_string(dp) + ")");
  }
  const double denom = static_cast<double>(n - 1);
  Matrix spp = pf.past.transpose() * pf.past / denom;
  Matrix sff = pf.future.transpose() * pf.future / denom;
  Matrix spf = pf.past.transpose() * pf.future / denom;
  if (!(spp.trace() > 0.0) || !(sff.trace() > 0.0)) {
    throw NumericalError("rank-deficient covariance: all columns are constant");
  }
  regularize(spp, options.ridge);
  regularize(sff, options.ridge);

  CvaModel m;
  m.lag = pf.lag;
  m.channels = pf.channels;
  m.past_scaler = pf.past_scaler;
  m.future_scaler = pf.future_scaler;
  m.whiten_past = inverse_sqrt(spp, options.eigen_floor);
  m.whiten_future = inverse_sqrt(sff, options.eigen_floor);

  const Matrix core = m.whiten_past * spf * m.whiten_future;
  Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD of the whitened cross-covariance failed");
  m.singvecs_past = svd.matrixU();
  m.singvecs_future = svd.matrixV();
  // Sign convention: the largest-magnitude loading of each past projection row is positive.
  const Matrix loadings = m.singvecs_past.transpose() * m.whiten_past;
  for (Eigen::Index i = 0; i < dp; ++i) {
    Eigen::Index arg = 0;
    loadings.row(i).cwiseAbs().maxCoeff(&arg);
    if (loadings(i, arg) < 0.0) {
      m.singvecs_past.col(i) *= -1.0;
      if (i < df) m.singvecs_future.col(i) *= -1.0;
    }
  }
  m.singvals = Vector::Zero(dp);
  const auto k = svd.singularValues().size();
  m.singvals.head(k) = svd.singularValues();
  if (!m.singvals.allFinite()) throw NumericalError("non-finite canonical correlations");

  m.proj_full = m.singvecs_past.transpose() * m.whiten_past;
  m.proj_future = m.singvecs_future.transpose() * m.whiten_future;
  m.set_retained(retained ? *retained : select_retained(m.singvals));
  return m;
}

Projection project(const CvaModel& model, const Vector& normalized_past) {
  if (normalized_past.size() != model.past_dim()) {
    throw ValidationError("past vector has " + std::to_string(normalized_past.size()) +
                          " entries, model expects " + std::to_string(model.past_dim()));
  }
  Projection p;
  p.full = model.proj_full * normalized_past;
  p.system = p.full.head(model.retained);
  p.residual = model.proj_res * normalized_past;
  return p;
}

Matrix canonical_variates(const CvaModel& model, const Matrix& raw_past_rows) {
  return model.past_scaler.apply(raw_past_rows) * model.proj_full.transpose();
}

}  // namespace socta
