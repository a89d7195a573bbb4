#include "socta/wavelet.hpp"

#include <cmath>
#include <numeric>

#include "socta/error.hpp"

namespace socta {
namespace {

std::vector<double> normalise(std::vector<double> taps) {
  double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (auto& t : taps) t /= sum;
  return taps;
}

// Leading edge held at the first sample: x[-i] = x[0]. Any mirror would read future samples.
std::size_t clamp_index(std::ptrdiff_t i) { return i < 0 ? 0 : static_cast<std::size_t>(i); }

void smooth_level(const std::vector<double>& prev, std::vector<double>& next, std::size_t dilation,
                  const std::vector<double>& taps) {
  const auto n = prev.size();
  next.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t m = 0; m < taps.size(); ++m) {
      auto idx = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(m * dilation);
      acc += taps[m] * prev[clamp_index(idx)];
    }
    next[k] = acc;
  }
}

}  // namespace

WaveletBasis WaveletBasis::from_name(const std::string& name) {
  if (name == "haar" || name == "db1") return {"haar", {0.5, 0.5}};
  if (name == "db2") {
    return {"db2", normalise({0.4829629131445341, 0.8365163037378079, 0.2241438680420134,
                              -0.1294095225512604})};
  }
  if (name == "db4") {
    return {"db4", normalise({0.2303778133088964, 0.7148465705529154, 0.6308807679298587,
                              -0.0279837694168599, -0.1870348117190931, 0.0308413818355607,
                              0.0328830116668852, -0.0105974017850690})};
  }
  throw ValidationError("unknown wavelet basis '" + name + "' (expected haar, db2 or db4)");
}

std::vector<double> WaveletDecomposition::reconstruct() const {
  std::vector<double> out = approximation;
  for (const auto& d : details) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += d[k];
  }
  return out;
}

WaveletDecomposition decompose(std::span<const double> signal, int levels,
                               const WaveletBasis& basis) {
  if (levels < 1) throw ValidationError("wavelet levels must be >= 1");
  if (levels > 30 || signal.size() < (std::size_t{1} << levels)) {
    throw ValidationError("signal of length " + std::to_string(signal.size()) +
                          " too short for " + std::to_string(levels) + " wavelet levels");
  }
  for (std::size_t k = 0; k < signal.size(); ++k) {
    if (!std::isfinite(signal[k])) {
      throw ValidationError("non-finite sample at index " + std::to_string(k));
    }
  }

  WaveletDecomposition dec;
  dec.levels = levels;
  dec.basis = basis.name;
  std::vector<double> approx(signal.begin(), signal.end());
  std::vector<double> smoother;
  for (int j = 1; j <= levels; ++j) {
    smooth_level(approx, smoother, std::size_t{1} << (j - 1), basis.lowpass);
    std::vector<double> detail(approx.size());
    for (std::size_t k = 0; k < approx.size(); ++k) detail[k] = approx[k] - smoother[k];
    dec.details.push_back(std::move(detail));
    approx.swap(smoother);
  }
  dec.approximation = std::move(approx);
  return dec;
}

WaveletDecomposition passthrough(std::span<const double> signal) {
  WaveletDecomposition dec;
  dec.approximation.assign(signal.begin(), signal.end());
  dec.levels = 0;
  dec.basis = "none";
  return dec;
}

std::size_t causal_support(int levels, const WaveletBasis& basis) {
  if (levels <= 0) return 1;
  return (basis.lowpass.size() - 1) * ((std::size_t{1} << levels) - 1) + 1;
}

ChannelMatrix assemble_channels(const WaveletDecomposition& current_dec,
                                const WaveletDecomposition& voltage_dec) {
  const auto n = current_dec.size();
  if (voltage_dec.size() != n) {
    throw ValidationError("current and voltage decompositions differ in length");
  }
  const auto jc = current_dec.details.size();
  const auto jv = voltage_dec.details.size();
  ChannelMatrix out;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(jc + jv + 2));

  Eigen::Index col = 0;
  auto put = [&](const std::vector<double>& band, std::string name) {
    for (std::size_t k = 0; k < n; ++k) out.values(static_cast<Eigen::Index>(k), col) = band[k];
    out.channel_names.push_back(std::move(name));
    ++col;
  };
  put(current_dec.approximation, "current_a");
  for (std::size_t j = 0; j < jc; ++j) put(current_dec.details[j], "current_d" + std::to_string(j + 1));
  put(voltage_dec.approximation, "voltage_a");
  for (std::size_t j = 0; j < jv; ++j) put(voltage_dec.details[j], "voltage_d" + std::to_string(j + 1));

  if (!out.values.allFinite()) throw ValidationError("channel matrix has non-finite entries");
  return out;
}

ChannelMatrix extend_cycle(const DischargeCycle& cycle, const WaveletConfig& cfg) {
  if (cfg.levels == 0) {
    return assemble_channels(passthrough(cycle.current_A), passthrough(cycle.voltage_V));
  }
  const auto basis = WaveletBasis::from_name(cfg.basis);
  return assemble_channels(decompose(cycle.current_A, cfg.levels, basis),
                           decompose(cycle.voltage_V, cfg.levels, basis));
}

CausalWaveletStream::CausalWaveletStream(int levels, WaveletBasis basis)
    : levels_(levels), basis_(std::move(basis)), capacity_(causal_support(levels, basis_)) {
  if (levels < 0) throw ValidationError("wavelet levels must be >= 0");
}

std::vector<double> CausalWaveletStream::push(double sample) {
  if (!std::isfinite(sample)) throw ValidationError("non-finite stream sample");
  if (levels_ == 0) return {sample};
  history_.push_back(sample);
  if (history_.size() > capacity_) history_.pop_front();

  // Until the buffer is full it still starts at the stream origin, so the
  // leading-edge padding matches the batch transform exactly. Once full, the
  // newest value's dependency cone lies inside the buffer.
  std::vector<double> approx(history_.begin(), history_.end());
  std::vector<double> smoother;
  std::vector<double> bands(static_cast<std::size_t>(levels_) + 1);
  for (int j = 1; j <= levels_; ++j) {
    smooth_level(approx, smoother, std::size_t{1} << (j - 1), basis_.lowpass);
    bands[static_cast<std::size_t>(j)] = approx.back() - smoother.back();
    approx.swap(smoother);
  }
  bands[0] = approx.back();
  return bands;
}

ChannelStream::ChannelStream(const WaveletConfig& cfg)
    : cfg_(cfg),
      current_(cfg.levels, cfg.levels > 0 ? WaveletBasis::from_name(cfg.basis) : WaveletBasis{}),
      voltage_(cfg.levels, cfg.levels > 0 ? WaveletBasis::from_name(cfg.basis) : WaveletBasis{}) {}

RowVector ChannelStream::push(double current_A, double voltage_V) {
  auto c = current_.push(current_A);
  auto v = voltage_.push(voltage_V);
  RowVector row(static_cast<Eigen::Index>(c.size() + v.size()));
  Eigen::Index col = 0;
  for (double x : c) row(col++) = x;
  for (double x : v) row(col++) = x;
  return row;
}

}  // namespace socta
