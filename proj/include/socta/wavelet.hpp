#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

#include "socta/dataset.hpp"
#include "socta/linalg.hpp"

namespace socta {

/// Low-pass scaling filter of an orthogonal wavelet, normalised so its taps sum to one.
struct WaveletBasis {
  std::string name;
  std::vector<double> lowpass;

  /// Known names: "haar", "db2", "db4". Throws ValidationError otherwise.
  static WaveletBasis from_name(const std::string& name);
};

/// Approximation plus `levels` detail bands, every band as long as the input.
/// The bands are additive: approximation + sum(details) == input.
struct WaveletDecomposition {
  std::vector<double> approximation;
  std::vector<std::vector<double>> details;
  int levels = 0;
  std::string basis;

  std::size_t size() const { return approximation.size(); }
  std::vector<double> reconstruct() const;
};

/// Undecimated (à trous) multiresolution transform with causal taps.
///
/// Level j smooths the previous approximation with the low-pass filter dilated by
/// 2^(j-1), looking only backwards in time; before the first sample the signal
/// is held at its first value. Detail j is the difference of consecutive
/// approximations. Because every output depends on past samples only, a stream
/// processed sample by sample yields the same bands as the whole recording.
WaveletDecomposition decompose(std::span<const double> signal, int levels,
                               const WaveletBasis& basis);

/// Zero-level decomposition: the signal itself as approximation, no details.
WaveletDecomposition passthrough(std::span<const double> signal);

/// Number of raw samples the newest band value depends on.
std::size_t causal_support(int levels, const WaveletBasis& basis);

/// Extended measurement matrix of one cycle, K rows by J_x channels.
struct ChannelMatrix {
  Matrix values;
  std::vector<std::string> channel_names;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
};

/// Columns: [c_a, c_1..c_Jc, v_a, v_1..v_Jv].
ChannelMatrix assemble_channels(const WaveletDecomposition& current_dec,
                                const WaveletDecomposition& voltage_dec);

struct WaveletConfig {
  /// 0 passes the raw signals through unchanged.
  int levels = 5;
  std::string basis = "haar";

  int channel_count() const { return 2 * levels + 2; }
};

ChannelMatrix extend_cycle(const DischargeCycle& cycle, const WaveletConfig& cfg);

/// Sample-at-a-time version of `decompose` for one signal.
class CausalWaveletStream {
 public:
  CausalWaveletStream(int levels, WaveletBasis basis);

  /// Appends a sample and returns [approximation, detail_1..detail_J] at it.
  std::vector<double> push(double sample);

 private:
  int levels_;
  WaveletBasis basis_;
  std::size_t capacity_;
  std::deque<double> history_;
};

/// Streams raw (current, voltage) pairs into extended channel rows.
class ChannelStream {
 public:
  explicit ChannelStream(const WaveletConfig& cfg);

  RowVector push(double current_A, double voltage_V);
  int channel_count() const { return cfg_.channel_count(); }

 private:
  WaveletConfig cfg_;
  CausalWaveletStream current_;
  CausalWaveletStream voltage_;
};

}  // namespace socta
