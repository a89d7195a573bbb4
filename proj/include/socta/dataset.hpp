#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace socta {

/// One timestamped discharge record at a fixed ambient temperature.
///
/// Stored current follows the benchmark convention: negative values discharge
/// the cell. State of charge is in percent.
struct DischargeCycle {
  std::string cycle_id;
  double temperature_C = 25.0;
  std::vector<double> time_s;
  std::vector<double> current_A;
  std::vector<double> voltage_V;
  std::vector<double> soc_pct;

  std::size_t size() const { return time_s.size(); }

  /// Throws ValidationError naming the first broken invariant.
  void validate() const;
};

/// Maps each DischargeCycle field to a CSV column name.
struct CsvSchema {
  std::string cycle_id = "cycle_id";
  std::string time_s = "time_s";
  std::string current_A = "current_A";
  std::string voltage_V = "voltage_V";
  std::string soc_pct = "soc_pct";
  std::string temperature_C = "temperature_C";
};

struct LoadedCycles {
  std::vector<DischargeCycle> cycles;
  std::vector<std::string> warnings;
};

/// Nominal sampling period of the benchmark recordings.
inline constexpr double kNominalSamplePeriod_s = 1.0;

LoadedCycles load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
LoadedCycles parse_csv(std::istream& in, const CsvSchema& schema = {});

/// Writes the canonical layout `cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C`
/// with shortest round-trip number formatting.
void write_csv(std::ostream& out, const std::vector<DischargeCycle>& cycles);
void write_csv(const std::filesystem::path& path, const std::vector<DischargeCycle>& cycles);

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);

/// Piecewise-linear map from temperature (°C) to a parameter value; clamped
/// outside the tabulated range.
class TemperatureTable {
 public:
  TemperatureTable() = default;
  TemperatureTable(std::vector<std::pair<double, double>> points);

  double operator()(double temperature_C) const;
  const std::vector<std::pair<double, double>>& points() const { return points_; }

 private:
  std::vector<std::pair<double, double>> points_;
};

/// Thevenin first-order equivalent circuit with temperature-dependent elements.
struct EcmParams {
  double capacity_Ah_ref = 2.9;
  TemperatureTable capacity_temp_factor;
  TemperatureTable r0_ohm;
  TemperatureTable r1_ohm;
  TemperatureTable c1_farad;
  TemperatureTable ocv_shift_V;
  /// (soc_pct, volts), strictly increasing in both.
  std::vector<std::pair<double, double>> ocv_curve;
  double cutoff_V = 2.5;
  double noise_std_A = 0.0;
  double noise_std_V = 0.0;

  double ocv(double soc_pct, double temperature_C) const;
  double effective_capacity_Ah(double temperature_C) const;

  void validate() const;

  /// An 18650-class NCA cell (2.9 Ah) with plausible temperature trends.
  static EcmParams panasonic_like();
};

struct CurrentProfile {
  std::vector<double> time_s;
  /// Benchmark sign convention: negative = discharge.
  std::vector<double> current_A;
};

CurrentProfile load_profile_csv(const std::filesystem::path& path);
void write_profile_csv(const std::filesystem::path& path, const CurrentProfile& profile);

/// Parameters of the random drive-cycle current generator.
struct DriveProfileSpec {
  double duration_s = 3600.0;
  double mean_discharge_A = 3.0;
  double peak_discharge_A = 12.0;
  double peak_regen_A = 4.0;
  /// Probability that a segment is regenerative braking.
  double regen_fraction = 0.15;
  double min_segment_s = 2.0;
  double max_segment_s = 25.0;
};

/// 1 Hz stop-and-go current profile built from random constant-acceleration
/// segments, smoothed to per-second ramps.
CurrentProfile make_drive_profile(const DriveProfileSpec& spec, std::uint64_t seed);

/// Runs the equivalent circuit from 100 % SoC over the profile. Stops at the
/// cutoff voltage, when the cell is empty, or at the end of the profile.
DischargeCycle simulate_cycle(const EcmParams& params, const CurrentProfile& profile,
                              double temperature_C, std::uint64_t seed,
                              std::string cycle_id = "sim");

struct CoulombCount {
  std::vector<double> soc_pct;
  /// Sample indices where the running integral left [0, 100] and was clamped.
  std::vector<std::size_t> clamp_events;
};

/// Discrete amp-hour integration. `discharge_current_A` is positive when discharging.
CoulombCount coulomb_count(const std::vector<double>& discharge_current_A, double dt_s,
                           double capacity_Ah_eff, double soc0_pct);

}  // namespace socta
