#include "socta/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "socta/error.hpp"

namespace socta {
namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ValidationError("non-finite or unparsable value '" + field + "' in column '" + column +
                          "' at data row " + std::to_string(line_no));
  }
  return value;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double interp_table(const std::vector<std::pair<double, double>>& pts, double x) {
  if (pts.empty()) throw ValidationError("empty interpolation table");
  if (x <= pts.front().first) return pts.front().second;
  if (x >= pts.back().first) return pts.back().second;
  auto hi = std::upper_bound(pts.begin(), pts.end(), x,
                             [](double v, const auto& p) { return v < p.first; });
  auto lo = hi - 1;
  double w = (x - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

}  // namespace

void DischargeCycle::validate() const {
  const auto n = time_s.size();
  if (current_A.size() != n || voltage_V.size() != n || soc_pct.size() != n) {
    throw ValidationError("cycle '" + cycle_id + "': series lengths differ");
  }
  if (n < 2) throw ValidationError("cycle '" + cycle_id + "': fewer than 2 samples");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(time_s[k]) || !std::isfinite(current_A[k]) ||
        !std::isfinite(voltage_V[k]) || !std::isfinite(soc_pct[k])) {
      throw ValidationError("cycle '" + cycle_id + "': non-finite value at sample " +
                            std::to_string(k));
    }
    if (k > 0 && !(time_s[k] > time_s[k - 1])) {
      throw ValidationError("cycle '" + cycle_id + "': timestamps not strictly increasing at sample " +
                            std::to_string(k));
    }
    if (!(voltage_V[k] > 0.0)) {
      throw ValidationError("cycle '" + cycle_id + "': non-positive voltage at sample " +
                            std::to_string(k));
    }
    if (soc_pct[k] < 0.0 || soc_pct[k] > 100.0) {
      throw ValidationError("cycle '" + cycle_id + "': SoC outside [0,100] at sample " +
                            std::to_string(k));
    }
  }
}

LoadedCycles load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open data file: " + path.string());
  return parse_csv(in, schema);
}

LoadedCycles parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw ValidationError("no data rows");

  const auto c_id = column_index(header, schema.cycle_id);
  const auto c_t = column_index(header, schema.time_s);
  const auto c_i = column_index(header, schema.current_A);
  const auto c_v = column_index(header, schema.voltage_V);
  const auto c_soc = column_index(header, schema.soc_pct);
  const auto c_temp = column_index(header, schema.temperature_C);

  LoadedCycles result;
  std::map<std::string, std::size_t> index_of;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ValidationError("data row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    const std::string& id = fields[c_id];
    double t = parse_double(fields[c_t], row, schema.time_s);
    double i = parse_double(fields[c_i], row, schema.current_A);
    double v = parse_double(fields[c_v], row, schema.voltage_V);
    double soc = parse_double(fields[c_soc], row, schema.soc_pct);
    double temp = parse_double(fields[c_temp], row, schema.temperature_C);

    auto [it, inserted] = index_of.try_emplace(id, result.cycles.size());
    if (inserted) {
      DischargeCycle cycle;
      cycle.cycle_id = id;
      cycle.temperature_C = temp;
      result.cycles.push_back(std::move(cycle));
    }
    auto& cycle = result.cycles[it->second];
    if (temp != cycle.temperature_C) {
      throw ValidationError("cycle '" + id + "' changes temperature at data row " +
                            std::to_string(row));
    }
    if (!cycle.time_s.empty() && !(t > cycle.time_s.back())) {
      throw ValidationError("non-monotone timestamp in cycle '" + id + "' at data row " +
                            std::to_string(row));
    }
    cycle.time_s.push_back(t);
    cycle.current_A.push_back(i);
    cycle.voltage_V.push_back(v);
    cycle.soc_pct.push_back(soc);
  }
  if (row == 0) throw ValidationError("no data rows");

  for (const auto& cycle : result.cycles) {
    cycle.validate();
    std::size_t off_rate = 0;
    for (std::size_t k = 1; k < cycle.size(); ++k) {
      double dt = cycle.time_s[k] - cycle.time_s[k - 1];
      if (std::abs(dt - kNominalSamplePeriod_s) > 0.1 * kNominalSamplePeriod_s) ++off_rate;
    }
    if (off_rate > 0) {
      result.warnings.push_back("cycle '" + cycle.cycle_id + "': " + std::to_string(off_rate) +
                                " sampling intervals deviate from 1 Hz by more than 10%");
    }
  }
  return result;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw ValidationError("cannot format number");
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const std::vector<DischargeCycle>& cycles) {
  out << "cycle_id,time_s,current_A,voltage_V,soc_pct,temperature_C\n";
  for (const auto& c : cycles) {
    const std::string temp = format_number(c.temperature_C);
    for (std::size_t k = 0; k < c.size(); ++k) {
      out << c.cycle_id << ',' << format_number(c.time_s[k]) << ',' << format_number(c.current_A[k])
          << ',' << format_number(c.voltage_V[k]) << ',' << format_number(c.soc_pct[k]) << ','
          << temp << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<DischargeCycle>& cycles) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_csv(out, cycles);
}

TemperatureTable::TemperatureTable(std::vector<std::pair<double, double>> points)
    : points_(std::move(points)) {
  std::sort(points_.begin(), points_.end());
}

double TemperatureTable::operator()(double temperature_C) const {
  return interp_table(points_, temperature_C);
}

double EcmParams::ocv(double soc_pct, double temperature_C) const {
  return interp_table(ocv_curve, soc_pct) + ocv_shift_V(temperature_C);
}

double EcmParams::effective_capacity_Ah(double temperature_C) const {
  return capacity_Ah_ref * capacity_temp_factor(temperature_C);
}

void EcmParams::validate() const {
  if (!(capacity_Ah_ref > 0.0)) throw ValidationError("capacity_Ah_ref must be positive");
  if (ocv_curve.size() < 2) throw ValidationError("ocv_curve needs at least two points");
  for (std::size_t i = 1; i < ocv_curve.size(); ++i) {
    if (!(ocv_curve[i].first > ocv_curve[i - 1].first) ||
        !(ocv_curve[i].second > ocv_curve[i - 1].second)) {
      throw ValidationError("ocv_curve must be strictly increasing");
    }
  }
  auto all_positive = [](const TemperatureTable& t, const char* name) {
    if (t.points().empty()) throw ValidationError(std::string(name) + " table is empty");
    for (const auto& [temp, v] : t.points()) {
      if (!(v > 0.0)) throw ValidationError(std::string(name) + " must be positive");
    }
  };
  all_positive(r0_ohm, "r0_ohm");
  all_positive(r1_ohm, "r1_ohm");
  all_positive(c1_farad, "c1_farad");
  all_positive(capacity_temp_factor, "capacity_temp_factor");
  for (const auto& [temp, f] : capacity_temp_factor.points()) {
    if (f > 1.0) throw ValidationError("capacity_temp_factor must lie in (0,1]");
  }
  if (ocv_shift_V.points().empty()) throw ValidationError("ocv_shift_V table is empty");
  if (noise_std_A < 0.0 || noise_std_V < 0.0) throw ValidationError("noise std must be >= 0");
}

EcmParams EcmParams::panasonic_like() {
  EcmParams p;
  p.capacity_Ah_ref = 2.9;
  p.capacity_temp_factor = TemperatureTable({{-20, 0.64}, {-10, 0.76}, {0, 0.86}, {10, 0.95}, {25, 1.0}});
  p.r0_ohm = TemperatureTable({{-20, 0.16}, {-10, 0.10}, {0, 0.065}, {10, 0.045}, {25, 0.030}});
  p.r1_ohm = TemperatureTable({{-20, 0.090}, {-10, 0.060}, {0, 0.040}, {10, 0.025}, {25, 0.015}});
  p.c1_farad = TemperatureTable({{-20, 600}, {-10, 900}, {0, 1300}, {10, 1800}, {25, 2400}});
  p.ocv_shift_V = TemperatureTable({{-20, -0.07}, {-10, -0.045}, {0, -0.025}, {10, -0.01}, {25, 0.0}});
  p.ocv_curve = {{0, 3.00},  {2, 3.22},  {5, 3.36},  {10, 3.46}, {20, 3.57}, {30, 3.63},
                 {40, 3.69}, {50, 3.75}, {60, 3.82}, {70, 3.90}, {80, 3.98}, {90, 4.07},
                 {100, 4.18}};
  p.cutoff_V = 2.5;
  p.noise_std_A = 0.01;
  p.noise_std_V = 0.002;
  return p;
}

CurrentProfile load_profile_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open profile file: " + path.string());
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) throw ValidationError("no data rows");
  const auto c_t = column_index(header, "time_s");
  const auto c_i = column_index(header, "current_A");
  CurrentProfile profile;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ValidationError("profile row " + std::to_string(row) + " has wrong field count");
    }
    profile.time_s.push_back(parse_double(fields[c_t], row, "time_s"));
    profile.current_A.push_back(parse_double(fields[c_i], row, "current_A"));
  }
  if (row == 0) throw ValidationError("no data rows");
  return profile;
}

void write_profile_csv(const std::filesystem::path& path, const CurrentProfile& profile) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "time_s,current_A\n";
  for (std::size_t k = 0; k < profile.time_s.size(); ++k) {
    out << format_number(profile.time_s[k]) << ',' << format_number(profile.current_A[k]) << '\n';
  }
}

CurrentProfile make_drive_profile(const DriveProfileSpec& spec, std::uint64_t seed) {
  if (!(spec.duration_s >= 2.0)) throw ValidationError("drive profile duration must be >= 2 s");
  if (!(spec.min_segment_s >= 1.0) || spec.max_segment_s < spec.min_segment_s) {
    throw ValidationError("invalid drive profile segment bounds");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::gamma_distribution<double> demand(2.0, spec.mean_discharge_A / 2.0);
  std::normal_distribution<double> jitter(0.0, 1.0);

  const auto n = static_cast<std::size_t>(spec.duration_s) + 1;
  CurrentProfile profile;
  profile.time_s.resize(n);
  profile.current_A.resize(n);

  double level = 0.0;  // discharge-positive
  double delivered_As = 0.0;
  // Regeneration only once it cannot return more charge than was delivered.
  const double regen_budget_As = 1.5 * spec.peak_regen_A * spec.max_segment_s;
  std::size_t k = 0;
  while (k < n) {
    double target = 0.0;
    double u = unit(rng);
    if (u < spec.regen_fraction && delivered_As > regen_budget_As) {
      target = -spec.peak_regen_A * unit(rng);
    } else if (u < spec.regen_fraction + 0.08) {
      target = 0.0;  // idle at a stop
    } else {
      target = std::min(demand(rng), spec.peak_discharge_A);
    }
    auto len = static_cast<std::size_t>(
        std::round(spec.min_segment_s + (spec.max_segment_s - spec.min_segment_s) * unit(rng)));
    const double start = level;
    const std::size_t ramp = std::min<std::size_t>(3, len);
    for (std::size_t s = 0; s < len && k < n; ++s, ++k) {
      double frac = ramp == 0 ? 1.0 : std::min(1.0, static_cast<double>(s + 1) / ramp);
      level = start + frac * (target - start);
      double noisy = level + 0.03 * std::abs(level) * jitter(rng);
      profile.time_s[k] = static_cast<double>(k);
      profile.current_A[k] = -noisy;
      delivered_As += noisy;
    }
  }
  return profile;
}

DischargeCycle simulate_cycle(const EcmParams& params, const CurrentProfile& profile,
                              double temperature_C, std::uint64_t seed, std::string cycle_id) {
  params.validate();
  const auto n = profile.time_s.size();
  if (n == 0 || profile.current_A.size() != n) {
    throw ValidationError("profile must be nonempty with matching time/current lengths");
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(profile.time_s[k] > profile.time_s[k - 1])) {
      throw ValidationError("profile has non-positive time step at sample " + std::to_string(k));
    }
  }

  const double capacity = params.effective_capacity_Ah(temperature_C);
  const double r0 = params.r0_ohm(temperature_C);
  const double r1 = params.r1_ohm(temperature_C);
  const double tau = r1 * params.c1_farad(temperature_C);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DischargeCycle cycle;
  cycle.cycle_id = std::move(cycle_id);
  cycle.temperature_C = temperature_C;

  double charge_Ah = 0.0;  // discharged charge, discharge-positive
  double v_rc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double i_dis = -profile.current_A[k];
    if (k > 0) {
      const double dt = profile.time_s[k] - profile.time_s[k - 1];
      charge_Ah += i_dis * dt / 3600.0;
      const double decay = std::exp(-dt / tau);
      v_rc = v_rc * decay + r1 * (1.0 - decay) * i_dis;
    }
    double soc = 100.0 - 100.0 * charge_Ah / capacity;
    if (soc > 100.0 + 1e-9) {
      throw ValidationError("profile charges the cell above 100% SoC at sample " + std::to_string(k));
    }
    const bool empty = soc <= 1e-9;
    soc = std::clamp(soc, 0.0, 100.0);

    const double v_clean = params.ocv(soc, temperature_C) - i_dis * r0 - v_rc;
    double v_meas = v_clean;
    double i_meas = profile.current_A[k];
    if (params.noise_std_V > 0.0) v_meas += params.noise_std_V * gauss(rng);
    if (params.noise_std_A > 0.0) i_meas += params.noise_std_A * gauss(rng);
    if (!(v_meas > 0.0)) v_meas = std::max(v_clean, 1e-3);

    cycle.time_s.push_back(profile.time_s[k]);
    cycle.current_A.push_back(i_meas);
    cycle.voltage_V.push_back(v_meas);
    cycle.soc_pct.push_back(soc);

    if (empty || (k > 0 && v_clean <= params.cutoff_V)) break;
  }
  if (cycle.size() < 2) throw ValidationError("simulation produced fewer than 2 samples");
  return cycle;
}

CoulombCount coulomb_count(const std::vector<double>& discharge_current_A, double dt_s,
                           double capacity_Ah_eff, double soc0_pct) {
  if (!(capacity_Ah_eff > 0.0)) throw ValidationError("capacity must be positive");
  if (!(dt_s > 0.0)) throw ValidationError("dt must be positive");
  if (!std::isfinite(soc0_pct)) throw ValidationError("non-finite initial SoC");
  CoulombCount out;
  out.soc_pct.reserve(discharge_current_A.size());
  double charge_Ah = 0.0;
  for (std::size_t k = 0; k < discharge_current_A.size(); ++k) {
    const double i = discharge_current_A[k];
    if (!std::isfinite(i)) throw ValidationError("non-finite current at sample " + std::to_string(k));
    if (k > 0) charge_Ah += i * dt_s / 3600.0;
    double soc = soc0_pct - 100.0 * charge_Ah / capacity_Ah_eff;
    if (soc < 0.0 || soc > 100.0) {
      out.clamp_events.push_back(k);
      soc = std::clamp(soc, 0.0, 100.0);
    }
    out.soc_pct.push_back(soc);
  }
  return out;
}

}  // namespace socta
