#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "socta/dataset.hpp"
#include "socta/lstm.hpp"
#include "socta/monitor.hpp"
#include "socta/transfer.hpp"
#include "socta/wavelet.hpp"

namespace socta {

inline constexpr const char* kRunConfigTag = "socta-config/1";

struct DataConfig {
  /// "simulate" or "csv".
  std::string source = "simulate";
  /// Used when source is "csv"; relative paths resolve against the config file.
  std::string reference_csv;
  std::string target_csv;
  double reference_temperature_C = 25.0;
  double target_temperature_C = -6.0;
  int reference_cycles = 5;
  int target_cycles = 3;
  DriveProfileSpec profile;
  double noise_std_A = 0.01;
  double noise_std_V = 0.002;
};

/// Counted from the end of the cycle list; the rest are training cycles.
struct SplitConfig {
  int test_cycles = 1;
  int validation_cycles = 1;
};

struct RunConfig {
  std::uint64_t seed = 7;
  std::string output_dir = "run";
  DataConfig data;
  WaveletConfig wavelet{3, "haar"};
  std::optional<int> lag = 5;
  std::optional<int> retained;
  std::string reference_network = "L(16)N(16)";
  std::string shared_network = "L(16)N(16)";
  std::string specific_network = "L(16)N(16)";
  TrainConfig train;
  TrainConfig transfer_train;
  MonitorOptions monitor;
  TransferOptions transfer;
  SplitConfig split;

  RunConfig();
  /// Throws ValidationError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);

}  // namespace socta
