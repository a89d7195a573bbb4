#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "socta/config.hpp"

namespace socta::cli {

/// Per-command overrides from the command line.
struct CommandOptions {
  std::filesystem::path out;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> reference;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> target;
  std::optional<double> eta;
  bool svg = false;
};

void run_simulate(const RunConfig& cfg, const CommandOptions& opt);
void run_train_reference(const RunConfig& cfg, const CommandOptions& opt);
void run_evaluate(const RunConfig& cfg, const CommandOptions& opt);
void run_monitor(const RunConfig& cfg, const CommandOptions& opt);
void run_train_transfer(const RunConfig& cfg, const CommandOptions& opt);
void run_predict(const RunConfig& cfg, const CommandOptions& opt);
void run_report(const RunConfig& cfg, const CommandOptions& opt);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

}  // namespace socta::cli
