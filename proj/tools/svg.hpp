#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace socta::cli {

struct Series {
  std::string name;
  std::vector<double> values;
  std::string color;
};

/// Static line chart: all series share the x axis `x`.
void write_line_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                      const std::vector<double>& x, const std::vector<Series>& series);

}  // namespace socta::cli
