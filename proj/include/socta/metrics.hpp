#pragma once

#include <span>
#include <string>
#include <vector>

namespace socta {

struct CycleMetrics {
  std::string cycle_id;
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t samples = 0;
};

/// RMSE and MAE in percent SoC.
struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t samples = 0;
  std::vector<CycleMetrics> per_cycle;
};

/// Errors on empty input or unequal lengths.
MetricsReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace socta
