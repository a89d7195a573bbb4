#include "socta/metrics.hpp"

#include <cmath>

#include "socta/error.hpp"

namespace socta {

MetricsReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ValidationError("metric inputs differ in length (" + std::to_string(y_true.size()) + " vs " +
                          std::to_string(y_pred.size()) + ")");
  }
  if (y_true.empty()) throw ValidationError("metric inputs are empty");
  double sq = 0.0;
  double abs = 0.0;
  for (std::size_t k = 0; k < y_true.size(); ++k) {
    const double e = y_pred[k] - y_true[k];
    if (!std::isfinite(e)) throw NumericalError("non-finite value at sample " + std::to_string(k));
    sq += e * e;
    abs += std::abs(e);
  }
  const auto n = static_cast<double>(y_true.size());
  MetricsReport r;
  r.rmse = std::sqrt(sq / n);
  r.mae = abs / n;
  r.samples = y_true.size();
  return r;
}

}  // namespace socta
