#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ratepred::eval {

inline constexpr double kBpsPerMbps = 1e6;

/// Squared-error statistics in Mbps^2.
struct MseSummary {
  std::vector<double> per_link;
  std::vector<std::size_t> counts;  // samples per link
  double overall = 0.0;
};

/// Predictions and truths are step-major [steps][links] in bits/s. Throws on
/// misaligned lengths or a length that is not a multiple of `links`.
MseSummary mse(std::span<const double> predictions_bps, std::span<const double> truths_bps,
               std::size_t links);

/// Incremental version for pooling many routes; the result is independent of
/// the order in which routes are added up to floating-point summation order.
class MseAccumulator {
 public:
  explicit MseAccumulator(std::size_t links);
  void add(std::span<const double> predictions_bps, std::span<const double> truths_bps);
  MseSummary summary() const;
  std::size_t links() const { return sums_.size(); }

 private:
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

/// Squared errors in Mbps^2, same layout as the inputs.
std::vector<double> squared_errors(std::span<const double> predictions_bps,
                                   std::span<const double> truths_bps);

struct CdfPoint {
  double error = 0.0;        // Mbps^2
  double probability = 0.0;  // fraction of samples <= error
};

/// Empirical CDF of the pooled samples, evaluated at the order statistics
/// picked by a quantile grid: for q the point is the ceil(q*N)-th smallest
/// sample (the minimum for q = 0). The grid must be sorted within [0, 1] and
/// end at 1, so the last point has probability exactly 1.
std::vector<CdfPoint> error_cdf(std::span<const double> samples, std::span<const double> quantiles);

/// 0, 1/(n-1), ..., 1.
std::vector<double> uniform_quantile_grid(std::size_t points);

struct Reduction {
  std::vector<std::optional<double>> per_link;  // percent; empty when baseline MSE is 0
  std::optional<double> overall;
};

/// 100 * (1 - model / baseline) per link and overall.
Reduction reduction_vs_baseline(const MseSummary& model, const MseSummary& baseline);
std::optional<double> reduction_percent(double model_mse, double baseline_mse);

/// One report row per step t in [W, steps).
struct TimeseriesRow {
  std::size_t t = 0;
  double true_max_mbps = 0.0;
  std::map<std::string, double> predicted_max_mbps;           // by method
  std::map<std::string, std::vector<double>> squared_errors;  // by method, per link, Mbps^2
  std::vector<std::uint8_t> mask;
};

/// `predictions` maps a method name to its [steps - W][links] series in bits/s;
/// `truths_bps` and `mask` cover the whole route [steps][links].
std::vector<TimeseriesRow> timeseries_report(std::size_t window, std::size_t links,
                                             std::span<const double> truths_bps,
                                             std::span<const std::uint8_t> mask,
                                             const std::map<std::string, std::vector<double>>& predictions);

}  // namespace ratepred::eval
