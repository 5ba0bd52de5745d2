#include "ratepred/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ratepred::eval {

namespace {

void check_aligned(std::size_t a, std::size_t b, std::size_t links, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": predictions have " + std::to_string(a) +
                                " values, truths " + std::to_string(b));
  }
  if (links == 0 || a % links != 0) {
    throw std::invalid_argument(std::string(what) + ": length " + std::to_string(a) +
                                " is not a multiple of the link count");
  }
}

}  // namespace

MseAccumulator::MseAccumulator(std::size_t links) : sums_(links, 0.0), counts_(links, 0) {
  if (links == 0) {
    throw std::invalid_argument("mse: need at least one link");
  }
}

void MseAccumulator::add(std::span<const double> pred, std::span<const double> truth) {
  check_aligned(pred.size(), truth.size(), sums_.size(), "mse");
  const std::size_t m = sums_.size();
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const double e = (pred[j] - truth[j]) / kBpsPerMbps;
    sums_[j % m] += e * e;
    ++counts_[j % m];
  }
}

MseSummary MseAccumulator::summary() const {
  MseSummary s;
  s.counts = counts_;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < sums_.size(); ++i) {
    if (counts_[i] == 0) {
      throw std::invalid_argument("mse: no samples");
    }
    s.per_link.push_back(sums_[i] / static_cast<double>(counts_[i]));
    total += sums_[i];
    n += counts_[i];
  }
  s.overall = total / static_cast<double>(n);
  return s;
}

MseSummary mse(std::span<const double> pred, std::span<const double> truth, std::size_t links) {
  MseAccumulator acc(links);
  acc.add(pred, truth);
  return acc.summary();
}

std::vector<double> squared_errors(std::span<const double> pred, std::span<const double> truth) {
  check_aligned(pred.size(), truth.size(), 1, "squared_errors");
  std::vector<double> out(pred.size());
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const double e = (pred[j] - truth[j]) / kBpsPerMbps;
    out[j] = e * e;
  }
  return out;
}

std::vector<CdfPoint> error_cdf(std::span<const double> samples, std::span<const double> quantiles) {
  if (samples.empty()) {
    throw std::invalid_argument("error_cdf: no samples");
  }
  if (quantiles.empty() || quantiles.back() != 1.0 || quantiles.front() < 0.0 ||
      !std::is_sorted(quantiles.begin(), quantiles.end())) {
    throw std::invalid_argument("error_cdf: quantile grid must be sorted in [0, 1] and end at 1");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::isnan(sorted.back())) {
    throw std::invalid_argument("error_cdf: NaN sample");
  }
  const auto n = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out;
  out.reserve(quantiles.size());
  for (double q : quantiles) {
    const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
    const double x = sorted[std::min(rank, sorted.size()) - 1];
    // Right-continuous: count every sample equal to x.
    const auto le = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    out.push_back({x, static_cast<double>(le) / n});
  }
  return out;
}

std::vector<double> uniform_quantile_grid(std::size_t points) {
  if (points < 2) {
    throw std::invalid_argument("uniform_quantile_grid: need at least 2 points");
  }
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k) {
    g[k] = static_cast<double>(k) / static_cast<double>(points - 1);
  }
  g.back() = 1.0;
  return g;
}

std::optional<double> reduction_percent(double model_mse, double baseline_mse) {
  if (baseline_mse == 0.0) {
    return std::nullopt;
  }
  return 100.0 * (1.0 - model_mse / baseline_mse);
}

Reduction reduction_vs_baseline(const MseSummary& model, const MseSummary& baseline) {
  if (model.per_link.size() != baseline.per_link.size()) {
    throw std::invalid_argument("reduction_vs_baseline: reports cover different link counts");
  }
  Reduction r;
  for (std::size_t i = 0; i < model.per_link.size(); ++i) {
    r.per_link.push_back(reduction_percent(model.per_link[i], baseline.per_link[i]));
  }
  r.overall = reduction_percent(model.overall, baseline.overall);
  return r;
}

std::vector<TimeseriesRow> timeseries_report(std::size_t window, std::size_t links,
                                             std::span<const double> truths_bps,
                                             std::span<const std::uint8_t> mask,
                                             const std::map<std::string, std::vector<double>>& predictions) {
  if (links == 0 || truths_bps.size() % links != 0 || mask.size() != truths_bps.size()) {
    throw std::invalid_argument("timeseries_report: truths and mask must both be [steps][links]");
  }
  const std::size_t steps = truths_bps.size() / links;
  if (steps <= window) {
    throw std::invalid_argument("timeseries_report: route shorter than W + 1");
  }
  const std::size_t rows = steps - window;
  for (const auto& [name, series] : predictions) {
    if (series.size() != rows * links) {
      throw std::invalid_argument("timeseries_report: series '" + name + "' has " +
                                  std::to_string(series.size()) + " values, expected " +
                                  std::to_string(rows * links));
    }
  }
  std::vector<TimeseriesRow> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    TimeseriesRow& row = out[r];
    row.t = window + r;
    const auto truth = truths_bps.subspan(row.t * links, links);
    row.true_max_mbps = *std::max_element(truth.begin(), truth.end()) / kBpsPerMbps;
    row.mask.assign(mask.begin() + static_cast<std::ptrdiff_t>(row.t * links),
                    mask.begin() + static_cast<std::ptrdiff_t>((row.t + 1) * links));
    for (const auto& [name, series] : predictions) {
      const auto pred = std::span(series).subspan(r * links, links);
      row.predicted_max_mbps[name] = *std::max_element(pred.begin(), pred.end()) / kBpsPerMbps;
      row.squared_errors[name] = squared_errors(pred, truth);
    }
  }
  return out;
}

}  // namespace ratepred::eval
