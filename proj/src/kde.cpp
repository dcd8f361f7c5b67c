#include "stereoscope/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stereoscope/error.hpp"
#include "stereoscope/text.hpp"

namespace stereoscope {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double density_at(std::span<const double> values, double h, double x) {
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  double s = 0.0;
  for (double v : values) {
    const double u = (x - v) / h;
    s += std::exp(-0.5 * u * u);
  }
  return s * norm;
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw DataError("automatic bandwidth needs at least 2 values; pass an explicit bandwidth");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread;
  if (sd > 0 && iqr > 0) {
    spread = std::min(sd, iqr / 1.34);
  } else if (sd > 0) {
    spread = sd;
  } else {
    throw DataError("automatic bandwidth is zero for constant data; pass an explicit bandwidth");
  }
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> gaussian_kde(std::span<const double> values, double bandwidth, std::span<const double> grid,
                                 Exec exec) {
  if (values.empty()) throw DataError("kernel density needs at least one value");
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw UsageError("bandwidth must be positive");
  std::vector<double> out(grid.size());
  const auto n = static_cast<std::ptrdiff_t>(grid.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t g = 0; g < n; ++g) out[static_cast<std::size_t>(g)] = density_at(values, bandwidth, grid[static_cast<std::size_t>(g)]);
  } else {
    for (std::ptrdiff_t g = 0; g < n; ++g) out[static_cast<std::size_t>(g)] = density_at(values, bandwidth, grid[static_cast<std::size_t>(g)]);
  }
  return out;
}

std::vector<double> text_lengths(const LabeledDataset& ds) {
  std::vector<double> lengths;
  lengths.reserve(ds.size());
  for (const auto& i : ds.instances) lengths.push_back(static_cast<double>(scalar_count(i.text)));
  return lengths;
}

std::vector<DensityPoint> kde_text_length(const LabeledDataset& ds, std::optional<double> bandwidth,
                                          std::span<const double> grid, Exec exec) {
  if (ds.empty()) throw DataError("kde_text_length: dataset is empty");
  const auto lengths = text_lengths(ds);
  const double h = bandwidth ? *bandwidth : silverman_bandwidth(lengths);
  const auto dens = gaussian_kde(lengths, h, grid, exec);
  std::vector<DensityPoint> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out.push_back({grid[i], dens[i]});
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g;
  if (points == 0) return g;
  if (points == 1) return {lo};
  g.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    g.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return g;
}

}  // namespace stereoscope
