#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stereoscope/corpus.hpp"
#include "stereoscope/parallel.hpp"

namespace stereoscope {

struct DensityPoint {
  double x;
  double density;
};

// Silverman's rule: 0.9 * min(sd, IQR / 1.34) * n^(-1/5), with sd the sample
// standard deviation and IQR from linearly interpolated quartiles. Falls back
// to whichever spread is positive; throws DataError when both vanish.
double silverman_bandwidth(std::span<const double> values);

// Gaussian kernel density of `values` evaluated at each grid point.
std::vector<double> gaussian_kde(std::span<const double> values, double bandwidth, std::span<const double> grid,
                                 Exec exec = Exec::parallel);

// Character-length KDE of a dataset. Lengths are Unicode scalar counts.
// An empty bandwidth selects Silverman's rule.
std::vector<DensityPoint> kde_text_length(const LabeledDataset& ds, std::optional<double> bandwidth,
                                          std::span<const double> grid, Exec exec = Exec::parallel);

std::vector<double> text_lengths(const LabeledDataset& ds);

// Evenly spaced grid of `points` values covering [lo, hi].
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

}  // namespace stereoscope
