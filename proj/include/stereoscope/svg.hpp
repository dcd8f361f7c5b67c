#pragma once

#include <string>
#include <vector>

namespace stereoscope::svg {

struct Bar {
  std::string label;
  double value = 0.0;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 420;
  int value_decimals = 3;
};

// Vertical bars; positive values in one colour, negative in another.
std::string bar_chart(const std::vector<Bar>& bars, const ChartOptions& opts);

// Horizontal bars, one row per label, zero line in the middle when values
// change sign. Used for token attributions.
std::string horizontal_bar_chart(const std::vector<Bar>& bars, const ChartOptions& opts);

// Polylines, optionally with point markers and per-point labels.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& opts, bool markers = false,
                       const std::vector<std::string>& point_labels = {});

std::string escape_xml(const std::string& text);

}  // namespace stereoscope::svg
