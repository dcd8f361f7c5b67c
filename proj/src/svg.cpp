#include "stereoscope/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace stereoscope::svg {

namespace {

constexpr const char* kPositive = "#d6604d";
constexpr const char* kNegative = "#4393c3";
constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d"};

std::string num(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string px(double v) { return num(v, 1); }

void header(std::ostringstream& out, const ChartOptions& o) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height
      << "\" viewBox=\"0 0 " << o.width << ' ' << o.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty()) {
    out << "<text x=\"" << o.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << escape_xml(o.title) << "</text>\n";
  }
}

void axis_labels(std::ostringstream& out, const ChartOptions& o) {
  if (!o.x_label.empty()) {
    out << "<text x=\"" << o.width / 2 << "\" y=\"" << o.height - 6 << "\" text-anchor=\"middle\">"
        << escape_xml(o.x_label) << "</text>\n";
  }
  if (!o.y_label.empty()) {
    out << "<text x=\"14\" y=\"" << o.height / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << o.height / 2 << ")\">" << escape_xml(o.y_label) << "</text>\n";
  }
}

struct Range {
  double lo;
  double hi;
};

Range padded(double lo, double hi, bool include_zero) {
  if (include_zero) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
  }
  if (hi - lo < 1e-12) {
    hi += 0.5;
    lo -= include_zero && lo == 0.0 ? 0.0 : 0.5;
  }
  return {lo, hi};
}

}  // namespace

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string bar_chart(const std::vector<Bar>& bars, const ChartOptions& o) {
  std::ostringstream out;
  header(out, o);
  const double left = 60, right = 20, top = 36, bottom = 90;
  const double plot_w = o.width - left - right;
  const double plot_h = o.height - top - bottom;
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.value);
    hi = std::max(hi, b.value);
  }
  const Range r = padded(lo, hi, true);
  const auto y_of = [&](double v) { return top + plot_h * (r.hi - v) / (r.hi - r.lo); };
  const double zero_y = y_of(0.0);
  out << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\""
      << px(top + plot_h) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(left) << "\" y1=\"" << px(zero_y) << "\" x2=\"" << px(left + plot_w) << "\" y2=\""
      << px(zero_y) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = r.lo + (r.hi - r.lo) * t / 4.0;
    out << "<text x=\"" << px(left - 4) << "\" y=\"" << px(y_of(v) + 4) << "\" text-anchor=\"end\">"
        << num(v, o.value_decimals) << "</text>\n";
  }
  if (!bars.empty()) {
    const double slot = plot_w / static_cast<double>(bars.size());
    const double bw = slot * 0.7;
    for (std::size_t i = 0; i < bars.size(); ++i) {
      const auto& b = bars[i];
      const double x = left + slot * static_cast<double>(i) + (slot - bw) / 2;
      const double y = std::min(y_of(b.value), zero_y);
      const double h = std::abs(y_of(b.value) - zero_y);
      out << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(bw) << "\" height=\"" << px(h)
          << "\" fill=\"" << (b.value < 0 ? kNegative : kPositive) << "\"><title>" << escape_xml(b.label) << ": "
          << num(b.value, o.value_decimals) << "</title></rect>\n";
      const double lx = x + bw / 2;
      const double ly = top + plot_h + 12;
      out << "<text x=\"" << px(lx) << "\" y=\"" << px(ly) << "\" text-anchor=\"end\" transform=\"rotate(-45 "
          << px(lx) << ' ' << px(ly) << ")\">" << escape_xml(b.label) << "</text>\n";
      out << "<text x=\"" << px(lx) << "\" y=\"" << px(b.value < 0 ? y + h + 11 : y - 3)
          << "\" text-anchor=\"middle\" font-size=\"9\">" << num(b.value, o.value_decimals) << "</text>\n";
    }
  }
  axis_labels(out, o);
  out << "</svg>\n";
  return out.str();
}

std::string horizontal_bar_chart(const std::vector<Bar>& bars, const ChartOptions& o) {
  ChartOptions opts = o;
  const double row_h = 22;
  const double top = 36, bottom = 40, left = 120, right = 60;
  opts.height = std::max(o.height, static_cast<int>(top + bottom + row_h * static_cast<double>(bars.size())));
  std::ostringstream out;
  header(out, opts);
  const double plot_w = opts.width - left - right;
  double lo = 0.0, hi = 0.0;
  for (const auto& b : bars) {
    lo = std::min(lo, b.value);
    hi = std::max(hi, b.value);
  }
  const Range r = padded(lo, hi, true);
  const auto x_of = [&](double v) { return left + plot_w * (v - r.lo) / (r.hi - r.lo); };
  const double zero_x = x_of(0.0);
  out << "<line x1=\"" << px(zero_x) << "\" y1=\"" << px(top - 4) << "\" x2=\"" << px(zero_x) << "\" y2=\""
      << px(top + row_h * static_cast<double>(bars.size())) << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double y = top + row_h * static_cast<double>(i);
    const double x = std::min(x_of(b.value), zero_x);
    const double w = std::abs(x_of(b.value) - zero_x);
    out << "<text x=\"" << px(left - 6) << "\" y=\"" << px(y + row_h * 0.65) << "\" text-anchor=\"end\">"
        << escape_xml(b.label) << "</text>\n";
    out << "<rect x=\"" << px(x) << "\" y=\"" << px(y + 3) << "\" width=\"" << px(w) << "\" height=\""
        << px(row_h - 6) << "\" fill=\"" << (b.value < 0 ? kNegative : kPositive) << "\"/>\n";
    const double tx = b.value < 0 ? x - 4 : x + w + 4;
    out << "<text x=\"" << px(tx) << "\" y=\"" << px(y + row_h * 0.65) << "\" text-anchor=\""
        << (b.value < 0 ? "end" : "start") << "\" font-size=\"10\">" << num(b.value, opts.value_decimals)
        << "</text>\n";
  }
  axis_labels(out, opts);
  out << "</svg>\n";
  return out.str();
}

std::string line_chart(const std::vector<Series>& series, const ChartOptions& o, bool markers,
                       const std::vector<std::string>& point_labels) {
  std::ostringstream out;
  header(out, o);
  const double left = 60, right = 130, top = 36, bottom = 50;
  const double plot_w = o.width - left - right;
  const double plot_h = o.height - top - bottom;
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  const Range xr = padded(xlo, xhi, false);
  const Range yr = padded(ylo, yhi, true);
  const auto x_of = [&](double v) { return left + plot_w * (v - xr.lo) / (xr.hi - xr.lo); };
  const auto y_of = [&](double v) { return top + plot_h * (yr.hi - v) / (yr.hi - yr.lo); };
  out << "<line x1=\"" << px(left) << "\" y1=\"" << px(top + plot_h) << "\" x2=\"" << px(left + plot_w)
      << "\" y2=\"" << px(top + plot_h) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\""
      << px(top + plot_h) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    const double xv = xr.lo + (xr.hi - xr.lo) * t / 4.0;
    out << "<text x=\"" << px(left - 4) << "\" y=\"" << px(y_of(yv) + 4) << "\" text-anchor=\"end\">"
        << num(yv, o.value_decimals) << "</text>\n";
    out << "<text x=\"" << px(x_of(xv)) << "\" y=\"" << px(top + plot_h + 14) << "\" text-anchor=\"middle\">"
        << num(xv, 1) << "</text>\n";
  }
  std::size_t label_index = 0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      out << (i ? " " : "") << px(x_of(s.x[i])) << ',' << px(y_of(s.y[i]));
    }
    out << "\"/>\n";
    if (markers) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        out << "<circle cx=\"" << px(x_of(s.x[i])) << "\" cy=\"" << px(y_of(s.y[i])) << "\" r=\"3\" fill=\""
            << colour << "\"/>\n";
        if (label_index < point_labels.size()) {
          out << "<text x=\"" << px(x_of(s.x[i]) + 5) << "\" y=\"" << px(y_of(s.y[i]) - 5)
              << "\" font-size=\"9\">" << escape_xml(point_labels[label_index]) << "</text>\n";
        }
        ++label_index;
      }
    }
    out << "<text x=\"" << px(left + plot_w + 10) << "\" y=\"" << px(top + 14.0 * static_cast<double>(k) + 10)
        << "\" fill=\"" << colour << "\">" << escape_xml(s.name) << "</text>\n";
  }
  axis_labels(out, o);
  out << "</svg>\n";
  return out.str();
}

}  // namespace stereoscope::svg
