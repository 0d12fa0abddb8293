#include "cbl/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cbl/error.hpp"
#include "cbl/table.hpp"

namespace cbl {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 60;
constexpr int kTicks = 5;

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Coordinates are rounded to 0.01 px so the text stays short and stable.
std::string px(double v) { return format_number(std::round(v * 100.0) / 100.0); }

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi - lo < 1e-12) {
      const double d = std::max(std::abs(lo) * 0.05, 0.05);
      lo -= d;
      hi += d;
    }
  }
  double span() const { return hi - lo; }
};

std::string tick_label(double v, double span) {
  const int digits = std::clamp(static_cast<int>(std::ceil(-std::log10(span / kTicks))) + 1, 0, 6);
  const double scale = std::pow(10.0, digits);
  const double rounded = std::round(v * scale) / scale;
  return format_number(rounded == 0.0 ? 0.0 : rounded);
}

}  // namespace

std::string render_svg(const ChartSpec& chart) {
  if (chart.series.empty()) throw ValidationError("chart has no series");
  Range xr, yr;
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) throw ValidationError("series '" + s.label + "' has mismatched x/y lengths");
    int finite = 0;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      xr.include(s.x[k]);
      yr.include(s.y[k]);
      ++finite;
    }
    if (finite < 2) throw ValidationError("series '" + s.label + "' needs at least two points");
  }
  xr.pad();
  yr.pad();

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xr.lo) / xr.span() * plot_w; };
  auto sy = [&](double y) { return kTop + (yr.hi - y) / yr.span() * plot_h; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kWidth) + "\" height=\"" + px(kHeight) +
         "\" viewBox=\"0 0 " + px(kWidth) + " " + px(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!chart.title.empty())
    out += "<text x=\"" + px(kLeft + plot_w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(chart.title) + "</text>\n";

  out += "<g stroke=\"black\" fill=\"none\">\n";
  out += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(kTop + plot_h) + "\" x2=\"" + px(kLeft + plot_w) + "\" y2=\"" +
         px(kTop + plot_h) + "\"/>\n";
  out += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(kTop) + "\" x2=\"" + px(kLeft) + "\" y2=\"" + px(kTop + plot_h) +
         "\"/>\n";
  out += "</g>\n<g>\n";
  for (int k = 0; k <= kTicks; ++k) {
    const double xv = xr.lo + xr.span() * k / kTicks;
    const double yv = yr.lo + yr.span() * k / kTicks;
    out += "<line x1=\"" + px(sx(xv)) + "\" y1=\"" + px(kTop + plot_h) + "\" x2=\"" + px(sx(xv)) + "\" y2=\"" +
           px(kTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + px(sx(xv)) + "\" y=\"" + px(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" +
           tick_label(xv, xr.span()) + "</text>\n";
    out += "<line x1=\"" + px(kLeft - 5) + "\" y1=\"" + px(sy(yv)) + "\" x2=\"" + px(kLeft) + "\" y2=\"" +
           px(sy(yv)) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + px(kLeft - 8) + "\" y=\"" + px(sy(yv) + 4) + "\" text-anchor=\"end\">" +
           tick_label(yv, yr.span()) + "</text>\n";
  }
  out += "</g>\n";
  if (!chart.x_label.empty())
    out += "<text x=\"" + px(kLeft + plot_w / 2) + "\" y=\"" + px(kHeight - 16) + "\" text-anchor=\"middle\">" +
           escape(chart.x_label) + "</text>\n";
  if (!chart.y_label.empty())
    out += "<text x=\"18\" y=\"" + px(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           px(kTop + plot_h / 2) + ")\">" + escape(chart.y_label) + "</text>\n";

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const Series& s = chart.series[i];
    const char* color = kPalette[i % kPalette.size()];
    std::string points;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if (!points.empty()) points += ' ';
      points += px(sx(s.x[k])) + "," + px(sy(s.y[k]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";

    const double ly = kTop + 10 + 18 * static_cast<double>(i);
    const double lx = kLeft + plot_w + 15;
    out += "<line x1=\"" + px(lx) + "\" y1=\"" + px(ly) + "\" x2=\"" + px(lx + 20) + "\" y2=\"" + px(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + px(lx + 26) + "\" y=\"" + px(ly + 4) + "\">" + escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_svg_chart(const ChartSpec& chart, const std::filesystem::path& path) { write_file(path, render_svg(chart)); }

}  // namespace cbl
