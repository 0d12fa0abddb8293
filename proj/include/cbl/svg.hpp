#pragma once

// Minimal line charts. Output depends only on the input values, so identical
// input gives byte-identical files.

#include <filesystem>
#include <string>
#include <vector>

namespace cbl {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // non-finite points are skipped
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Throws ValidationError when there is no series or a series has fewer than
/// two finite points.
std::string render_svg(const ChartSpec& chart);

void emit_svg_chart(const ChartSpec& chart, const std::filesystem::path& path);

}  // namespace cbl
