#pragma once

// Minimal SVG 1.1 line charts.

#include <string>
#include <vector>

namespace loa_cli {

struct Series {
  std::string name;
  std::vector<double> y;  // index is the x coordinate
};

struct ChartOptions {
  std::string title;
  std::string x_label = "iteration k";
  std::string y_label;
  bool log_y = true;
  std::vector<double> reference_lines;  // horizontal dashed lines
};

/// Non-finite points (and non-positive ones on a log axis) break the line.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& opts);

}  // namespace loa_cli
