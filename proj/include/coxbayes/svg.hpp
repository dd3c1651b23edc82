#pragma once

#include <string>
#include <vector>

namespace coxbayes {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Minimal standalone SVG line/scatter plot.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace coxbayes
