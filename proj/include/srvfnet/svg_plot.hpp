#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace srvfnet {

struct PlotSeries {
  Eigen::VectorXd y;          // sampled on a uniform grid over [0, 1]
  std::string color = "#4878a8";
  double stroke_width = 0.8;
  double opacity = 0.65;
};

struct PlotPanel {
  std::string title;
  std::vector<PlotSeries> series;
};

/// Static SVG: panels side by side, each an axes box with polylines scaled
/// to the panel's own data range. Output is well-formed XML.
void write_svg_plot(const std::string& path,
                    const std::vector<PlotPanel>& panels,
                    int panel_width = 360, int panel_height = 280);

}  // namespace srvfnet
