#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace lamwave {

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  bool line = false;       // polyline through the points
  bool markers = true;     // circles at the points
  double marker_r = 1.6;
  std::vector<std::pair<double, double>> pts;
};

struct SvgPanel {
  std::string title;
  std::string x_label, y_label;
  std::vector<SvgSeries> series;
};

// Stacked panels sharing the x extent, each with independent auto-scaled
// y axes, tick labels in engineering-friendly steps, and a legend.
void write_svg_panels(std::ostream& os, const std::vector<SvgPanel>& panels, int width = 900,
                      int panel_height = 360);

}  // namespace lamwave
