#include "lamwave/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace lamwave {

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * mult >= raw) return mag * mult;
  }
  return mag * 10.0;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void write_svg_panels(std::ostream& os, const std::vector<SvgPanel>& panels, int width,
                      int panel_height) {
  const int height = panel_height * static_cast<int>(panels.size());
  const double ml = 70, mr = 20, mt = 36, mb = 48;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& panel = panels[pi];
    const double top = static_cast<double>(panel_height) * static_cast<double>(pi);
    const double x0 = ml, x1 = width - mr;
    const double y0 = top + mt, y1 = top + panel_height - mb;

    Range xr, yr;
    for (const auto& s : panel.series) {
      for (const auto& [x, y] : s.pts) {
        xr.add(x);
        yr.add(y);
      }
    }
    xr.pad();
    yr.pad();

    const auto sx = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
    const auto sy = [&](double v) { return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << x1 - x0 << "\" height=\""
       << y1 - y0 << "\" fill=\"none\" stroke=\"#333\"/>\n";
    if (!panel.title.empty()) {
      os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << y0 - 12
         << "\" text-anchor=\"middle\" font-size=\"14\">" << panel.title << "</text>\n";
    }

    const double xstep = nice_step(xr.hi - xr.lo, 8);
    for (double t = std::ceil(xr.lo / xstep) * xstep; t <= xr.hi + 1e-12 * xstep; t += xstep) {
      const double px = sx(t);
      os << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\"" << y1
         << "\" stroke=\"#ddd\"/>\n";
      os << "<text x=\"" << px << "\" y=\"" << y1 + 16 << "\" text-anchor=\"middle\">" << fmt(t)
         << "</text>\n";
    }
    const double ystep = nice_step(yr.hi - yr.lo, 6);
    for (double t = std::ceil(yr.lo / ystep) * ystep; t <= yr.hi + 1e-12 * ystep; t += ystep) {
      const double py = sy(t);
      os << "<line x1=\"" << x0 << "\" y1=\"" << py << "\" x2=\"" << x1 << "\" y2=\"" << py
         << "\" stroke=\"#ddd\"/>\n";
      os << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << fmt(t)
         << "</text>\n";
    }
    os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << y1 + 36
       << "\" text-anchor=\"middle\">" << panel.x_label << "</text>\n";
    os << "<text x=\"" << x0 - 52 << "\" y=\"" << (y0 + y1) / 2
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << x0 - 52 << ' ' << (y0 + y1) / 2
       << ")\">" << panel.y_label << "</text>\n";

    for (const auto& s : panel.series) {
      if (s.line && s.pts.size() > 1) {
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.4\" points=\"";
        for (const auto& [x, y] : s.pts) os << sx(x) << ',' << sy(y) << ' ';
        os << "\"/>\n";
      }
      if (s.markers) {
        for (const auto& [x, y] : s.pts) {
          os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"" << s.marker_r
             << "\" fill=\"" << s.color << "\"/>\n";
        }
      }
    }

    double ly = y0 + 14;
    for (const auto& s : panel.series) {
      if (s.label.empty()) continue;
      os << "<rect x=\"" << x1 - 150 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
         << s.color << "\"/>\n";
      os << "<text x=\"" << x1 - 136 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
      ly += 16;
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
}

}  // namespace lamwave
