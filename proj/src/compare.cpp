#include "lamwave/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "lamwave/interp.hpp"
#include "lamwave/svg.hpp"

namespace lamwave {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<CurveSample> sorted_unique(std::vector<CurveSample> c) {
  std::sort(c.begin(), c.end(),
            [](const CurveSample& a, const CurveSample& b) { return a.f_hz < b.f_hz; });
  c.erase(std::unique(c.begin(), c.end(),
                      [](const CurveSample& a, const CurveSample& b) { return a.f_hz == b.f_hz; }),
          c.end());
  return c;
}

const char* mode_color(const std::string& mode, std::size_t index) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  if (mode == "A0") return "#d62728";
  if (mode == "S0") return "#1f77b4";
  return palette[index % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace

ModeCurves curves_from_branches(const SweepResult& result) {
  ModeCurves out;
  for (const auto& b : result.branches) {
    auto& curve = out[b.label];
    for (const auto& p : b.points) curve.push_back({p.f_hz, p.cp_mps});
  }
  for (auto& [label, curve] : out) curve = sorted_unique(std::move(curve));
  return out;
}

ModeCurves curves_from_peaks(const ModePeaks& peaks) {
  ModeCurves out;
  for (const auto& [mode, set] : peaks) {
    auto& curve = out[mode];
    for (const auto& p : set.peaks) {
      if (p.nu_1pm > 0.0) curve.push_back({p.f_hz, p.f_hz / p.nu_1pm});
    }
    curve = sorted_unique(std::move(curve));
  }
  return out;
}

ComparisonReport compare_curves(const ModeCurves& ref, const ModeCurves& test,
                                double thickness_m) {
  if (!(thickness_m > 0.0)) throw std::invalid_argument("thickness_m must be positive");
  ComparisonReport report;
  report.thickness_m = thickness_m;

  bool any_shared = false;
  for (const auto& [mode, test_curve] : test) {
    const auto it = ref.find(mode);
    if (it == ref.end()) continue;
    any_shared = true;
    const auto ref_curve = it->second;
    if (ref_curve.size() < 2) {
      throw std::runtime_error("reference curve for mode '" + mode +
                               "' needs at least two points");
    }
    std::vector<double> rf, rcp;
    for (const auto& s : ref_curve) {
      rf.push_back(s.f_hz);
      rcp.push_back(s.cp_mps);
    }
    const PchipInterpolator interp(std::move(rf), std::move(rcp));

    auto& rows = report.points[mode];
    for (const auto& s : test_curve) {
      if (!interp.in_support(s.f_hz)) continue;
      const double cp_ref = interp(s.f_hz);
      ComparePoint p;
      p.f_hz = s.f_hz;
      p.fd_mhzmm = s.f_hz * thickness_m * 1e-3;
      p.cp_ref_mps = cp_ref;
      p.cp_test_mps = s.cp_mps;
      p.rel_diff = (s.cp_mps - cp_ref) / cp_ref;
      rows.push_back(p);
    }
    if (rows.empty()) {
      throw std::runtime_error("mode '" + mode +
                               "': test and reference frequency supports do not overlap");
    }

    ModeSummary sum;
    sum.mode = mode;
    sum.count = static_cast<int>(rows.size());
    sum.fd_lo_mhzmm = rows.front().fd_mhzmm;
    sum.fd_hi_mhzmm = rows.front().fd_mhzmm;
    for (const auto& p : rows) {
      sum.mean_abs_rel_diff += std::abs(p.rel_diff);
      sum.max_abs_rel_diff = std::max(sum.max_abs_rel_diff, std::abs(p.rel_diff));
      sum.fd_lo_mhzmm = std::min(sum.fd_lo_mhzmm, p.fd_mhzmm);
      sum.fd_hi_mhzmm = std::max(sum.fd_hi_mhzmm, p.fd_mhzmm);
    }
    sum.mean_abs_rel_diff /= sum.count;
    report.summaries.push_back(sum);
  }
  if (!any_shared) throw std::runtime_error("reference and test share no mode labels");
  return report;
}

void write_comparison_csv(std::ostream& os, const ComparisonReport& report) {
  os << "# lamwave-comparison v1\n";
  for (const auto& s : report.summaries) {
    os << "# summary mode=" << s.mode << " count=" << s.count
       << " mean_abs_rel_diff=" << format_double(s.mean_abs_rel_diff)
       << " max_abs_rel_diff=" << format_double(s.max_abs_rel_diff)
       << " fd_lo_mhzmm=" << format_double(s.fd_lo_mhzmm)
       << " fd_hi_mhzmm=" << format_double(s.fd_hi_mhzmm) << "\n";
  }
  os << "mode,f_hz,fd_mhzmm,cp_ref_mps,cp_test_mps,rel_diff\n";
  for (const auto& [mode, rows] : report.points) {
    for (const auto& p : rows) {
      os << mode << ',' << format_double(p.f_hz) << ',' << format_double(p.fd_mhzmm) << ','
         << format_double(p.cp_ref_mps) << ',' << format_double(p.cp_test_mps) << ','
         << format_double(p.rel_diff) << '\n';
    }
  }
}

void write_comparison_svg(std::ostream& os, const ComparisonReport& report,
                          const ModeCurves& ref, const ModeCurves& test) {
  SvgPanel top, bottom;
  top.title = "phase velocity";
  top.x_label = "f*d / MHz*mm";
  top.y_label = "c_p / m/s";
  bottom.title = "relative difference";
  bottom.x_label = "f*d / MHz*mm";
  bottom.y_label = "(test - ref) / ref / %";

  const double scale = report.thickness_m * 1e-3;
  std::size_t ci = 0;
  for (const auto& [mode, curve] : ref) {
    SvgSeries line;
    line.label = mode + " ref";
    line.color = mode_color(mode, ci++);
    line.line = true;
    line.markers = false;
    for (const auto& s : curve) line.pts.push_back({s.f_hz * scale, s.cp_mps});
    top.series.push_back(std::move(line));
  }
  for (const auto& [mode, curve] : test) {
    SvgSeries dots;
    dots.label = mode + " test";
    dots.color = mode_color(mode, ci++);
    dots.marker_r = 1.8;
    for (const auto& s : curve) dots.pts.push_back({s.f_hz * scale, s.cp_mps});
    top.series.push_back(std::move(dots));
  }
  std::size_t di = 0;
  for (const auto& [mode, rows] : report.points) {
    SvgSeries dots;
    dots.label = mode;
    dots.color = mode_color(mode, di++);
    for (const auto& p : rows) dots.pts.push_back({p.fd_mhzmm, 100.0 * p.rel_diff});
    bottom.series.push_back(std::move(dots));
  }
  write_svg_panels(os, {top, bottom});
}

}  // namespace lamwave
