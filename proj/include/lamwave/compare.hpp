#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lamwave/global_matrix.hpp"
#include "lamwave/outlier_filter.hpp"

namespace lamwave {

struct CurveSample {
  double f_hz = 0.0;
  double cp_mps = 0.0;
};

// Mode label -> phase-velocity samples, ascending in f.
using ModeCurves = std::map<std::string, std::vector<CurveSample>>;

ModeCurves curves_from_branches(const SweepResult& result);
ModeCurves curves_from_peaks(const ModePeaks& peaks);  // cp = f / nu

struct ComparePoint {
  double f_hz = 0.0;
  double fd_mhzmm = 0.0;
  double cp_ref_mps = 0.0;
  double cp_test_mps = 0.0;
  double rel_diff = 0.0;  // (test - ref) / ref
};

struct ModeSummary {
  std::string mode;
  int count = 0;
  double mean_abs_rel_diff = 0.0;
  double max_abs_rel_diff = 0.0;
  double fd_lo_mhzmm = 0.0;  // overlap band actually compared
  double fd_hi_mhzmm = 0.0;
};

struct ComparisonReport {
  std::map<std::string, std::vector<ComparePoint>> points;
  std::vector<ModeSummary> summaries;
  double thickness_m = 0.0;
};

// Interpolates each reference curve (monotone cubic, overshoot-free) at the
// test frequencies lying inside the reference support; no extrapolation.
// Modes present in both inputs are compared; throws if none are shared or if
// a shared mode has no overlapping frequencies.
ComparisonReport compare_curves(const ModeCurves& ref, const ModeCurves& test,
                                double thickness_m);

void write_comparison_csv(std::ostream& os, const ComparisonReport& report);

// Two panels: phase velocity over f*d (reference lines, test points) and the
// per-point relative difference in percent.
void write_comparison_svg(std::ostream& os, const ComparisonReport& report,
                          const ModeCurves& ref, const ModeCurves& test);

}  // namespace lamwave
