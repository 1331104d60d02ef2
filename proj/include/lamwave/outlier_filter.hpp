#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "lamwave/fk_transform.hpp"

namespace lamwave {

// Frequency-thickness interval in which extracted peaks of the listed modes
// are discarded (known interference or convergence regions).
struct ExclusionZone {
  double fd_lo_mhzmm = 0.0;
  double fd_hi_mhzmm = std::numeric_limits<double>::infinity();
  std::vector<std::string> modes;  // empty: applies to every mode
  std::string reason;              // short tag carried into reports
};

struct FilterConfig {
  double path_length_m = 0.32;
  double min_point_spacing_m = 0.0005;
  double lambda_factor = 10.0;   // nu_min = lambda_factor / path length
  double nyquist_factor = 2.0;   // nu_max = 1 / (nyquist_factor * spacing)
  double residual_threshold_rel = 0.03;
  double thickness_m = 0.0;      // converts peak frequency to f*d for zones
  int spline_segment_min_points = 8;
  int segment_target_points = 40;
  double curvature_gate_rel = 0.10;  // quadratic gain that disables the linear pass
  int max_iterations = 10;
  std::vector<ExclusionZone> exclusion_zones;

  double nu_min_1pm() const { return lambda_factor / path_length_m; }
  double nu_max_1pm() const { return 1.0 / (nyquist_factor * min_point_spacing_m); }
  void validate() const;

  // S0 is blanked where shear-horizontal branches cross it, and both
  // fundamental modes where their wavenumbers converge at high f*d.
  static std::vector<ExclusionZone> default_zones();
  static FilterConfig defaults(double path_length_m, double min_point_spacing_m,
                               double thickness_m);
};

enum class RejectReason {
  below_nu_min,
  above_nu_max,
  exclusion_zone,
  linear_residual,
  spline_residual,
};
const char* to_string(RejectReason reason);

struct RejectedPeak {
  std::string mode;
  Peak peak;
  RejectReason reason;
  std::string detail;  // zone tag or offending relative residual
};

using ModePeaks = std::map<std::string, PeakSet>;

struct FilterReport {
  ModePeaks kept;
  std::vector<RejectedPeak> rejected;
  std::map<std::string, int> kept_count;
  std::map<std::string, int> rejected_count;
  FilterConfig config;
};

// Hard wavenumber bounds from scan-path geometry: peaks below nu_min (path
// shorter than ten wavelengths) or above nu_max (spatial Nyquist) go.
FilterReport apply_bounds(const ModePeaks& peaks, const FilterConfig& cfg);

// Zone-based rejection on f*d; requires cfg.thickness_m > 0.
FilterReport apply_exclusions(const ModePeaks& peaks, const FilterConfig& cfg);

// Two-pass residual rejection per mode, iterated to a fixed point (at most
// max_iterations cycles): a segmented robust (bisquare) linear fit of nu vs f
// wherever a quadratic term would not improve the fit materially, then a
// density-weighted cubic smoothing spline with GCV-selected stiffness.
// Throws if a mode has fewer than 10 points.
FilterReport fit_reject(const ModePeaks& peaks, const FilterConfig& cfg);

// bounds -> exclusions -> fit_reject, rejections accumulated across stages.
FilterReport run_filter(const ModePeaks& peaks, const FilterConfig& cfg);

// Splits a raw peak set into fundamental-mode candidates: per frequency the
// two strongest peaks are taken, the larger-wavenumber one as A0 (slower
// mode) and the other as S0. A lone peak goes to A0, which dominates the
// response of the intended records; misassignments surface as fit outliers.
ModePeaks assign_fundamental_modes(const PeakSet& peaks);

void write_filter_report_csv(std::ostream& os, const FilterReport& report);

// Natural cubic smoothing spline with per-point weights, stiffness chosen by
// generalized cross-validation. Returns fitted values at the sample abscissae
// (strictly increasing x required). Exposed for direct testing.
std::vector<double> smoothing_spline_gcv(const std::vector<double>& x,
                                         const std::vector<double>& y,
                                         const std::vector<double>& w,
                                         double* lambda_out = nullptr);

}  // namespace lamwave
