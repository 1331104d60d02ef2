#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "lamwave/christoffel.hpp"
#include "lamwave/materials.hpp"

namespace lamwave {

// One evaluation of the boundary/interface determinant at (f, k).
// log_abs_det is ln|det| of the assembled matrix (row-equilibration undone);
// phase is arg(det) in (-pi, pi]; condition_hint is min/max |U_ii| of the
// equilibrated LU, ~0 at a root.
struct CharacteristicEvaluation {
  double f_hz = 0;
  double k_radpm = 0;
  double log_abs_det = 0;
  double phase = 0;
  double condition_hint = 0;
};

// Assembles the 6N x 6N system: 3 traction-free rows for the top surface,
// 6 continuity rows (displacement + traction) per interior interface, and 3
// traction-free rows for the bottom surface. Each layer's local thickness
// coordinate spans [0, h_n]. Partial-wave columns are phase-referenced to the
// surface where their exponential has unit magnitude, which rescales columns
// by nonzero constants (det roots unchanged) and keeps large f*d evaluations
// finite. Column blocks are ordered top layer first.
Eigen::MatrixXcd assemble_global(const Laminate& lam, double f_hz,
                                 double k_radpm);

CharacteristicEvaluation characteristic(const Laminate& lam, double f_hz,
                                        double k_radpm);

enum class ModeFamily { lamb, shear_horizontal };
enum class ModeSymmetry { symmetric, antisymmetric, unknown };

struct BranchPoint {
  double f_hz = 0;
  double k_radpm = 0;
  double cp_mps = 0;  // 2 pi f / k
};

struct DispersionBranch {
  std::string label = "unlabeled";
  ModeFamily family = ModeFamily::lamb;
  ModeSymmetry symmetry = ModeSymmetry::unknown;
  std::vector<BranchPoint> points;  // strictly increasing f, one k per f
  // mean |u1|, |u2|, |u3| at the top surface, normalized to unit sum
  Eigen::Vector3d polarization_signature = Eigen::Vector3d::Zero();
};

struct SweepOptions {
  double cp_min_mps = 300;
  double cp_max_mps = 15000;
  int scan_points = 2000;        // log-spaced k samples per frequency
  double k_rel_tol = 1e-7;       // golden-section termination
  double min_log_drop = 6.0;     // required dip below flanking scan values
  double min_phase_rotation = 0.785;  // corroboration across +-3e-4 rel k
  double bulk_speed_rel_tol = 1e-5;   // partial-wave degeneracy guard
  double continuation_rel_window = 0.02;
  int max_gap = 3;               // tolerated consecutive misses per branch
  int max_refine_per_step = 4;   // midpoint root scans when a branch stalls
  int min_branch_points = 2;     // shorter fragments are discarded
  int workers = 0;
  bool classify = true;          // polarization + symmetry labels
};

struct SweepResult {
  std::vector<DispersionBranch> branches;
  std::vector<std::string> warnings;
};

// Traces guided-mode branches over f_grid (ascending, Hz). Roots of the
// characteristic are located per frequency by a log-spaced k scan over
// [2 pi f / cp_max, 2 pi f / cp_min], bracketing local minima of ln|det|
// (with phase-rotation corroboration and adaptive rescans when two roots
// share a few cells), then golden-section refinement. Roots are associated
// across frequencies by nearest phase velocity within a slope-aware window;
// a branch that finds no candidate gets a missed-root warning, never a
// silent drop.
SweepResult dispersion_sweep(const Laminate& lam,
                             const std::vector<double>& f_grid,
                             const SweepOptions& opts = {});

// (f*d in MHz*mm, c_p in m/s) pairs for one branch.
std::vector<std::pair<double, double>> phase_velocity(
    const DispersionBranch& branch, double total_thickness_m);

// CSV columns: mode,f_hz,fd_mhzmm,k_radpm,nu_1pm,cp_mps.
void write_branch_csv(std::ostream& os, const SweepResult& result,
                      double total_thickness_m);
SweepResult read_branch_csv(std::istream& is);

}  // namespace lamwave
