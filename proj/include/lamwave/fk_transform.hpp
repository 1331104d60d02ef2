#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "lamwave/wavefield.hpp"

namespace lamwave {

// Frequency-wavenumber spectrum: F(f, nu) = sum_x sum_t v(t, x)
// * exp(+i 2 pi f t) * exp(-i 2 pi nu x). Raw double sums, no normalization,
// so a unit plane wave cos(2 pi (f0 t - nu0 x)) lands at (+f0, +nu0) with
// magnitude n_t * n_x / 2 on bin-centred grids.
struct FKMap {
  std::vector<double> f_grid_hz;
  std::vector<double> nu_grid_1pm;
  Eigen::MatrixXcd F;  // f rows x nu columns
};

// Evaluates the sums on arbitrary grids. Grids must stay below the record's
// Nyquist limits (1/(2 dt) in time, 1/(2 min dx) in space); violations throw
// with the offending value. A uniform time grid takes a blocked matrix-product
// fast path; non-uniform sampling falls back to direct evaluation.
FKMap nudft2(const Wavefield& wf, const std::vector<double>& f_grid_hz,
             const std::vector<double>& nu_grid_1pm, int workers = 0);

// Uniform signed analysis grids covering one full record:
// f = (m - n_t/2)/T for m = 0..n_t-1 and nu = (n - n_x/2)/L for
// n = 0..n_x-1, where T and L are the record spans.
std::vector<double> full_bin_f_grid(const Wavefield& wf);
std::vector<double> full_bin_nu_grid(const Wavefield& wf);

struct Peak {
  double f_hz = 0.0;
  double nu_1pm = 0.0;
  double magnitude = 0.0;   // |F| after sub-bin refinement
  double prominence = 0.0;  // drop to the saddle toward the nearest higher peak
};

struct PeakSet {
  std::vector<Peak> peaks;  // ascending f, then ascending nu
};

// Per-frequency-row ridge extraction: local maxima of |F| along nu, kept if
// their prominence clears rel_prominence_floor * (row maximum), strongest
// max_peaks_per_row survivors per row. Peak positions and magnitudes are
// refined with a three-point parabola through log |F|.
PeakSet peak_search(const FKMap& map, int max_peaks_per_row = 2,
                    double rel_prominence_floor = 0.05);

void save_fk_csv(std::ostream& os, const FKMap& map);
void save_fk_bin(std::ostream& os, const FKMap& map);
FKMap load_fk_bin(std::istream& is);

void save_peaks_csv(std::ostream& os, const PeakSet& peaks);
PeakSet load_peaks_csv(std::istream& is);

}  // namespace lamwave
