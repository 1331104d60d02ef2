#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lamwave/global_matrix.hpp"

namespace lamwave {

// Multi-sine excitation comb: n_runs runs, each a set of tones spaced
// df_within_run_hz apart, with consecutive runs shifted by run_shift_hz.
// Tones are kept on DFT bin centres: every frequency must be an integer
// multiple of 1/duration_s.
struct ExcitationSpec {
  double f_min_hz = 250.0;
  double f_max_hz = 1.0e6;
  double df_within_run_hz = 5000.0;
  double run_shift_hz = 250.0;
  int n_runs = 20;
  double duration_s = 0.080;
  bool hanning_window = true;

  std::vector<double> run_comb(int run) const;  // ascending tones of one run
  std::vector<double> full_comb() const;        // union over all runs, ascending
  double comb_spacing_hz() const;               // gcd-like spacing of full comb
  void validate() const;                        // throws on bad geometry / off-bin tones

  static ExcitationSpec es1();  // 5 kHz runs shifted by 250 Hz, to 1 MHz
  static ExcitationSpec es2();  // single 1 kHz comb to 0.5 MHz
};

// Windowed sum of unit sinusoids for one run, sampled at fs_hz and
// normalized to unit peak amplitude.
std::vector<double> make_excitation(const ExcitationSpec& spec, int run, double fs_hz);

// Space-time record of surface velocity on a line scan.
struct Wavefield {
  std::vector<double> times_s;      // uniform, ascending
  std::vector<double> positions_m;  // ascending, possibly non-uniform
  Eigen::MatrixXd v;                // times x positions
  double path_length_m = 0.0;       // scan extent used for reflections

  double dt() const;      // throws if the time grid is not uniform
  double min_dx() const;  // smallest position spacing
  void validate() const;
};

// Measurement grid along the propagation path, optionally jittered to model
// imperfect scanner positioning. Jitter keeps the points strictly ascending.
std::vector<double> make_path(double length_m, double dx_m, double jitter_rel,
                              std::uint64_t seed);

struct SynthOptions {
  // Branch label -> amplitude of that mode's contribution.
  // S0 rides well below A0 but above the -13 dB sidelobes of a uniform
  // scan aperture, so per-row two-peak detection resolves both modes.
  std::map<std::string, double> mode_amplitudes = {{"A0", 1.0}, {"S0", 0.35}};
  double noise_rms = 0.0;          // additive white Gaussian noise level
  double noise_snr_db = 0.0;       // >0: noise_rms derived from the clean field RMS
  double reflection_coeff = 0.0;   // mirror source beyond the far path end
  std::uint64_t seed = 1;
  double fs_hz = 0.0;              // 0: 2.5x highest tone
  double duration_s = 0.0;         // 0: one full period of the comb
  int workers = 0;                 // 0: all hardware threads
};

// Steady-state forward model: every comb tone propagates each selected mode
// with the wavenumber interpolated from its dispersion branch, plus an
// optional end-of-path reflection and measurement noise. Per-tone source
// phases are seed-derived, so contributions are additive across mode sets.
// Throws if any tone falls outside the frequency support of all selected
// branches.
Wavefield synthesize(const SweepResult& branches, const ExcitationSpec& spec,
                     const std::vector<double>& positions_m,
                     const SynthOptions& opt = {});

void save_wavefield_csv(std::ostream& os, const Wavefield& wf);
Wavefield load_wavefield_csv(std::istream& is);

void save_wavefield_bin(std::ostream& os, const Wavefield& wf);
Wavefield load_wavefield_bin(std::istream& is);

}  // namespace lamwave
