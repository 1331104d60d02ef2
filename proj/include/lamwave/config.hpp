#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "lamwave/global_matrix.hpp"
#include "lamwave/materials.hpp"
#include "lamwave/outlier_filter.hpp"
#include "lamwave/wavefield.hpp"

namespace lamwave {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SweepConfig {
  double f_min_hz = 250.0;
  double f_max_hz = 1.00025e6;
  double df_hz = 2500.0;
  int low_f_subdiv = 4;  // extra grid density below ~10 df
  SweepOptions options;

  // Ascending frequency grid: linear spacing df_hz, subdivided low_f_subdiv-fold
  // below 10*df_hz where branches curve fastest.
  std::vector<double> frequency_grid() const;
};

struct PathConfig {
  double length_m = 0.32;
  double dx_m = 0.0005;
  double jitter_rel = 0.0;
};

struct FkConfig {
  int max_peaks_per_row = 2;
  double rel_prominence_floor = 0.05;
  int nu_points = 0;           // 0: auto from pad factor
  double nu_pad_factor = 4.0;  // bins per natural resolution width 1/L

  std::vector<double> nu_grid(const PathConfig& path) const;
};

struct RunConfig {
  Laminate laminate;
  SweepConfig sweep;
  ExcitationSpec excitation = ExcitationSpec::es1();
  PathConfig path;
  SynthOptions synth;
  FilterConfig filter;
  FkConfig fk;
  std::uint64_t seed = 1;
  int workers = 0;

  void finalize();  // fills cross-module defaults (thickness, seeds, workers)
};

RunConfig default_fml_config();

// Parses the JSON text; diagnostics carry source_name and a field path.
RunConfig parse_config(const std::string& json_text, const std::string& source_name);
RunConfig load_config_file(const std::string& path);

std::string default_config_json();  // the built-in config, serialized

}  // namespace lamwave
