#include "lamwave/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lamwave {

using nlohmann::json;

std::vector<double> SweepConfig::frequency_grid() const {
  if (!(f_min_hz > 0.0) || !(f_max_hz > f_min_hz) || !(df_hz > 0.0)) {
    throw ConfigError("sweep: need 0 < f_min < f_max and df > 0");
  }
  std::vector<double> grid;
  const double knee = 10.0 * df_hz;
  const int sub = std::max(1, low_f_subdiv);
  for (double f = f_min_hz; f < f_max_hz + 0.5 * df_hz; f += df_hz) {
    const double fc = std::min(f, f_max_hz);
    grid.push_back(fc);
    if (fc < knee && fc + df_hz <= f_max_hz + 0.5 * df_hz) {
      for (int s = 1; s < sub; ++s) grid.push_back(fc + df_hz * s / sub);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> FkConfig::nu_grid(const PathConfig& path) const {
  const double nu_max = 1.0 / (2.0 * path.dx_m);
  int n = nu_points;
  if (n <= 0) {
    n = static_cast<int>(std::ceil(nu_max * nu_pad_factor * path.length_m)) + 1;
  }
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] = nu_max * static_cast<double>(i) / (n - 1);
  }
  return grid;
}

void RunConfig::finalize() {
  laminate.validate();
  filter.thickness_m = laminate.total_thickness_m();
  filter.path_length_m = path.length_m;
  filter.min_point_spacing_m = path.dx_m;
  synth.seed = seed;
  synth.workers = workers;
  sweep.options.workers = workers;
  filter.validate();
  excitation.validate();
}

RunConfig default_fml_config() {
  RunConfig cfg;
  cfg.laminate = build_fml_layup();
  cfg.excitation = ExcitationSpec::es1();
  cfg.sweep.options.cp_min_mps = 50.0;  // keep A0 resolvable down to the lowest tones
  cfg.synth.noise_snr_db = 30.0;
  cfg.filter.exclusion_zones = FilterConfig::default_zones();
  cfg.finalize();
  return cfg;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected a JSON object");
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      fail(where, "unknown key '" + item.key() + "'");
    }
  }
}

double require_num(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where, std::string("missing required key '") + key + "'");
  if (!j.at(key).is_number()) fail(where + "." + key, "expected a number");
  return j.at(key).get<double>();
}

double opt_num(const json& j, const std::string& where, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number()) fail(where + "." + key, "expected a number");
  return j.at(key).get<double>();
}

int opt_int(const json& j, const std::string& where, const char* key, int def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number_integer()) fail(where + "." + key, "expected an integer");
  return j.at(key).get<int>();
}

bool opt_bool(const json& j, const std::string& where, const char* key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) fail(where + "." + key, "expected a boolean");
  return j.at(key).get<bool>();
}

std::string require_str(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where, std::string("missing required key '") + key + "'");
  if (!j.at(key).is_string()) fail(where + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

MaterialRecord parse_material(const json& m, const std::string& where) {
  check_keys(m, where,
             {"name", "type", "rho_kgpm3", "ply_thickness_mm", "metal", "source", "E_gpa", "nu",
              "E1_gpa", "E2_gpa", "E3_gpa", "G12_gpa", "G13_gpa", "G23_gpa", "nu12", "nu13",
              "nu23"});
  MaterialRecord rec;
  rec.name = require_str(m, where, "name");
  rec.rho_kgpm3 = require_num(m, where, "rho_kgpm3");
  rec.t_ply_mm = require_num(m, where, "ply_thickness_mm");
  rec.metal = opt_bool(m, where, "metal", false);
  if (m.contains("source")) rec.source = require_str(m, where, "source");
  const std::string type = require_str(m, where, "type");
  try {
    if (type == "isotropic") {
      rec.tensor = stiffness_from_isotropic(require_num(m, where, "E_gpa"),
                                            require_num(m, where, "nu"));
    } else if (type == "engineering") {
      EngineeringConstants e;
      e.E1_gpa = require_num(m, where, "E1_gpa");
      e.E2_gpa = require_num(m, where, "E2_gpa");
      e.E3_gpa = require_num(m, where, "E3_gpa");
      e.G12_gpa = require_num(m, where, "G12_gpa");
      e.G13_gpa = require_num(m, where, "G13_gpa");
      e.G23_gpa = require_num(m, where, "G23_gpa");
      e.nu12 = require_num(m, where, "nu12");
      e.nu13 = require_num(m, where, "nu13");
      e.nu23 = require_num(m, where, "nu23");
      rec.tensor = stiffness_from_engineering(e);
    } else {
      fail(where + ".type", "expected 'isotropic' or 'engineering', got '" + type + "'");
    }
  } catch (const std::domain_error& ex) {
    fail(where, std::string("invalid elastic constants: ") + ex.what());
  }
  return rec;
}

Laminate parse_laminate(const json& root, const std::string& src, double propagation_angle_deg) {
  if (!root.contains("materials") && !root.contains("layup")) {
    FmlLayupOptions opts;
    opts.propagation_angle_deg = propagation_angle_deg;
    return build_fml_layup(opts);
  }
  if (!root.contains("materials") || !root.contains("layup")) {
    fail(src, "'materials' and 'layup' must be given together");
  }
  if (!root.at("materials").is_array()) fail(src + ".materials", "expected an array");
  if (!root.at("layup").is_array()) fail(src + ".layup", "expected an array");

  std::vector<MaterialRecord> mats;
  std::size_t mi = 0;
  for (const auto& m : root.at("materials")) {
    mats.push_back(parse_material(m, src + ".materials[" + std::to_string(mi) + "]"));
    ++mi;
  }

  std::vector<std::pair<std::string, double>> plies;
  std::size_t li = 0;
  for (const auto& entry : root.at("layup")) {
    const std::string where = src + ".layup[" + std::to_string(li) + "]";
    if (!entry.is_string()) fail(where, "expected 'material:angle_deg' strings");
    const std::string s = entry.get<std::string>();
    const auto colon = s.rfind(':');
    if (colon == std::string::npos) fail(where, "expected 'material:angle_deg', got '" + s + "'");
    double angle = 0.0;
    try {
      angle = std::stod(s.substr(colon + 1));
    } catch (const std::exception&) {
      fail(where, "cannot parse angle in '" + s + "'");
    }
    plies.emplace_back(s.substr(0, colon), angle);
    ++li;
  }
  if (opt_bool(root, src, "symmetric_layup", false)) {
    for (std::size_t i = plies.size(); i-- > 0;) plies.push_back(plies[i]);
  }

  Laminate lam;
  li = 0;
  for (const auto& [name, angle] : plies) {
    const auto it = std::find_if(mats.begin(), mats.end(),
                                 [&](const MaterialRecord& r) { return r.name == name; });
    if (it == mats.end()) {
      fail(src + ".layup[" + std::to_string(li) + "]", "unknown material '" + name + "'");
    }
    Layer layer;
    layer.material = *it;
    layer.theta_deg = angle - propagation_angle_deg;
    layer.material.tensor = rotate_in_plane(it->tensor, layer.theta_deg);
    layer.thickness_m = it->t_ply_mm * 1e-3;
    lam.layers.push_back(std::move(layer));
    ++li;
  }
  return lam;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(source_name + ": " + ex.what());
  }
  check_keys(root, source_name,
             {"materials", "layup", "symmetric_layup", "propagation_angle_deg", "sweep",
              "excitation", "path", "synth", "filter", "fk", "seed", "workers"});

  RunConfig cfg;
  const double prop_angle = opt_num(root, source_name, "propagation_angle_deg", 0.0);
  cfg.laminate = parse_laminate(root, source_name, prop_angle);

  if (root.contains("sweep")) {
    const auto& s = root.at("sweep");
    const std::string where = source_name + ".sweep";
    check_keys(s, where,
               {"f_min_khz", "f_max_khz", "df_khz", "low_f_subdiv", "cp_min_mps", "cp_max_mps",
                "scan_points", "min_log_drop", "classify"});
    cfg.sweep.f_min_hz = opt_num(s, where, "f_min_khz", cfg.sweep.f_min_hz / 1e3) * 1e3;
    cfg.sweep.f_max_hz = opt_num(s, where, "f_max_khz", cfg.sweep.f_max_hz / 1e3) * 1e3;
    cfg.sweep.df_hz = opt_num(s, where, "df_khz", cfg.sweep.df_hz / 1e3) * 1e3;
    cfg.sweep.low_f_subdiv = opt_int(s, where, "low_f_subdiv", cfg.sweep.low_f_subdiv);
    cfg.sweep.options.cp_min_mps = opt_num(s, where, "cp_min_mps", cfg.sweep.options.cp_min_mps);
    cfg.sweep.options.cp_max_mps = opt_num(s, where, "cp_max_mps", cfg.sweep.options.cp_max_mps);
    cfg.sweep.options.scan_points = opt_int(s, where, "scan_points", cfg.sweep.options.scan_points);
    cfg.sweep.options.min_log_drop =
        opt_num(s, where, "min_log_drop", cfg.sweep.options.min_log_drop);
    cfg.sweep.options.classify = opt_bool(s, where, "classify", cfg.sweep.options.classify);
  }

  if (root.contains("excitation")) {
    const auto& e = root.at("excitation");
    const std::string where = source_name + ".excitation";
    check_keys(e, where,
               {"preset", "f_min_khz", "f_max_khz", "df_within_run_khz", "run_shift_khz", "n_runs",
                "duration_ms", "hanning_window"});
    if (e.contains("preset")) {
      const std::string p = require_str(e, where, "preset");
      if (p == "es1") {
        cfg.excitation = ExcitationSpec::es1();
      } else if (p == "es2") {
        cfg.excitation = ExcitationSpec::es2();
      } else {
        fail(where + ".preset", "expected 'es1' or 'es2', got '" + p + "'");
      }
    }
    cfg.excitation.f_min_hz = opt_num(e, where, "f_min_khz", cfg.excitation.f_min_hz / 1e3) * 1e3;
    cfg.excitation.f_max_hz = opt_num(e, where, "f_max_khz", cfg.excitation.f_max_hz / 1e3) * 1e3;
    cfg.excitation.df_within_run_hz =
        opt_num(e, where, "df_within_run_khz", cfg.excitation.df_within_run_hz / 1e3) * 1e3;
    cfg.excitation.run_shift_hz =
        opt_num(e, where, "run_shift_khz", cfg.excitation.run_shift_hz / 1e3) * 1e3;
    cfg.excitation.n_runs = opt_int(e, where, "n_runs", cfg.excitation.n_runs);
    cfg.excitation.duration_s =
        opt_num(e, where, "duration_ms", cfg.excitation.duration_s * 1e3) * 1e-3;
    cfg.excitation.hanning_window =
        opt_bool(e, where, "hanning_window", cfg.excitation.hanning_window);
  }

  if (root.contains("path")) {
    const auto& p = root.at("path");
    const std::string where = source_name + ".path";
    check_keys(p, where, {"length_m", "dx_mm", "jitter_rel"});
    cfg.path.length_m = opt_num(p, where, "length_m", cfg.path.length_m);
    cfg.path.dx_m = opt_num(p, where, "dx_mm", cfg.path.dx_m * 1e3) * 1e-3;
    cfg.path.jitter_rel = opt_num(p, where, "jitter_rel", cfg.path.jitter_rel);
  }

  if (root.contains("synth")) {
    const auto& s = root.at("synth");
    const std::string where = source_name + ".synth";
    check_keys(s, where,
               {"modes", "noise_rms", "noise_snr_db", "reflection_coeff", "fs_mhz", "duration_ms"});
    if (s.contains("modes")) {
      if (!s.at("modes").is_object()) fail(where + ".modes", "expected {label: amplitude}");
      cfg.synth.mode_amplitudes.clear();
      for (const auto& item : s.at("modes").items()) {
        if (!item.value().is_number()) {
          fail(where + ".modes." + item.key(), "expected a number");
        }
        cfg.synth.mode_amplitudes[item.key()] = item.value().get<double>();
      }
    }
    cfg.synth.noise_rms = opt_num(s, where, "noise_rms", cfg.synth.noise_rms);
    cfg.synth.noise_snr_db = opt_num(s, where, "noise_snr_db", cfg.synth.noise_snr_db);
    cfg.synth.reflection_coeff = opt_num(s, where, "reflection_coeff", cfg.synth.reflection_coeff);
    cfg.synth.fs_hz = opt_num(s, where, "fs_mhz", cfg.synth.fs_hz / 1e6) * 1e6;
    cfg.synth.duration_s = opt_num(s, where, "duration_ms", cfg.synth.duration_s * 1e3) * 1e-3;
  }

  if (root.contains("filter")) {
    const auto& f = root.at("filter");
    const std::string where = source_name + ".filter";
    check_keys(f, where,
               {"residual_threshold_rel", "lambda_factor", "nyquist_factor",
                "spline_segment_min_points", "segment_target_points", "curvature_gate_rel",
                "max_iterations", "exclusion_zones"});
    cfg.filter.residual_threshold_rel =
        opt_num(f, where, "residual_threshold_rel", cfg.filter.residual_threshold_rel);
    cfg.filter.lambda_factor = opt_num(f, where, "lambda_factor", cfg.filter.lambda_factor);
    cfg.filter.nyquist_factor = opt_num(f, where, "nyquist_factor", cfg.filter.nyquist_factor);
    cfg.filter.spline_segment_min_points =
        opt_int(f, where, "spline_segment_min_points", cfg.filter.spline_segment_min_points);
    cfg.filter.segment_target_points =
        opt_int(f, where, "segment_target_points", cfg.filter.segment_target_points);
    cfg.filter.curvature_gate_rel =
        opt_num(f, where, "curvature_gate_rel", cfg.filter.curvature_gate_rel);
    cfg.filter.max_iterations = opt_int(f, where, "max_iterations", cfg.filter.max_iterations);
    if (f.contains("exclusion_zones")) {
      if (!f.at("exclusion_zones").is_array()) {
        fail(where + ".exclusion_zones", "expected an array");
      }
      cfg.filter.exclusion_zones.clear();
      std::size_t zi = 0;
      for (const auto& z : f.at("exclusion_zones")) {
        const std::string zwhere = where + ".exclusion_zones[" + std::to_string(zi) + "]";
        check_keys(z, zwhere, {"fd_lo_mhzmm", "fd_hi_mhzmm", "modes", "reason"});
        ExclusionZone zone;
        zone.fd_lo_mhzmm = require_num(z, zwhere, "fd_lo_mhzmm");
        zone.fd_hi_mhzmm = opt_num(z, zwhere, "fd_hi_mhzmm", zone.fd_hi_mhzmm);
        if (z.contains("modes")) {
          if (!z.at("modes").is_array()) fail(zwhere + ".modes", "expected an array of labels");
          for (const auto& m : z.at("modes")) {
            if (!m.is_string()) fail(zwhere + ".modes", "expected strings");
            zone.modes.push_back(m.get<std::string>());
          }
        }
        zone.reason = require_str(z, zwhere, "reason");
        cfg.filter.exclusion_zones.push_back(std::move(zone));
        ++zi;
      }
    } else {
      cfg.filter.exclusion_zones = FilterConfig::default_zones();
    }
  } else {
    cfg.filter.exclusion_zones = FilterConfig::default_zones();
  }

  if (root.contains("fk")) {
    const auto& k = root.at("fk");
    const std::string where = source_name + ".fk";
    check_keys(k, where, {"max_peaks_per_row", "rel_prominence_floor", "nu_points",
                          "nu_pad_factor"});
    cfg.fk.max_peaks_per_row = opt_int(k, where, "max_peaks_per_row", cfg.fk.max_peaks_per_row);
    cfg.fk.rel_prominence_floor =
        opt_num(k, where, "rel_prominence_floor", cfg.fk.rel_prominence_floor);
    cfg.fk.nu_points = opt_int(k, where, "nu_points", cfg.fk.nu_points);
    cfg.fk.nu_pad_factor = opt_num(k, where, "nu_pad_factor", cfg.fk.nu_pad_factor);
  }

  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned() && !root.at("seed").is_number_integer()) {
      fail(source_name + ".seed", "expected a non-negative integer");
    }
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }
  cfg.workers = opt_int(root, source_name, "workers", cfg.workers);

  try {
    cfg.finalize();
  } catch (const std::exception& ex) {
    throw ConfigError(source_name + ": " + ex.what());
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string default_config_json() {
  json root;
  root["propagation_angle_deg"] = 0.0;
  root["sweep"] = {{"f_min_khz", 0.25},   {"f_max_khz", 1000.25}, {"df_khz", 2.5},
                   {"low_f_subdiv", 4},   {"cp_min_mps", 50.0},   {"cp_max_mps", 15000.0},
                   {"scan_points", 2000}, {"classify", true}};
  root["excitation"] = {{"preset", "es1"}};
  root["path"] = {{"length_m", 0.32}, {"dx_mm", 0.5}, {"jitter_rel", 0.0}};
  root["synth"] = {{"modes", {{"A0", 1.0}, {"S0", 0.35}}},
                   {"noise_snr_db", 30.0},
                   {"reflection_coeff", 0.0}};
  root["filter"] = {
      {"residual_threshold_rel", 0.03},
      {"lambda_factor", 10.0},
      {"nyquist_factor", 2.0},
      {"exclusion_zones",
       json::array({{{"fd_lo_mhzmm", 1.1},
                     {"fd_hi_mhzmm", 1.2},
                     {"modes", json::array({"S0"})},
                     {"reason", "sh_interference"}},
                    {{"fd_lo_mhzmm", 1.8}, {"reason", "mode_convergence"}}})}};
  root["fk"] = {{"max_peaks_per_row", 2}, {"rel_prominence_floor", 0.05}};
  root["seed"] = 1;
  root["workers"] = 0;
  return root.dump(2) + "\n";
}

}  // namespace lamwave
