#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lamwave/compare.hpp"
#include "lamwave/config.hpp"
#include "lamwave/fk_transform.hpp"
#include "lamwave/global_matrix.hpp"
#include "lamwave/outlier_filter.hpp"
#include "lamwave/svg.hpp"
#include "lamwave/wavefield.hpp"

namespace fs = std::filesystem;
using namespace lamwave;

namespace {

int log_level() {
  const char* env = std::getenv("LAMWAVE_LOG");
  if (env == nullptr) return 1;
  const std::string v = env;
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "lamwave: %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "lamwave[debug]: %s\n", msg.c_str());
}

std::ofstream open_out(const fs::path& dir, const std::string& name, bool binary) {
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot open output file " + p.string());
  log_debug("writing " + p.string());
  return os;
}

Wavefield load_wavefield_any(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open wavefield file " + path);
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::string(magic, 4) == "LWF1") {
    std::ifstream is(path, std::ios::binary);
    return load_wavefield_bin(is);
  }
  std::ifstream is(path);
  return load_wavefield_csv(is);
}

// Accepts a dispersion branch CSV or a filter report CSV (kept rows).
ModeCurves load_curves(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open curve file " + path);
  std::string first;
  std::getline(is, first);
  is.seekg(0);
  if (first.rfind("mode,f_hz,fd_mhzmm,k_radpm", 0) == 0) {
    return curves_from_branches(read_branch_csv(is));
  }
  if (first.rfind("# lamwave-filter-report", 0) == 0) {
    ModeCurves curves;
    std::string line;
    bool in_rows = false;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (line[0] == '#') continue;
      if (line.rfind("mode,", 0) == 0) {
        in_rows = true;
        continue;
      }
      if (!in_rows) continue;
      std::istringstream ls(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ls, field, ',')) fields.push_back(field);
      if (!line.empty() && line.back() == ',') fields.push_back("");
      if (fields.size() < 10) {
        throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                 ": expected 10 columns");
      }
      if (fields[7] != "1") continue;  // rejected row
      curves[fields[0]].push_back({std::stod(fields[1]), std::stod(fields[4])});
    }
    for (auto& [mode, curve] : curves) {
      std::sort(curve.begin(), curve.end(),
                [](const CurveSample& a, const CurveSample& b) { return a.f_hz < b.f_hz; });
    }
    return curves;
  }
  throw std::runtime_error(path + ": unrecognized curve file (expected a branch CSV or a filter report)");
}

void write_dispersion_svg(std::ostream& os, const SweepResult& result, double thickness_m) {
  SvgPanel panel;
  panel.title = "dispersion diagram";
  panel.x_label = "f*d / MHz*mm";
  panel.y_label = "c_p / m/s";
  std::size_t ci = 0;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  for (const auto& b : result.branches) {
    SvgSeries s;
    s.label = b.label;
    s.color = palette[ci++ % 8];
    s.line = true;
    s.markers = false;
    for (const auto& [fd, cp] : phase_velocity(b, thickness_m)) s.pts.push_back({fd, cp});
    panel.series.push_back(std::move(s));
  }
  write_svg_panels(os, {panel});
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  double fmin_khz = -1, fmax_khz = -1, df_khz = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;

  RunConfig load() const {
    RunConfig cfg = config_path.empty() ? default_fml_config() : load_config_file(config_path);
    if (fmin_khz > 0) cfg.sweep.f_min_hz = fmin_khz * 1e3;
    if (fmax_khz > 0) cfg.sweep.f_max_hz = fmax_khz * 1e3;
    if (df_khz > 0) cfg.sweep.df_hz = df_khz * 1e3;
    if (seed_set) cfg.seed = seed;
    if (workers >= 0) cfg.workers = workers;
    cfg.finalize();
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool sweep_flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file (omit for built-in laminate)");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--workers", flags.workers, "worker threads (0 = all cores)");
  if (sweep_flags) {
    cmd->add_option("--fmin", flags.fmin_khz, "sweep start frequency / kHz");
    cmd->add_option("--fmax", flags.fmax_khz, "sweep end frequency / kHz");
    cmd->add_option("--df", flags.df_khz, "sweep frequency step / kHz");
  }
}

SweepResult run_sweep(const RunConfig& cfg) {
  const auto grid = cfg.sweep.frequency_grid();
  log_info("dispersion sweep over " + std::to_string(grid.size()) + " frequencies, " +
           std::to_string(cfg.laminate.layers.size()) + " layers");
  SweepResult result = dispersion_sweep(cfg.laminate, grid, cfg.sweep.options);
  for (const auto& w : result.warnings) log_info("warning: " + w);
  log_info("traced " + std::to_string(result.branches.size()) + " branches");
  return result;
}

int cmd_dispersion(const CommonFlags& flags) {
  const RunConfig cfg = flags.load();
  const SweepResult result = run_sweep(cfg);
  const double d = cfg.laminate.total_thickness_m();
  {
    auto os = open_out(flags.out_dir, "branches.csv", false);
    write_branch_csv(os, result, d);
  }
  {
    auto os = open_out(flags.out_dir, "dispersion.svg", false);
    write_dispersion_svg(os, result, d);
  }
  return 0;
}

int cmd_synth(const CommonFlags& flags, const std::string& branches_file) {
  const RunConfig cfg = flags.load();
  SweepResult branches;
  if (!branches_file.empty()) {
    std::ifstream is(branches_file);
    if (!is) throw std::runtime_error("cannot open branch file " + branches_file);
    branches = read_branch_csv(is);
  } else {
    branches = run_sweep(cfg);
  }
  const auto positions = make_path(cfg.path.length_m, cfg.path.dx_m, cfg.path.jitter_rel, cfg.seed);
  log_info("synthesizing " + std::to_string(positions.size()) + " scan positions");
  const Wavefield wf = synthesize(branches, cfg.excitation, positions, cfg.synth);
  if (flags.format == "bin") {
    auto os = open_out(flags.out_dir, "wavefield.lwf", true);
    save_wavefield_bin(os, wf);
  } else {
    auto os = open_out(flags.out_dir, "wavefield.csv", false);
    save_wavefield_csv(os, wf);
  }
  return 0;
}

int cmd_extract(const CommonFlags& flags, const std::string& in_file, bool save_fk) {
  const RunConfig cfg = flags.load();
  const Wavefield wf = load_wavefield_any(in_file);
  const double f_limit = 0.5 / wf.dt();
  std::vector<double> f_grid;
  for (double f : cfg.excitation.full_comb()) {
    if (f <= f_limit) f_grid.push_back(f);
  }
  if (f_grid.empty()) throw std::runtime_error("no excitation tone lies below the record Nyquist");
  std::vector<double> nu_grid;
  const double nu_limit = 0.5 / wf.min_dx();
  for (double nu : cfg.fk.nu_grid(cfg.path)) {
    if (nu <= nu_limit) nu_grid.push_back(nu);
  }
  log_info("transforming " + std::to_string(f_grid.size()) + " x " +
           std::to_string(nu_grid.size()) + " spectral bins");
  const FKMap map = nudft2(wf, f_grid, nu_grid, cfg.workers);
  if (save_fk) {
    auto os = open_out(flags.out_dir, "fk.lfk", true);
    save_fk_bin(os, map);
  }
  const PeakSet peaks = peak_search(map, cfg.fk.max_peaks_per_row, cfg.fk.rel_prominence_floor);
  {
    auto os = open_out(flags.out_dir, "peaks_raw.csv", false);
    save_peaks_csv(os, peaks);
  }
  const ModePeaks modes = assign_fundamental_modes(peaks);
  const FilterReport report = run_filter(modes, cfg.filter);
  for (const auto& [mode, n] : report.kept_count) {
    log_info(mode + ": kept " + std::to_string(n) + ", rejected " +
             std::to_string(report.rejected_count.at(mode)));
  }
  {
    auto os = open_out(flags.out_dir, "filter_report.csv", false);
    write_filter_report_csv(os, report);
  }
  return 0;
}

int cmd_compare(const CommonFlags& flags, const std::string& ref_file,
                const std::string& test_file) {
  const RunConfig cfg = flags.load();
  const ModeCurves ref = load_curves(ref_file);
  const ModeCurves test = load_curves(test_file);
  const ComparisonReport report = compare_curves(ref, test, cfg.laminate.total_thickness_m());
  for (const auto& s : report.summaries) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s: n=%d mean|rel|=%.4f%% max|rel|=%.4f%%", s.mode.c_str(),
                  s.count, 100.0 * s.mean_abs_rel_diff, 100.0 * s.max_abs_rel_diff);
    log_info(buf);
  }
  {
    auto os = open_out(flags.out_dir, "comparison.csv", false);
    write_comparison_csv(os, report);
  }
  {
    auto os = open_out(flags.out_dir, "comparison.svg", false);
    write_comparison_svg(os, report, ref, test);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"guided-wave dispersion toolkit for layered laminates"};
  app.require_subcommand(1);

  CommonFlags disp_flags, synth_flags, extract_flags, compare_flags;
  std::string branches_file, in_file, ref_file, test_file;
  bool save_fk = false;

  auto* disp = app.add_subcommand("dispersion", "compute and trace dispersion branches");
  add_common(disp, disp_flags, true);

  auto* synth = app.add_subcommand("synth", "synthesize a space-time wavefield");
  add_common(synth, synth_flags, true);
  synth->add_option("--branches", branches_file, "reuse a branch CSV instead of sweeping");
  synth->add_option("--seed", synth_flags.seed, "override RNG seed")
      ->each([&](const std::string&) { synth_flags.seed_set = true; });
  synth->add_option("--format", synth_flags.format, "wavefield format")
      ->check(CLI::IsMember({"csv", "bin"}));

  auto* extract = app.add_subcommand("extract", "transform a wavefield and filter peak sets");
  add_common(extract, extract_flags, false);
  extract->add_option("--in", in_file, "wavefield file (csv or lwf)")->required();
  extract->add_flag("--save-fk", save_fk, "also write the complex spectrum (binary)");

  auto* compare = app.add_subcommand("compare", "relative phase-velocity differences");
  add_common(compare, compare_flags, false);
  compare->add_option("--ref", ref_file, "reference curves (branch CSV or filter report)")
      ->required();
  compare->add_option("--test", test_file, "test curves (branch CSV or filter report)")
      ->required();

  auto* cfgcmd = app.add_subcommand("config", "print the built-in default config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cfgcmd->parsed()) {
      std::fputs(default_config_json().c_str(), stdout);
      return 0;
    }
    if (disp->parsed()) return cmd_dispersion(disp_flags);
    if (synth->parsed()) return cmd_synth(synth_flags, branches_file);
    if (extract->parsed()) return cmd_extract(extract_flags, in_file, save_fk);
    if (compare->parsed()) return cmd_compare(compare_flags, ref_file, test_file);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "lamwave: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lamwave: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
