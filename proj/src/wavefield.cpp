#include "lamwave/wavefield.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lamwave/interp.hpp"
#include "lamwave/parallel.hpp"
#include "lamwave/rng.hpp"

namespace lamwave {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Greatest common divisor of positive reals, tolerant of roundoff.
double real_gcd(double a, double b, double tol) {
  while (b > tol) {
    double r = std::fmod(a, b);
    if (r < tol || b - r < tol) r = 0.0;
    a = b;
    b = r;
  }
  return a;
}

void check_on_bin(double f_hz, double duration_s) {
  const double cycles = f_hz * duration_s;
  if (std::abs(cycles - std::round(cycles)) > 1e-6 * std::max(1.0, cycles)) {
    throw std::runtime_error("excitation tone " + format_double(f_hz) +
                             " Hz is not an integer number of cycles over " +
                             format_double(duration_s) + " s");
  }
}

}  // namespace

std::vector<double> ExcitationSpec::run_comb(int run) const {
  if (run < 0 || run >= n_runs) {
    throw std::invalid_argument("run index " + std::to_string(run) +
                                " outside [0, " + std::to_string(n_runs) + ")");
  }
  std::vector<double> tones;
  const double base = f_min_hz + run * run_shift_hz;
  for (int j = 0;; ++j) {
    const double f = base + j * df_within_run_hz;
    if (f > f_max_hz * (1.0 + 1e-12)) break;
    tones.push_back(f);
  }
  return tones;
}

std::vector<double> ExcitationSpec::full_comb() const {
  std::vector<double> tones;
  for (int r = 0; r < n_runs; ++r) {
    const auto run = run_comb(r);
    tones.insert(tones.end(), run.begin(), run.end());
  }
  std::sort(tones.begin(), tones.end());
  tones.erase(std::unique(tones.begin(), tones.end(),
                          [](double a, double b) {
                            return std::abs(a - b) <= 1e-9 * std::max(a, b);
                          }),
              tones.end());
  return tones;
}

double ExcitationSpec::comb_spacing_hz() const {
  const auto tones = full_comb();
  double g = tones.front();
  for (double f : tones) g = real_gcd(std::max(g, f), std::min(g, f), 1e-3);
  return g;
}

void ExcitationSpec::validate() const {
  if (!(f_min_hz > 0.0)) throw std::invalid_argument("f_min_hz must be positive");
  if (!(f_max_hz >= f_min_hz)) throw std::invalid_argument("f_max_hz must be >= f_min_hz");
  if (!(df_within_run_hz > 0.0)) throw std::invalid_argument("df_within_run_hz must be positive");
  if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  if (n_runs > 1 && !(run_shift_hz > 0.0)) {
    throw std::invalid_argument("run_shift_hz must be positive with multiple runs");
  }
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration_s must be positive");
  for (double f : full_comb()) check_on_bin(f, duration_s);
}

ExcitationSpec ExcitationSpec::es1() {
  ExcitationSpec s;
  s.f_min_hz = 250.0;
  s.f_max_hz = 1.0e6;
  s.df_within_run_hz = 5000.0;
  s.run_shift_hz = 250.0;
  s.n_runs = 20;
  s.duration_s = 0.080;
  return s;
}

ExcitationSpec ExcitationSpec::es2() {
  ExcitationSpec s;
  s.f_min_hz = 1000.0;
  s.f_max_hz = 5.0e5;
  s.df_within_run_hz = 1000.0;
  s.run_shift_hz = 0.0;
  s.n_runs = 1;
  s.duration_s = 0.125;
  return s;
}

std::vector<double> make_excitation(const ExcitationSpec& spec, int run, double fs_hz) {
  spec.validate();
  const auto tones = spec.run_comb(run);
  if (!(fs_hz > 2.0 * tones.back())) {
    throw std::runtime_error("sample rate " + format_double(fs_hz) +
                             " Hz below Nyquist for tone " + format_double(tones.back()) + " Hz");
  }
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs_hz));
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs_hz;
    double sum = 0.0;
    for (double f : tones) sum += std::sin(kTwoPi * f * t);
    const double w = spec.hanning_window ? 0.5 - 0.5 * std::cos(kTwoPi * t / spec.duration_s) : 1.0;
    s[i] = w * sum;
  }
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : s) v /= peak;
  }
  return s;
}

double Wavefield::dt() const {
  if (times_s.size() < 2) throw std::runtime_error("wavefield needs at least two time samples");
  const double d0 = times_s[1] - times_s[0];
  for (std::size_t i = 1; i + 1 < times_s.size(); ++i) {
    if (std::abs(times_s[i + 1] - times_s[i] - d0) > 1e-6 * d0) {
      throw std::runtime_error("time grid is not uniform near sample " + std::to_string(i));
    }
  }
  return d0;
}

double Wavefield::min_dx() const {
  if (positions_m.size() < 2) throw std::runtime_error("wavefield needs at least two positions");
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < positions_m.size(); ++i) {
    m = std::min(m, positions_m[i + 1] - positions_m[i]);
  }
  return m;
}

void Wavefield::validate() const {
  if (times_s.empty() || positions_m.empty()) throw std::runtime_error("empty wavefield grid");
  if (v.rows() != static_cast<Eigen::Index>(times_s.size()) ||
      v.cols() != static_cast<Eigen::Index>(positions_m.size())) {
    throw std::runtime_error("wavefield matrix shape does not match grids");
  }
  for (std::size_t i = 0; i + 1 < times_s.size(); ++i) {
    if (!(times_s[i + 1] > times_s[i])) throw std::runtime_error("times must be ascending");
  }
  for (std::size_t i = 0; i + 1 < positions_m.size(); ++i) {
    if (!(positions_m[i + 1] > positions_m[i])) throw std::runtime_error("positions must be ascending");
  }
  if (!(path_length_m > 0.0)) throw std::runtime_error("path length must be positive");
}

std::vector<double> make_path(double length_m, double dx_m, double jitter_rel,
                              std::uint64_t seed) {
  if (!(length_m > 0.0) || !(dx_m > 0.0)) {
    throw std::invalid_argument("path length and spacing must be positive");
  }
  if (jitter_rel < 0.0 || jitter_rel >= 0.5) {
    throw std::invalid_argument("jitter_rel must lie in [0, 0.5)");
  }
  const auto n = static_cast<std::size_t>(std::floor(length_m / dx_m + 1e-9)) + 1;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double xi = static_cast<double>(i) * dx_m;
    if (jitter_rel > 0.0) {
      const double u = u01(splitmix64(seed ^ (0x706F736974696F6Eull + i)));
      xi += dx_m * jitter_rel * (2.0 * u - 1.0);
    }
    x[i] = xi;
  }
  return x;
}

namespace {

struct ModeCurve {
  std::string label;
  double amplitude = 0.0;
  PchipInterpolator nu_of_f;  // 1/m as a function of Hz
};

ModeCurve build_mode_curve(const SweepResult& branches, const std::string& label,
                           double amplitude) {
  const DispersionBranch* match = nullptr;
  for (const auto& b : branches.branches) {
    if (b.label == label) {
      match = &b;
      break;
    }
  }
  if (match == nullptr) {
    std::string have;
    for (const auto& b : branches.branches) {
      if (!have.empty()) have += ", ";
      have += b.label;
    }
    throw std::runtime_error("no dispersion branch labeled '" + label +
                             "' (available: " + (have.empty() ? "none" : have) + ")");
  }
  std::vector<double> f, nu;
  f.reserve(match->points.size());
  nu.reserve(match->points.size());
  for (const auto& p : match->points) {
    f.push_back(p.f_hz);
    nu.push_back(p.k_radpm / kTwoPi);
  }
  if (f.size() < 2) {
    throw std::runtime_error("branch '" + label + "' has too few points to interpolate");
  }
  return {label, amplitude, PchipInterpolator(std::move(f), std::move(nu))};
}

}  // namespace

Wavefield synthesize(const SweepResult& branches, const ExcitationSpec& spec,
                     const std::vector<double>& positions_m, const SynthOptions& opt) {
  spec.validate();
  if (positions_m.size() < 2) throw std::invalid_argument("need at least two positions");
  for (std::size_t i = 0; i + 1 < positions_m.size(); ++i) {
    if (!(positions_m[i + 1] > positions_m[i])) {
      throw std::invalid_argument("positions must be strictly ascending");
    }
  }
  if (opt.mode_amplitudes.empty()) throw std::invalid_argument("no modes selected");

  const auto tones = spec.full_comb();
  const double duration =
      opt.duration_s > 0.0 ? opt.duration_s : 1.0 / spec.comb_spacing_hz();
  for (double f : tones) check_on_bin(f, duration);
  const double fs = opt.fs_hz > 0.0 ? opt.fs_hz : 2.5 * spec.f_max_hz;
  if (!(fs > 2.0 * tones.back())) {
    throw std::runtime_error("sample rate " + format_double(fs) +
                             " Hz below Nyquist for tone " + format_double(tones.back()) + " Hz");
  }

  std::vector<ModeCurve> modes;
  for (const auto& [label, amp] : opt.mode_amplitudes) {
    modes.push_back(build_mode_curve(branches, label, amp));
  }
  for (double f : tones) {
    bool covered = false;
    for (const auto& m : modes) {
      if (m.nu_of_f.in_support(f)) covered = true;
    }
    if (!covered) {
      throw std::runtime_error("tone " + format_double(f) +
                               " Hz lies outside every selected branch's frequency support");
    }
  }

  const auto n_t = static_cast<Eigen::Index>(std::llround(duration * fs));
  const auto n_x = static_cast<Eigen::Index>(positions_m.size());
  const auto n_tone = static_cast<Eigen::Index>(tones.size());
  const double path_length = positions_m.back();

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n_x, n_t);
  Eigen::MatrixXd mode_field(n_x, n_t);

  constexpr Eigen::Index kBlock = 256;
  Eigen::MatrixXd er(kBlock, n_t), ei(kBlock, n_t);
  Eigen::MatrixXd cr(n_x, kBlock), ci(n_x, kBlock);

  for (const auto& mode : modes) {
    mode_field.setZero();
    const std::uint64_t mode_key = splitmix64(opt.seed ^ fnv1a(mode.label));
    for (Eigen::Index start = 0; start < n_tone; start += kBlock) {
      const Eigen::Index nb = std::min(kBlock, n_tone - start);
      Eigen::Index used = 0;
      for (Eigen::Index j = 0; j < nb; ++j) {
        const Eigen::Index g = start + j;
        const double f = tones[static_cast<std::size_t>(g)];
        if (!mode.nu_of_f.in_support(f)) continue;
        const double nu = mode.nu_of_f(f);
        const double phi0 =
            kTwoPi * u01(splitmix64(mode_key ^ (0x746F6E65ull + static_cast<std::uint64_t>(g))));

        // Phase factor over time via recurrence, renormalized periodically.
        const std::complex<double> step(std::cos(kTwoPi * f / fs), std::sin(kTwoPi * f / fs));
        std::complex<double> e(1.0, 0.0);
        for (Eigen::Index it = 0; it < n_t; ++it) {
          er(used, it) = e.real();
          ei(used, it) = e.imag();
          e *= step;
          if ((it & 511) == 511) e /= std::abs(e);
        }

        for (Eigen::Index ix = 0; ix < n_x; ++ix) {
          const double x = positions_m[static_cast<std::size_t>(ix)];
          std::complex<double> c =
              mode.amplitude * std::polar(1.0, phi0 - kTwoPi * nu * x);
          if (opt.reflection_coeff != 0.0) {
            c += mode.amplitude * opt.reflection_coeff *
                 std::polar(1.0, phi0 - 2.0 * kTwoPi * nu * path_length + kTwoPi * nu * x);
          }
          cr(ix, used) = c.real();
          ci(ix, used) = c.imag();
        }
        ++used;
      }
      if (used == 0) continue;
      mode_field.noalias() += cr.leftCols(used) * er.topRows(used);
      mode_field.noalias() -= ci.leftCols(used) * ei.topRows(used);
    }
    total += mode_field;
  }

  Wavefield wf;
  wf.times_s.resize(static_cast<std::size_t>(n_t));
  for (Eigen::Index i = 0; i < n_t; ++i) wf.times_s[static_cast<std::size_t>(i)] = i / fs;
  wf.positions_m = positions_m;
  wf.path_length_m = path_length;
  wf.v = total.transpose();

  double noise_rms = opt.noise_rms;
  if (opt.noise_snr_db > 0.0) {
    const double signal_rms = std::sqrt(wf.v.squaredNorm() / static_cast<double>(wf.v.size()));
    noise_rms = signal_rms * std::pow(10.0, -opt.noise_snr_db / 20.0);
  }
  if (noise_rms > 0.0) {
    const std::uint64_t noise_key = splitmix64(opt.seed ^ 0x6E6F697365ull);
    parallel_for(static_cast<std::size_t>(n_t), opt.workers, [&](std::size_t it) {
      for (Eigen::Index ix = 0; ix < n_x; ++ix) {
        const std::uint64_t ctr =
            static_cast<std::uint64_t>(it) * static_cast<std::uint64_t>(n_x) +
            static_cast<std::uint64_t>(ix);
        wf.v(static_cast<Eigen::Index>(it), ix) += noise_rms * gauss(noise_key ^ ctr);
      }
    });
  }

  wf.validate();
  return wf;
}

void save_wavefield_csv(std::ostream& os, const Wavefield& wf) {
  wf.validate();
  os << "# lamwave-wavefield v1\n";
  os << "# n_t=" << wf.times_s.size() << " n_x=" << wf.positions_m.size()
     << " path_length_m=" << format_double(wf.path_length_m) << "\n";
  os << "t";
  for (double x : wf.positions_m) os << ',' << format_double(x);
  os << '\n';
  for (std::size_t i = 0; i < wf.times_s.size(); ++i) {
    os << format_double(wf.times_s[i]);
    for (std::size_t j = 0; j < wf.positions_m.size(); ++j) {
      os << ',' << format_double(wf.v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    os << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, std::size_t line_no, std::size_t col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ", column " +
                             std::to_string(col + 1) + ": cannot parse '" + s + "' as a number");
  }
}

}  // namespace

Wavefield load_wavefield_csv(std::istream& is) {
  Wavefield wf;
  std::string line;
  std::size_t line_no = 0;
  double path_length = 0.0;

  // Metadata and header.
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string tok;
      while (meta >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos && tok.substr(0, eq) == "path_length_m") {
          path_length = std::stod(tok.substr(eq + 1));
        }
      }
      continue;
    }
    break;
  }
  if (line.empty() || line.rfind("t,", 0) != 0) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": expected header row starting with 't,'");
  }
  const auto header = split_csv_line(line);
  for (std::size_t j = 1; j < header.size(); ++j) {
    wf.positions_m.push_back(parse_field(header[j], line_no, j));
  }
  if (wf.positions_m.empty()) throw std::runtime_error("header row has no position columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != wf.positions_m.size() + 1) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(wf.positions_m.size() + 1) + " columns, got " +
                               std::to_string(fields.size()) + " (first missing column " +
                               std::to_string(std::min(fields.size(), wf.positions_m.size())) +
                               ")");
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_field(fields[j], line_no, j);
    wf.times_s.push_back(row[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("wavefield file has no sample rows");

  wf.v.resize(static_cast<Eigen::Index>(rows.size()),
              static_cast<Eigen::Index>(wf.positions_m.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < wf.positions_m.size(); ++j) {
      wf.v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j + 1];
    }
  }
  wf.path_length_m = path_length > 0.0 ? path_length : wf.positions_m.back();
  wf.validate();
  return wf;
}

namespace {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error(std::string("unexpected end of file reading ") + what);
  }
  return v;
}

}  // namespace

void save_wavefield_bin(std::ostream& os, const Wavefield& wf) {
  wf.validate();
  os.write("LWF1", 4);
  write_pod<std::uint64_t>(os, wf.times_s.size());
  write_pod<std::uint64_t>(os, wf.positions_m.size());
  write_pod<double>(os, wf.path_length_m);
  os.write(reinterpret_cast<const char*>(wf.times_s.data()),
           static_cast<std::streamsize>(wf.times_s.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(wf.positions_m.data()),
           static_cast<std::streamsize>(wf.positions_m.size() * sizeof(double)));
  for (Eigen::Index i = 0; i < wf.v.rows(); ++i) {
    for (Eigen::Index j = 0; j < wf.v.cols(); ++j) write_pod<double>(os, wf.v(i, j));
  }
}

Wavefield load_wavefield_bin(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "LWF1", 4) != 0) {
    throw std::runtime_error("not a LWF1 wavefield file (bad magic)");
  }
  const auto n_t = read_pod<std::uint64_t>(is, "time count");
  const auto n_x = read_pod<std::uint64_t>(is, "position count");
  if (n_t == 0 || n_x == 0 || n_t > (1ull << 31) || n_x > (1ull << 31)) {
    throw std::runtime_error("implausible wavefield dimensions " + std::to_string(n_t) + " x " +
                             std::to_string(n_x));
  }
  Wavefield wf;
  wf.path_length_m = read_pod<double>(is, "path length");
  wf.times_s.resize(n_t);
  wf.positions_m.resize(n_x);
  if (!is.read(reinterpret_cast<char*>(wf.times_s.data()),
               static_cast<std::streamsize>(n_t * sizeof(double)))) {
    throw std::runtime_error("unexpected end of file reading time grid");
  }
  if (!is.read(reinterpret_cast<char*>(wf.positions_m.data()),
               static_cast<std::streamsize>(n_x * sizeof(double)))) {
    throw std::runtime_error("unexpected end of file reading positions");
  }
  wf.v.resize(static_cast<Eigen::Index>(n_t), static_cast<Eigen::Index>(n_x));
  for (Eigen::Index i = 0; i < wf.v.rows(); ++i) {
    for (Eigen::Index j = 0; j < wf.v.cols(); ++j) {
      wf.v(i, j) = read_pod<double>(is, "sample");
    }
  }
  wf.validate();
  return wf;
}

}  // namespace lamwave
