#include "lamwave/fk_transform.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lamwave/parallel.hpp"

namespace lamwave {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double min_spacing(const std::vector<double>& g) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) m = std::min(m, g[i + 1] - g[i]);
  return m;
}

void check_band(const std::vector<double>& grid, double limit, const char* axis,
                const char* unit) {
  for (double g : grid) {
    if (std::abs(g) > limit * (1.0 + 1e-9)) {
      throw std::runtime_error(std::string("requested ") + axis + " " + format_double(g) + " " +
                               unit + " exceeds the record's resolvable limit " +
                               format_double(limit) + " " + unit);
    }
  }
}

bool uniform_times(const Wavefield& wf, double* dt_out) {
  if (wf.times_s.size() < 2) return false;
  const double d0 = wf.times_s[1] - wf.times_s[0];
  for (std::size_t i = 0; i + 1 < wf.times_s.size(); ++i) {
    if (std::abs(wf.times_s[i + 1] - wf.times_s[i] - d0) > 1e-9 * d0) return false;
  }
  *dt_out = d0;
  return true;
}

}  // namespace

FKMap nudft2(const Wavefield& wf, const std::vector<double>& f_grid_hz,
             const std::vector<double>& nu_grid_1pm, int workers) {
  wf.validate();
  if (f_grid_hz.empty() || nu_grid_1pm.empty()) {
    throw std::invalid_argument("analysis grids must be non-empty");
  }
  check_band(f_grid_hz, 0.5 / min_spacing(wf.times_s), "frequency", "Hz");
  check_band(nu_grid_1pm, 0.5 / min_spacing(wf.positions_m), "wavenumber", "1/m");

  const auto n_t = static_cast<Eigen::Index>(wf.times_s.size());
  const auto n_x = static_cast<Eigen::Index>(wf.positions_m.size());
  const auto n_f = static_cast<Eigen::Index>(f_grid_hz.size());
  const auto n_nu = static_cast<Eigen::Index>(nu_grid_1pm.size());

  // Spatial phase matrix, shared by both paths.
  Eigen::MatrixXcd g(n_x, n_nu);
  for (Eigen::Index jn = 0; jn < n_nu; ++jn) {
    const double nu = nu_grid_1pm[static_cast<std::size_t>(jn)];
    for (Eigen::Index jx = 0; jx < n_x; ++jx) {
      g(jx, jn) = std::polar(1.0, -kTwoPi * nu * wf.positions_m[static_cast<std::size_t>(jx)]);
    }
  }

  FKMap map;
  map.f_grid_hz = f_grid_hz;
  map.nu_grid_1pm = nu_grid_1pm;
  map.F.resize(n_f, n_nu);

  double dt = 0.0;
  if (uniform_times(wf, &dt)) {
    const double t0 = wf.times_s.front();
    constexpr Eigen::Index kBlock = 128;
    const auto n_blocks = static_cast<std::size_t>((n_f + kBlock - 1) / kBlock);
    parallel_for(n_blocks, workers, [&](std::size_t blk) {
      const Eigen::Index start = static_cast<Eigen::Index>(blk) * kBlock;
      const Eigen::Index nb = std::min(kBlock, n_f - start);
      Eigen::MatrixXd er(nb, n_t), ei(nb, n_t);
      for (Eigen::Index j = 0; j < nb; ++j) {
        const double f = f_grid_hz[static_cast<std::size_t>(start + j)];
        const std::complex<double> step(std::cos(kTwoPi * f * dt), std::sin(kTwoPi * f * dt));
        std::complex<double> e = std::polar(1.0, kTwoPi * f * t0);
        for (Eigen::Index it = 0; it < n_t; ++it) {
          er(j, it) = e.real();
          ei(j, it) = e.imag();
          e *= step;
          if ((it & 511) == 511) e /= std::abs(e);
        }
      }
      Eigen::MatrixXcd s(nb, n_x);
      s.real() = er * wf.v;
      s.imag() = ei * wf.v;
      map.F.middleRows(start, nb).noalias() = s * g;
    });
  } else {
    parallel_for(static_cast<std::size_t>(n_f), workers, [&](std::size_t jf) {
      const double f = f_grid_hz[jf];
      Eigen::VectorXcd e(n_t);
      for (Eigen::Index it = 0; it < n_t; ++it) {
        e(it) = std::polar(1.0, kTwoPi * f * wf.times_s[static_cast<std::size_t>(it)]);
      }
      Eigen::RowVectorXcd s = e.transpose() * wf.v;
      map.F.row(static_cast<Eigen::Index>(jf)).noalias() = s * g;
    });
  }
  return map;
}

std::vector<double> full_bin_f_grid(const Wavefield& wf) {
  const double dt = wf.dt();
  const auto n = static_cast<long long>(wf.times_s.size());
  const double span = static_cast<double>(n) * dt;
  std::vector<double> f(static_cast<std::size_t>(n));
  for (long long m = 0; m < n; ++m) {
    f[static_cast<std::size_t>(m)] = static_cast<double>(m - n / 2) / span;
  }
  return f;
}

std::vector<double> full_bin_nu_grid(const Wavefield& wf) {
  const auto n = static_cast<long long>(wf.positions_m.size());
  if (n < 2) throw std::runtime_error("need at least two positions for a bin grid");
  const double dx = (wf.positions_m.back() - wf.positions_m.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i + 1 < wf.positions_m.size(); ++i) {
    const double step = wf.positions_m[i + 1] - wf.positions_m[i];
    if (std::abs(step - dx) > 1e-6 * dx) {
      throw std::runtime_error("position grid is not uniform; full bin set undefined");
    }
  }
  const double span = static_cast<double>(n) * dx;
  std::vector<double> nu(static_cast<std::size_t>(n));
  for (long long m = 0; m < n; ++m) {
    nu[static_cast<std::size_t>(m)] = static_cast<double>(m - n / 2) / span;
  }
  return nu;
}

PeakSet peak_search(const FKMap& map, int max_peaks_per_row, double rel_prominence_floor) {
  if (max_peaks_per_row < 1) throw std::invalid_argument("max_peaks_per_row must be >= 1");
  if (rel_prominence_floor < 0.0) throw std::invalid_argument("prominence floor must be >= 0");
  const auto n_f = map.F.rows();
  const auto n_nu = map.F.cols();

  PeakSet out;
  std::vector<double> mag(static_cast<std::size_t>(n_nu));
  for (Eigen::Index i = 0; i < n_f; ++i) {
    double row_max = 0.0;
    for (Eigen::Index j = 0; j < n_nu; ++j) {
      mag[static_cast<std::size_t>(j)] = std::abs(map.F(i, j));
      row_max = std::max(row_max, mag[static_cast<std::size_t>(j)]);
    }
    if (row_max <= 0.0) continue;

    struct Cand {
      Eigen::Index j;
      double m, prom;
    };
    std::vector<Cand> cands;
    for (Eigen::Index j = 1; j + 1 < n_nu; ++j) {
      const double m = mag[static_cast<std::size_t>(j)];
      if (!(m > mag[static_cast<std::size_t>(j - 1)] && m > mag[static_cast<std::size_t>(j + 1)]))
        continue;

      double left_base = m;
      for (Eigen::Index l = j - 1; l >= 0; --l) {
        const double ml = mag[static_cast<std::size_t>(l)];
        if (ml >= m) break;
        left_base = std::min(left_base, ml);
      }
      double right_base = m;
      for (Eigen::Index r = j + 1; r < n_nu; ++r) {
        const double mr = mag[static_cast<std::size_t>(r)];
        if (mr >= m) break;
        right_base = std::min(right_base, mr);
      }
      const double prom = m - std::max(left_base, right_base);
      if (prom < rel_prominence_floor * row_max) continue;
      cands.push_back({j, m, prom});
    }

    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.m != b.m) return a.m > b.m;
      return a.j < b.j;
    });
    if (cands.size() > static_cast<std::size_t>(max_peaks_per_row)) {
      cands.resize(static_cast<std::size_t>(max_peaks_per_row));
    }
    std::sort(cands.begin(), cands.end(),
              [](const Cand& a, const Cand& b) { return a.j < b.j; });

    for (const auto& c : cands) {
      Peak p;
      p.f_hz = map.f_grid_hz[static_cast<std::size_t>(i)];
      p.prominence = c.prom;
      const double m1 = mag[static_cast<std::size_t>(c.j - 1)];
      const double m2 = c.m;
      const double m3 = mag[static_cast<std::size_t>(c.j + 1)];
      const double x1 = map.nu_grid_1pm[static_cast<std::size_t>(c.j - 1)];
      const double x2 = map.nu_grid_1pm[static_cast<std::size_t>(c.j)];
      const double x3 = map.nu_grid_1pm[static_cast<std::size_t>(c.j + 1)];
      p.nu_1pm = x2;
      p.magnitude = m2;
      if (m1 > 0.0 && m3 > 0.0) {
        // Parabolic vertex through log magnitudes; exact for Gaussian-like
        // peak shapes and robust on non-uniform grids.
        const double y1 = std::log(m1), y2 = std::log(m2), y3 = std::log(m3);
        const double d1 = (y2 - y1) / (x2 - x1);
        const double d2 = (y3 - y2) / (x3 - x2);
        const double a = (d2 - d1) / (x3 - x1);
        if (a < 0.0) {
          double xv = 0.5 * (x1 + x2) - d1 / (2.0 * a);
          xv = std::clamp(xv, x1, x3);
          const double yv = y1 + d1 * (xv - x1) + a * (xv - x1) * (xv - x2);
          p.nu_1pm = xv;
          p.magnitude = std::exp(yv);
        }
      }
      out.peaks.push_back(p);
    }
  }
  return out;
}

void save_fk_csv(std::ostream& os, const FKMap& map) {
  os << "f_hz,nu_1pm,abs,phase\n";
  for (Eigen::Index i = 0; i < map.F.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.F.cols(); ++j) {
      const auto z = map.F(i, j);
      os << format_double(map.f_grid_hz[static_cast<std::size_t>(i)]) << ','
         << format_double(map.nu_grid_1pm[static_cast<std::size_t>(j)]) << ','
         << format_double(std::abs(z)) << ',' << format_double(std::arg(z)) << '\n';
    }
  }
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

void save_fk_bin(std::ostream& os, const FKMap& map) {
  os.write("LFK1", 4);
  write_pod<std::uint64_t>(os, map.f_grid_hz.size());
  write_pod<std::uint64_t>(os, map.nu_grid_1pm.size());
  os.write(reinterpret_cast<const char*>(map.f_grid_hz.data()),
           static_cast<std::streamsize>(map.f_grid_hz.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(map.nu_grid_1pm.data()),
           static_cast<std::streamsize>(map.nu_grid_1pm.size() * sizeof(double)));
  for (Eigen::Index i = 0; i < map.F.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.F.cols(); ++j) {
      write_pod<double>(os, map.F(i, j).real());
      write_pod<double>(os, map.F(i, j).imag());
    }
  }
}

FKMap load_fk_bin(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "LFK1", 4) != 0) {
    throw std::runtime_error("not a LFK1 spectrum file (bad magic)");
  }
  const auto n_f = read_pod<std::uint64_t>(is, "frequency count");
  const auto n_nu = read_pod<std::uint64_t>(is, "wavenumber count");
  if (n_f == 0 || n_nu == 0 || n_f > (1ull << 31) || n_nu > (1ull << 31)) {
    throw std::runtime_error("implausible spectrum dimensions");
  }
  FKMap map;
  map.f_grid_hz.resize(n_f);
  map.nu_grid_1pm.resize(n_nu);
  if (!is.read(reinterpret_cast<char*>(map.f_grid_hz.data()),
               static_cast<std::streamsize>(n_f * sizeof(double))) ||
      !is.read(reinterpret_cast<char*>(map.nu_grid_1pm.data()),
               static_cast<std::streamsize>(n_nu * sizeof(double)))) {
    throw std::runtime_error("unexpected end of file reading spectrum grids");
  }
  map.F.resize(static_cast<Eigen::Index>(n_f), static_cast<Eigen::Index>(n_nu));
  for (Eigen::Index i = 0; i < map.F.rows(); ++i) {
    for (Eigen::Index j = 0; j < map.F.cols(); ++j) {
      const double re = read_pod<double>(is, "spectrum value");
      const double im = read_pod<double>(is, "spectrum value");
      map.F(i, j) = {re, im};
    }
  }
  return map;
}

void save_peaks_csv(std::ostream& os, const PeakSet& peaks) {
  os << "f_hz,nu_1pm,mag,prom\n";
  for (const auto& p : peaks.peaks) {
    os << format_double(p.f_hz) << ',' << format_double(p.nu_1pm) << ','
       << format_double(p.magnitude) << ',' << format_double(p.prominence) << '\n';
  }
}

PeakSet load_peaks_csv(std::istream& is) {
  PeakSet out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line) || line.rfind("f_hz,nu_1pm,mag,prom", 0) != 0) {
    throw std::runtime_error("peak file missing 'f_hz,nu_1pm,mag,prom' header");
  }
  ++line_no;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    Peak p;
    double* slots[4] = {&p.f_hz, &p.nu_1pm, &p.magnitude, &p.prominence};
    std::size_t field = 0, pos = 0;
    while (field < 4) {
      const auto comma = line.find(',', pos);
      const std::string tok = line.substr(pos, comma == std::string::npos ? comma : comma - pos);
      try {
        *slots[field] = std::stod(tok);
      } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ", column " +
                                 std::to_string(field + 1) + ": cannot parse '" + tok + "'");
      }
      ++field;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (field != 4) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 4 columns, got " +
                               std::to_string(field));
    }
    out.peaks.push_back(p);
  }
  return out;
}

}  // namespace lamwave
