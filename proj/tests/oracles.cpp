#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

double bisect(double lo, double hi, double flo, const auto& fn) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = fn(mid);
    if ((flo < 0.0) == (fmid < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-13 * hi) break;
  }
  return 0.5 * (lo + hi);
}

// Scans [lo, hi] for sign changes of fn and returns the bisected roots.
std::vector<double> scan_roots(double lo, double hi, int n, const auto& fn) {
  std::vector<double> roots;
  double prev_x = lo, prev_f = fn(lo);
  for (int i = 1; i <= n; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / n);
    const double f = fn(x);
    if (prev_f == 0.0) {
      roots.push_back(prev_x);
    } else if ((prev_f < 0.0) != (f < 0.0)) {
      roots.push_back(bisect(prev_x, x, prev_f, fn));
    }
    prev_x = x;
    prev_f = f;
  }
  return roots;
}

}  // namespace

IsoPlate iso_bulk_speeds(double E_gpa, double nu, double rho_kgpm3) {
  const double E = E_gpa * 1e9;
  const double lame_mu = E / (2.0 * (1.0 + nu));
  const double lame_lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  return {std::sqrt((lame_lambda + 2.0 * lame_mu) / rho_kgpm3), std::sqrt(lame_mu / rho_kgpm3)};
}

double lamb_sym(double f_hz, double cp_mps, const IsoPlate& plate, double d_m) {
  const double w = 2.0 * kPi * f_hz;
  const double k = w / cp_mps;
  const double h = 0.5 * d_m;
  const double p2 = w * w / (plate.cl_mps * plate.cl_mps) - k * k;
  const double q2 = w * w / (plate.ct_mps * plate.ct_mps) - k * k;
  if (q2 >= 0.0 && p2 >= 0.0) {
    const double p = std::sqrt(p2), q = std::sqrt(q2);
    const double a = q2 - k * k;
    return a * a * std::sin(q * h) * std::cos(p * h) +
           4.0 * k * k * p * q * std::cos(q * h) * std::sin(p * h);
  }
  if (q2 >= 0.0) {
    // Normalized by cosh(ph*h) > 0 so large arguments cannot overflow.
    const double ph = std::sqrt(-p2), q = std::sqrt(q2);
    const double a = q2 - k * k;
    return a * a * std::sin(q * h) -
           4.0 * k * k * ph * q * std::cos(q * h) * std::tanh(ph * h);
  }
  // Normalized by cosh(qh*h) * cosh(ph*h) > 0.
  const double ph = std::sqrt(-p2), qh = std::sqrt(-q2);
  const double a = q2 - k * k;  // = -(qh^2 + k^2)
  return a * a * std::tanh(qh * h) - 4.0 * k * k * ph * qh * std::tanh(ph * h);
}

double lamb_anti(double f_hz, double cp_mps, const IsoPlate& plate, double d_m) {
  const double w = 2.0 * kPi * f_hz;
  const double k = w / cp_mps;
  const double h = 0.5 * d_m;
  const double p2 = w * w / (plate.cl_mps * plate.cl_mps) - k * k;
  const double q2 = w * w / (plate.ct_mps * plate.ct_mps) - k * k;
  if (q2 >= 0.0 && p2 >= 0.0) {
    const double p = std::sqrt(p2), q = std::sqrt(q2);
    const double a = q2 - k * k;
    return 4.0 * k * k * p * q * std::sin(q * h) * std::cos(p * h) +
           a * a * std::cos(q * h) * std::sin(p * h);
  }
  if (q2 >= 0.0) {
    // Normalized by cosh(ph*h) > 0 so large arguments cannot overflow.
    const double ph = std::sqrt(-p2), q = std::sqrt(q2);
    const double a = q2 - k * k;
    return 4.0 * k * k * ph * q * std::sin(q * h) +
           a * a * std::cos(q * h) * std::tanh(ph * h);
  }
  // Normalized by cosh(qh*h) * cosh(ph*h) > 0.
  const double ph = std::sqrt(-p2), qh = std::sqrt(-q2);
  const double a = q2 - k * k;
  return a * a * std::tanh(ph * h) - 4.0 * k * k * ph * qh * std::tanh(qh * h);
}

double a0_cp(double f_hz, const IsoPlate& plate, double d_m) {
  const auto fn = [&](double cp) { return lamb_anti(f_hz, cp, plate, d_m); };
  const auto roots = scan_roots(1.0, plate.ct_mps * (1.0 - 1e-9), 4000, fn);
  if (roots.empty()) throw std::runtime_error("A0 oracle: no root below c_T");
  return roots.front();
}

double s0_cp(double f_hz, const IsoPlate& plate, double d_m) {
  const auto fn = [&](double cp) { return lamb_sym(f_hz, cp, plate, d_m); };
  const auto roots =
      scan_roots(plate.ct_mps * (1.0 + 1e-9), plate.cl_mps * (1.0 - 1e-9), 4000, fn);
  if (roots.empty()) throw std::runtime_error("S0 oracle: no root between c_T and c_L");
  return roots.back();
}

double rayleigh_speed(const IsoPlate& plate) {
  const double eta = (plate.ct_mps / plate.cl_mps) * (plate.ct_mps / plate.cl_mps);
  const auto poly = [&](double xi2) {
    return xi2 * xi2 * xi2 - 8.0 * xi2 * xi2 + 8.0 * (3.0 - 2.0 * eta) * xi2 -
           16.0 * (1.0 - eta);
  };
  double lo = 1e-6, hi = 1.0 - 1e-12;
  double flo = poly(lo);
  if ((flo < 0.0) == (poly(hi) < 0.0)) throw std::runtime_error("Rayleigh oracle: no bracket");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((poly(mid) < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = poly(mid);
    } else {
      hi = mid;
    }
  }
  return plate.ct_mps * std::sqrt(0.5 * (lo + hi));
}

double sh_cp(double f_hz, int n, const IsoPlate& plate, double d_m) {
  if (n == 0) return plate.ct_mps;
  const double fd = f_hz * d_m;
  const double cutoff = 0.5 * n * plate.ct_mps;
  if (fd <= cutoff) return std::nan("");
  const double r = cutoff / fd;
  return plate.ct_mps / std::sqrt(1.0 - r * r);
}

Eigen::Matrix<double, 6, 6> rotate_stiffness_brute(const Eigen::Matrix<double, 6, 6>& c,
                                                   double theta_deg) {
  static const int voigt[3][3] = {{0, 5, 4}, {5, 1, 3}, {4, 3, 2}};
  double full[3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) full[i][j][k][l] = c(voigt[i][j], voigt[k][l]);

  const double th = theta_deg * kPi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const double a[3][3] = {{cs, -sn, 0.0}, {sn, cs, 0.0}, {0.0, 0.0, 1.0}};

  double rot[3][3][3][3] = {};
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q)
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) {
          double acc = 0.0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
              for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                  acc += a[p][i] * a[q][j] * a[r][k] * a[s][l] * full[i][j][k][l];
          rot[p][q][r][s] = acc;
        }

  static const int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  Eigen::Matrix<double, 6, 6> out;
  for (int I = 0; I < 6; ++I)
    for (int J = 0; J < 6; ++J)
      out(I, J) = rot[pairs[I][0]][pairs[I][1]][pairs[J][0]][pairs[J][1]];
  return out;
}

Eigen::Matrix<double, 6, 6> invert6(const Eigen::Matrix<double, 6, 6>& m) {
  double a[6][12];
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      a[i][j] = m(i, j);
      a[i][j + 6] = i == j ? 1.0 : 0.0;
    }
  }
  for (int col = 0; col < 6; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 6; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) throw std::runtime_error("invert6: singular matrix");
    if (pivot != col) {
      for (int j = 0; j < 12; ++j) std::swap(a[pivot][j], a[col][j]);
    }
    const double d = a[col][col];
    for (int j = 0; j < 12; ++j) a[col][j] /= d;
    for (int r = 0; r < 6; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (int j = 0; j < 12; ++j) a[r][j] -= f * a[col][j];
    }
  }
  Eigen::Matrix<double, 6, 6> out;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) out(i, j) = a[i][j + 6];
  return out;
}

std::array<double, 3> iso_alpha_sq(double cp_mps, const IsoPlate& plate) {
  const double al = cp_mps * cp_mps / (plate.cl_mps * plate.cl_mps) - 1.0;
  const double at = cp_mps * cp_mps / (plate.ct_mps * plate.ct_mps) - 1.0;
  return {al, at, at};
}

Eigen::MatrixXcd naive_nudft2(const std::vector<double>& t_s, const std::vector<double>& x_m,
                              const Eigen::MatrixXd& v, const std::vector<double>& f_hz,
                              const std::vector<double>& nu_1pm) {
  Eigen::MatrixXcd out(f_hz.size(), nu_1pm.size());
  for (std::size_t fi = 0; fi < f_hz.size(); ++fi) {
    for (std::size_t ni = 0; ni < nu_1pm.size(); ++ni) {
      std::complex<double> acc = 0.0;
      for (std::size_t ti = 0; ti < t_s.size(); ++ti) {
        for (std::size_t xi = 0; xi < x_m.size(); ++xi) {
          const double phase =
              2.0 * kPi * (f_hz[fi] * t_s[ti] - nu_1pm[ni] * x_m[xi]);
          acc += v(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(xi)) *
                 std::complex<double>(std::cos(phase), std::sin(phase));
        }
      }
      out(static_cast<Eigen::Index>(fi), static_cast<Eigen::Index>(ni)) = acc;
    }
  }
  return out;
}

}  // namespace oracle
