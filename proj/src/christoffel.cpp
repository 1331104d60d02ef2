#include "lamwave/christoffel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lamwave {

namespace {

// Voigt index for the tensor pair (i, j), zero-based.
constexpr int kVoigt[3][3] = {{0, 5, 4}, {5, 1, 3}, {4, 3, 2}};

struct PartialWave {
  Complex alpha;
  Eigen::Vector3cd p;
};

// Fixes the arbitrary eigenvector phase: largest component real positive.
void fix_phase(Eigen::Vector3cd& p) {
  int imax = 0;
  double best = -1;
  for (int i = 0; i < 3; ++i)
    if (std::abs(p[i]) > best) { best = std::abs(p[i]); imax = i; }
  Complex c = p[imax];
  if (std::abs(c) > 0) p *= std::conj(c) / std::abs(c);
  p.normalize();
}

}  // namespace

ChristoffelBlocks christoffel_blocks(const Matrix6d& c_pa) {
  auto C = [&](int i, int j, int k, int l) {
    return c_pa(kVoigt[i][j], kVoigt[k][l]);
  };
  ChristoffelBlocks b;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      b.Q(i, k) = C(i, 0, k, 0);
      b.R(i, k) = C(i, 0, k, 2);
      b.T(i, k) = C(i, 2, k, 2);
    }
  return b;
}

std::array<double, 3> grazing_speeds(const Matrix6d& c_pa, double rho_kgpm3) {
  ChristoffelBlocks b = christoffel_blocks(c_pa);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(
      0.5 * (b.Q + b.Q.transpose()));
  std::array<double, 3> v;
  for (int i = 0; i < 3; ++i)
    v[i] = std::sqrt(std::max(0.0, es.eigenvalues()[i]) / rho_kgpm3);
  std::sort(v.begin(), v.end());
  return v;
}

Eigen::Vector3cd stress_factor(const Matrix6d& c_pa,
                               const Eigen::Vector3cd& n,
                               const Eigen::Vector3cd& p) {
  auto C = [&](int i, int j, int k, int l) {
    return c_pa(kVoigt[i][j], kVoigt[k][l]);
  };
  Eigen::Vector3cd d = Eigen::Vector3cd::Zero();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        d[i] += C(i, 2, k, l) * n[l] * p[k];
  return d;
}

LayerSolution solve_layer(const Matrix6d& c_pa, double rho_kgpm3,
                          double f_hz, double k_radpm, double h_m) {
  auto fail = [&](const char* what) {
    std::ostringstream os;
    os << what << " at f=" << f_hz << " Hz, k=" << k_radpm << " rad/m";
    throw std::runtime_error(os.str());
  };

  if (!(f_hz > 0) || !(k_radpm > 0) || !(h_m > 0) || !(rho_kgpm3 > 0))
    fail("solve_layer requires positive f, k, h, rho");

  const double omega = 2 * std::numbers::pi * f_hz;
  const double cp = omega / k_radpm;

  ChristoffelBlocks b = christoffel_blocks(c_pa);
  const Eigen::Matrix3d A0 =
      b.Q - rho_kgpm3 * cp * cp * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d A1 = b.R + b.R.transpose();
  const Eigen::Matrix3d Tinv = b.T.inverse();

  Eigen::Matrix<double, 6, 6> comp = Eigen::Matrix<double, 6, 6>::Zero();
  comp.topRightCorner<3, 3>().setIdentity();
  comp.bottomLeftCorner<3, 3>() = -Tinv * A0;
  comp.bottomRightCorner<3, 3>() = -Tinv * A1;

  Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(comp);
  if (es.info() != Eigen::Success) fail("companion eigensolver failed");

  std::array<PartialWave, 6> waves;
  for (int j = 0; j < 6; ++j) {
    waves[j].alpha = es.eigenvalues()[j];
    waves[j].p = es.eigenvectors().col(j).head<3>();
    fix_phase(waves[j].p);
  }

  // Pair each alpha with its (approximate) negation, then put the decaying
  // or forward member of each pair first.
  const double mag_scale =
      1 + std::abs(std::max_element(waves.begin(), waves.end(),
                                    [](auto& a, auto& b) {
                                      return std::abs(a.alpha) < std::abs(b.alpha);
                                    })->alpha);
  std::array<bool, 6> used{};
  std::array<std::pair<int, int>, 3> pairs;
  int np = 0;
  for (int i = 0; i < 6; ++i) {
    if (used[i]) continue;
    used[i] = true;
    int best = -1;
    double bestv = std::numeric_limits<double>::max();
    for (int j = i + 1; j < 6; ++j) {
      if (used[j]) continue;
      double v = std::abs(waves[i].alpha + waves[j].alpha);
      if (v < bestv) { bestv = v; best = j; }
    }
    if (best < 0) fail("alpha pairing failed");
    used[best] = true;
    pairs[np++] = {i, best};
  }

  auto is_plus = [&](const Complex& a) {
    if (std::imag(a) > 1e-9 * mag_scale) return true;
    if (std::imag(a) < -1e-9 * mag_scale) return false;
    return std::real(a) >= 0;
  };
  for (auto& pr : pairs) {
    const bool p1 = is_plus(waves[pr.first].alpha);
    const bool p2 = is_plus(waves[pr.second].alpha);
    if (p1 == p2) {
      // Both classified the same way (alpha pair straddling zero within
      // roundoff); order by descending Im, then descending Re.
      const Complex a = waves[pr.first].alpha, c = waves[pr.second].alpha;
      if (std::make_pair(std::imag(a), std::real(a)) <
          std::make_pair(std::imag(c), std::real(c)))
        std::swap(pr.first, pr.second);
    } else if (!p1) {
      std::swap(pr.first, pr.second);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [&](auto& x, auto& y) {
    const Complex a = waves[x.first].alpha, c = waves[y.first].alpha;
    return std::make_tuple(std::abs(a), std::real(a), std::imag(a)) <
           std::make_tuple(std::abs(c), std::real(c), std::imag(c));
  });

  LayerSolution sol;
  sol.f_hz = f_hz;
  sol.k_radpm = k_radpm;
  sol.h_m = h_m;

  // Degenerate + eigenvalues (double shear roots in isotropic layers): the
  // eigensolver's basis inside the subspace is arbitrary, so rebuild it by
  // Gram-Schmidt of a fixed reference frame (e2 first, favouring the pure
  // shear-horizontal vector) and mirror to the - partner via u3 sign flip.
  for (int g = 0; g < 3; ++g) {
    int g2 = (g + 1) % 3;
    if (g2 <= g) continue;
    const Complex a1 = waves[pairs[g].first].alpha;
    const Complex a2 = waves[pairs[g2].first].alpha;
    if (std::abs(a1 - a2) > 1e-10 * std::max(1.0, std::abs(a1))) continue;
    sol.degenerate = true;
    Eigen::Vector3cd u = waves[pairs[g].first].p;
    Eigen::Vector3cd v = waves[pairs[g2].first].p;
    v -= u.dot(v) / u.squaredNorm() * u;
    if (v.norm() <= 1e-6) continue;  // defective pair, keep solver output
    v.normalize();
    Eigen::Matrix<Complex, 3, 2> basis;
    basis.col(0) = u;
    basis.col(1) = v;
    const Eigen::Vector3cd refs[3] = {Eigen::Vector3cd(0, 1, 0),
                                      Eigen::Vector3cd(1, 0, 0),
                                      Eigen::Vector3cd(0, 0, 1)};
    Eigen::Vector3cd q1, q2;
    bool have1 = false;
    for (const auto& r : refs) {
      Eigen::Vector3cd proj = basis * (basis.adjoint() * r);
      if (!have1) {
        if (proj.norm() < 1e-8) continue;
        q1 = proj.normalized();
        have1 = true;
      } else {
        proj -= q1.dot(proj) / q1.squaredNorm() * q1;
        if (proj.norm() < 1e-8) continue;
        q2 = proj.normalized();
        break;
      }
    }
    fix_phase(q1);
    fix_phase(q2);
    waves[pairs[g].first].p = q1;
    waves[pairs[g2].first].p = q2;
    const Eigen::Vector3cd mirror(1, 1, -1);
    waves[pairs[g].second].p = q1.cwiseProduct(mirror);
    waves[pairs[g2].second].p = q2.cwiseProduct(mirror);
  }

  const double block_scale = b.Q.norm() + rho_kgpm3 * cp * cp;
  for (int n = 0; n < 3; ++n) {
    for (int side = 0; side < 2; ++side) {
      const int col = 2 * n + side;
      const int w = side == 0 ? pairs[n].first : pairs[n].second;
      const Complex a = waves[w].alpha;
      const Eigen::Vector3cd& p = waves[w].p;

      Eigen::Vector3cd resid =
          (A0.cast<Complex>() + a * A1.cast<Complex>() +
           a * a * b.T.cast<Complex>()) * p;
      const double scale =
          block_scale + std::abs(a) * A1.norm() + std::norm(a) * b.T.norm();
      if (!(resid.norm() <= 1e-8 * scale))
        fail("partial-wave residual exceeds tolerance");

      const Eigen::Vector3cd n_vec(1.0, 0.0, a);
      const Eigen::Vector3cd d = stress_factor(c_pa, n_vec, p);

      sol.alpha[col] = a;
      sol.p.col(col) = p;
      sol.d.col(col) = d;
      sol.G.block<3, 1>(0, col) = p;
      sol.G.block<3, 1>(3, col) = d;
      sol.phase_h[col] = std::exp(Complex(0, 1) * (k_radpm * a * h_m));
    }
  }
  return sol;
}

}  // namespace lamwave
