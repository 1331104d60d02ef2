#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "lamwave/materials.hpp"

namespace lamwave {

using Complex = std::complex<double>;
using Matrix6cd = Eigen::Matrix<Complex, 6, 6>;
using Matrix36cd = Eigen::Matrix<Complex, 3, 6>;

// Christoffel blocks for propagation direction (1, 0, alpha):
// Q_ik = C_i1k1, R_ik = C_i1k3, T_ik = C_i3k3 (SI, Pa).
struct ChristoffelBlocks {
  Eigen::Matrix3d Q, R, T;
};

ChristoffelBlocks christoffel_blocks(const Matrix6d& c_pa);

// Bulk phase velocities of plane waves travelling along x1 (alpha = 0),
// i.e. sqrt of the eigenvalues of Q/rho. The partial-wave basis degenerates
// at exactly these phase velocities.
std::array<double, 3> grazing_speeds(const Matrix6d& c_pa, double rho_kgpm3);

// Stress factor d_i = C_i3kl n_l p_k, the sigma_i3 amplitude divided by i*k.
Eigen::Vector3cd stress_factor(const Matrix6d& c_pa,
                               const Eigen::Vector3cd& n,
                               const Eigen::Vector3cd& p);

// One layer's six partial waves at (f, k). Columns are ordered in +/- pairs
// (1+, 1-, 2+, 2-, 3+, 3-); pairs sorted by |alpha| of the + member.
// "+" waves decay or propagate upward: Im(alpha) > 0, or real alpha >= 0.
struct LayerSolution {
  double f_hz = 0, k_radpm = 0, h_m = 0;
  std::array<Complex, 6> alpha;
  Matrix36cd p;       // unit polarizations
  Matrix36cd d;       // stress factors
  Matrix6cd G;        // rows u1,u2,u3 then d1,d2,d3
  std::array<Complex, 6> phase_h;  // e^{i k alpha h}
  bool degenerate = false;  // some alpha pair coincided within tolerance
};

// Solves the quadratic eigenproblem
//   [Q - rho c_p^2 I + alpha (R + R^T) + alpha^2 T] p = 0,  c_p = 2 pi f / k,
// via companion linearization. Throws std::runtime_error (with f and k in the
// message) if the eigensolver fails or a residual exceeds 1e-8 relative.
LayerSolution solve_layer(const Matrix6d& c_pa, double rho_kgpm3,
                          double f_hz, double k_radpm, double h_m);

}  // namespace lamwave
