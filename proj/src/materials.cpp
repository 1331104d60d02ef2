#include "lamwave/materials.hpp"

#include <cmath>
#include <stdexcept>

namespace lamwave {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const char* msg) {
  if (!ok) throw std::domain_error(msg);
}

double rel_diff(double a, double b) {
  double scale = std::max({std::abs(a), std::abs(b), 1e-30});
  return std::abs(a - b) / scale;
}

// Bond transformation matrix for stresses, sigma'_p = M_pq sigma_q, built
// from the vector rotation x' = a x. Voigt pairs: 1=(11) 2=(22) 3=(33)
// 4=(23) 5=(13) 6=(12).
Matrix6d bond_matrix(const Eigen::Matrix3d& a) {
  constexpr int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  Matrix6d m;
  for (int p = 0; p < 6; ++p) {
    const int i = pairs[p][0], j = pairs[p][1];
    for (int q = 0; q < 6; ++q) {
      const int k = pairs[q][0], l = pairs[q][1];
      m(p, q) = (k == l) ? a(i, k) * a(j, l)
                         : a(i, k) * a(j, l) + a(i, l) * a(j, k);
    }
  }
  return m;
}

}  // namespace

const char* to_string(SymmetryClass s) {
  switch (s) {
    case SymmetryClass::isotropic: return "isotropic";
    case SymmetryClass::transversely_isotropic: return "transversely_isotropic";
    case SymmetryClass::orthotropic: return "orthotropic";
  }
  return "unknown";
}

void ElasticityTensor::validate() const {
  require((c - c.transpose()).cwiseAbs().maxCoeff() <=
              1e-9 * c.cwiseAbs().maxCoeff(),
          "stiffness matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(0.5 * (c + c.transpose()));
  require(es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0,
          "stiffness matrix must be positive definite");
  if (symmetry == SymmetryClass::isotropic ||
      symmetry == SymmetryClass::transversely_isotropic) {
    require(rel_diff(c(1, 1), c(2, 2)) <= 1e-9, "c22 == c33 required");
    require(rel_diff(c(4, 4), c(5, 5)) <= 1e-9, "c55 == c66 required");
    require(rel_diff(c(3, 3), 0.5 * (c(1, 1) - c(1, 2))) <= 1e-9,
            "c44 == (c22 - c23)/2 required");
  }
  if (symmetry == SymmetryClass::isotropic) {
    require(rel_diff(c(0, 0), c(1, 1)) <= 1e-9 &&
                rel_diff(c(0, 1), c(1, 2)) <= 1e-9 &&
                rel_diff(c(3, 3), c(4, 4)) <= 1e-9,
            "isotropic stiffness must have one (c11, c12, c44) triple");
  }
}

ElasticityTensor stiffness_from_isotropic(double E_gpa, double nu) {
  if (!(E_gpa > 0) || !(nu > -1 && nu < 0.5))
    throw std::domain_error("isotropic constants out of range");
  const double f = E_gpa / ((1 + nu) * (1 - 2 * nu));
  const double c11 = f * (1 - nu);
  const double c12 = f * nu;
  const double c44 = E_gpa / (2 * (1 + nu));
  ElasticityTensor t;
  t.symmetry = SymmetryClass::isotropic;
  t.c.topLeftCorner<3, 3>().setConstant(c12);
  t.c.diagonal() << c11, c11, c11, c44, c44, c44;
  t.validate();
  return t;
}

ElasticityTensor stiffness_from_engineering(const EngineeringConstants& e) {
  for (double v : {e.E1_gpa, e.E2_gpa, e.E3_gpa, e.G12_gpa, e.G13_gpa, e.G23_gpa})
    if (!(v > 0)) throw std::domain_error("moduli must be positive");
  Matrix6d s = Matrix6d::Zero();
  s(0, 0) = 1 / e.E1_gpa;
  s(1, 1) = 1 / e.E2_gpa;
  s(2, 2) = 1 / e.E3_gpa;
  s(0, 1) = s(1, 0) = -e.nu12 / e.E1_gpa;
  s(0, 2) = s(2, 0) = -e.nu13 / e.E1_gpa;
  s(1, 2) = s(2, 1) = -e.nu23 / e.E2_gpa;
  s(3, 3) = 1 / e.G23_gpa;
  s(4, 4) = 1 / e.G13_gpa;
  s(5, 5) = 1 / e.G12_gpa;

  Eigen::FullPivLU<Matrix6d> lu(s);
  if (!lu.isInvertible())
    throw std::domain_error("compliance matrix is singular");
  ElasticityTensor t;
  t.c = lu.inverse();
  t.c = 0.5 * (t.c + t.c.transpose().eval());

  const bool tt = rel_diff(e.E2_gpa, e.E3_gpa) <= 1e-9 &&
                  rel_diff(e.nu12, e.nu13) <= 1e-9 &&
                  rel_diff(e.G12_gpa, e.G13_gpa) <= 1e-9 &&
                  rel_diff(e.G23_gpa, e.E2_gpa / (2 * (1 + e.nu23))) <= 1e-9;
  const bool iso = tt && rel_diff(e.E1_gpa, e.E2_gpa) <= 1e-9 &&
                   rel_diff(e.nu12, e.nu23) <= 1e-9 &&
                   rel_diff(e.G12_gpa, e.G23_gpa) <= 1e-9;
  t.symmetry = iso ? SymmetryClass::isotropic
               : tt ? SymmetryClass::transversely_isotropic
                    : SymmetryClass::orthotropic;
  t.validate();
  return t;
}

ElasticityTensor rotate_in_plane(const ElasticityTensor& t, double theta_deg) {
  const double th = theta_deg * kPi / 180.0;
  Eigen::Matrix3d a;
  a << std::cos(th), -std::sin(th), 0,
       std::sin(th),  std::cos(th), 0,
       0, 0, 1;
  const Matrix6d m = bond_matrix(a);
  ElasticityTensor out;
  out.c = m * t.c * m.transpose();
  out.c = 0.5 * (out.c + out.c.transpose().eval());
  // An in-plane rotation generally breaks the tagged class; keep the tag only
  // for isotropic inputs, which rotation leaves untouched.
  out.symmetry = t.symmetry == SymmetryClass::isotropic
                     ? SymmetryClass::isotropic
                     : SymmetryClass::orthotropic;
  return out;
}

double Laminate::total_thickness_m() const {
  double d = 0;
  for (const auto& l : layers) d += l.thickness_m;
  return d;
}

double Laminate::metal_volume_fraction() const {
  double metal = 0, total = 0;
  for (const auto& l : layers) {
    total += l.thickness_m;
    if (l.material.metal) metal += l.thickness_m;
  }
  return total > 0 ? metal / total : 0;
}

bool Laminate::is_symmetric(double rel_tol) const {
  const size_t n = layers.size();
  for (size_t i = 0; i < n / 2; ++i) {
    const Layer& a = layers[i];
    const Layer& b = layers[n - 1 - i];
    if (rel_diff(a.thickness_m, b.thickness_m) > rel_tol) return false;
    if (rel_diff(a.material.rho_kgpm3, b.material.rho_kgpm3) > rel_tol)
      return false;
    if ((a.material.tensor.c - b.material.tensor.c).cwiseAbs().maxCoeff() >
        rel_tol * a.material.tensor.c.cwiseAbs().maxCoeff())
      return false;
  }
  return true;
}

void Laminate::validate() const {
  if (layers.empty())
    throw std::invalid_argument("laminate needs at least one layer");
  for (const auto& l : layers) {
    if (!(l.thickness_m > 0))
      throw std::invalid_argument("layer thickness must be positive");
    if (!(l.material.rho_kgpm3 > 0))
      throw std::invalid_argument("layer density must be positive");
    l.material.tensor.validate();
  }
}

MaterialRecord default_steel_material() {
  MaterialRecord m;
  m.name = "steel_1.4310";
  m.tensor = stiffness_from_isotropic(191.0, 0.3);
  m.rho_kgpm3 = 7900;
  m.t_ply_mm = 0.12;
  m.metal = true;
  m.source = "tensile pretests; density from handbook";
  return m;
}

MaterialRecord default_cfrp_material() {
  EngineeringConstants e;
  e.E1_gpa = 122;
  e.E2_gpa = e.E3_gpa = 9.9;
  e.G12_gpa = e.G13_gpa = 5.2;
  e.G23_gpa = 3.4;
  e.nu12 = e.nu13 = 0.27;
  e.nu23 = 0.47;
  MaterialRecord m;
  m.name = "cfrp_ud_prepreg";
  m.tensor = stiffness_from_engineering(e);
  m.rho_kgpm3 = 1580;
  m.t_ply_mm = 0.13;
  m.metal = false;
  m.source = "supplier ultrasonic characterization; density from datasheet";
  return m;
}

Laminate build_fml_layup(const FmlLayupOptions& opts) {
  const MaterialRecord metal =
      opts.metal ? *opts.metal : default_steel_material();
  const MaterialRecord comp =
      opts.composite ? *opts.composite : default_cfrp_material();

  auto make_layer = [&](const MaterialRecord& m, double ply_angle_deg) {
    Layer l;
    l.theta_deg = ply_angle_deg - opts.propagation_angle_deg;
    l.material = m;
    l.material.tensor = rotate_in_plane(m.tensor, l.theta_deg);
    l.thickness_m = m.t_ply_mm * 1e-3;
    return l;
  };

  // Half stack, outer surface first: metal, four 0-degree plies, metal, two
  // 0-degree plies; mirrored about the midplane.
  std::vector<char> half = {'m', 'c', 'c', 'c', 'c', 'm', 'c', 'c'};
  Laminate lam;
  for (char ch : half)
    lam.layers.push_back(make_layer(ch == 'm' ? metal : comp, 0));
  for (auto it = half.rbegin(); it != half.rend(); ++it)
    lam.layers.push_back(make_layer(*it == 'm' ? metal : comp, 0));
  lam.validate();
  return lam;
}

}  // namespace lamwave
