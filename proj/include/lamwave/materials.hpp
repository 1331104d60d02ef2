#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace lamwave {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

enum class SymmetryClass { isotropic, transversely_isotropic, orthotropic };

const char* to_string(SymmetryClass s);

// Stiffness in Voigt notation, GPa. Entries follow the 11,22,33,23,13,12 order.
struct ElasticityTensor {
  Matrix6d c = Matrix6d::Zero();
  SymmetryClass symmetry = SymmetryClass::orthotropic;

  // Throws std::domain_error if the matrix is asymmetric, not positive
  // definite, or violates the identities of its tagged symmetry class.
  void validate() const;

  Matrix6d stiffness_pa() const { return c * 1e9; }
};

struct EngineeringConstants {
  double E1_gpa = 0, E2_gpa = 0, E3_gpa = 0;
  double G12_gpa = 0, G13_gpa = 0, G23_gpa = 0;
  double nu12 = 0, nu13 = 0, nu23 = 0;
};

struct MaterialRecord {
  std::string name;
  ElasticityTensor tensor;
  double rho_kgpm3 = 0;
  double t_ply_mm = 0;
  bool metal = false;
  std::string source;  // free-form provenance note ("datasheet", "handbook", ...)
};

// c11 = E(1-nu)/((1+nu)(1-2nu)), c12 = E*nu/((1+nu)(1-2nu)), c44 = E/(2(1+nu)).
ElasticityTensor stiffness_from_isotropic(double E_gpa, double nu);

// Inverts the orthotropic compliance matrix built from nine engineering
// constants. nu12 is the major Poisson ratio (strain in 2 from stress in 1,
// so S21 = -nu12/E1). Throws std::domain_error if compliance is singular.
ElasticityTensor stiffness_from_engineering(const EngineeringConstants& e);

// Rotates the stiffness about the thickness axis x3 by theta (degrees,
// positive from x1 toward x2) using the 6x6 Bond transformation.
ElasticityTensor rotate_in_plane(const ElasticityTensor& t, double theta_deg);

struct Layer {
  MaterialRecord material;  // tensor already rotated into the laminate frame
  double theta_deg = 0;
  double thickness_m = 0;
};

struct Laminate {
  std::vector<Layer> layers;  // listed bottom surface to top surface

  double total_thickness_m() const;
  double metal_volume_fraction() const;
  bool is_symmetric(double rel_tol = 1e-9) const;
  void validate() const;  // throws std::invalid_argument on bad layer data
};

struct FmlLayupOptions {
  std::optional<MaterialRecord> metal;      // default: 1.4310 spring steel
  std::optional<MaterialRecord> composite;  // default: unidirectional CFRP prepreg
  double propagation_angle_deg = 0;         // in-plane angle; ply angles are
                                            // taken relative to it
};

// Default material records used by the built-in layup.
MaterialRecord default_steel_material();
MaterialRecord default_cfrp_material();

// Builds the 16-layer hybrid stack [metal/0_4/metal/0_2]_S:
// 4 metal layers of 0.12 mm and 12 composite plies of 0.13 mm, 2.04 mm total.
Laminate build_fml_layup(const FmlLayupOptions& opts = {});

}  // namespace lamwave
