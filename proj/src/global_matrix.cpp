#include "lamwave/global_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lamwave/interp.hpp"
#include "lamwave/parallel.hpp"

namespace lamwave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_angle(double a) { return std::remainder(a, 2 * std::numbers::pi); }

struct LayerSpec {
  Matrix6d c_pa;
  double rho = 0, h = 0;
  int sol_id = 0;  // index of the unique (stiffness, rho, h) combination
};

// Workspace evaluating the interface determinant for one laminate. Not
// thread-safe; cheap to construct per worker.
class Evaluator {
 public:
  explicit Evaluator(const Laminate& lam) {
    lam.validate();
    n_ = static_cast<int>(lam.layers.size());
    layers_.reserve(n_);
    z_base_.resize(n_ + 1, 0.0);
    for (int i = 0; i < n_; ++i) {
      const Layer& l = lam.layers[i];
      LayerSpec s;
      s.c_pa = l.material.tensor.stiffness_pa();
      s.rho = l.material.rho_kgpm3;
      s.h = l.thickness_m;
      s.sol_id = -1;
      for (size_t u = 0; u < unique_.size(); ++u) {
        const LayerSpec& o = layers_[unique_[u]];
        if (o.rho == s.rho && o.h == s.h &&
            std::memcmp(o.c_pa.data(), s.c_pa.data(), sizeof(double) * 36) == 0) {
          s.sol_id = static_cast<int>(u);
          break;
        }
      }
      if (s.sol_id < 0) {
        s.sol_id = static_cast<int>(unique_.size());
        unique_.push_back(i);
      }
      layers_.push_back(s);
      z_base_[i + 1] = z_base_[i] + s.h;

      for (double g : grazing_speeds(s.c_pa, s.rho)) {
        bool dup = false;
        for (double e : grazing_)
          if (std::abs(e - g) <= 1e-9 * g) dup = true;
        if (!dup) grazing_.push_back(g);
      }
    }
    sols_.resize(unique_.size());
    face_.resize(unique_.size());
    M_.resize(6 * n_, 6 * n_);
  }

  int size() const { return 6 * n_; }
  double total_thickness() const { return z_base_.back(); }
  const std::vector<double>& grazing() const { return grazing_; }
  const Eigen::MatrixXcd& matrix() const { return M_; }

  void assemble(double f_hz, double k) {
    if (f_hz != sol_f_ || k != sol_k_) {
      for (size_t u = 0; u < unique_.size(); ++u) {
        const LayerSpec& s = layers_[unique_[u]];
        sols_[u] = solve_layer(s.c_pa, s.rho, f_hz, k, s.h);
        make_face_blocks(sols_[u], face_[u]);
      }
      sol_f_ = f_hz;
      sol_k_ = k;
    }
    M_.setZero();
    auto col0 = [&](int layer) { return 6 * (n_ - 1 - layer); };

    M_.block(0, col0(n_ - 1), 3, 6) =
        face_[layers_[n_ - 1].sol_id].top.bottomRows<3>();

    int row = 3;
    for (int upper = n_ - 1; upper >= 1; --upper, row += 6) {
      const int lower = upper - 1;
      M_.block(row, col0(upper), 6, 6) = face_[layers_[upper].sol_id].bot;
      M_.block(row, col0(lower), 6, 6) = -face_[layers_[lower].sol_id].top;
    }

    M_.block(row, col0(0), 3, 6) =
        face_[layers_[0].sol_id].bot.bottomRows<3>();
  }

  CharacteristicEvaluation eval(double f_hz, double k) {
    assemble(f_hz, k);
    CharacteristicEvaluation out;
    out.f_hz = f_hz;
    out.k_radpm = k;

    const int n = size();
    double log_scale = 0;
    for (int r = 0; r < n; ++r) {
      const double m = M_.row(r).cwiseAbs().maxCoeff();
      if (!(m > 0)) {
        out.log_abs_det = -kInf;
        return out;
      }
      M_.row(r) /= m;
      log_scale += std::log(m);
    }
    lu_.compute(M_);
    double log_det = log_scale;
    double phase = lu_.permutationP().determinant() < 0 ? std::numbers::pi : 0;
    double dmin = kInf, dmax = 0;
    for (int i = 0; i < n; ++i) {
      const Complex u = lu_.matrixLU()(i, i);
      const double a = std::abs(u);
      if (!(a > 0)) {
        out.log_abs_det = -kInf;
        return out;
      }
      log_det += std::log(a);
      phase += std::arg(u);
      dmin = std::min(dmin, a);
      dmax = std::max(dmax, a);
    }
    out.log_abs_det = log_det;
    out.phase = wrap_angle(phase);
    out.condition_hint = dmax > 0 ? dmin / dmax : 0;
    return out;
  }

  // Amplitude vector spanning the near-null space at a refined root, via
  // inverse iteration on the equilibrated matrix; returned in raw
  // partial-wave coordinates so field reconstruction can use single
  // exponentials per column.
  Eigen::VectorXcd null_vector(double f_hz, double k) {
    assemble(f_hz, k);
    const int n = size();
    for (int r = 0; r < n; ++r) {
      const double m = M_.row(r).cwiseAbs().maxCoeff();
      if (m > 0) M_.row(r) /= m;
    }
    Eigen::MatrixXcd saved = M_;
    lu_.compute(M_);
    Eigen::VectorXcd x = Eigen::VectorXcd::Constant(n, Complex(1.0, 0.0));
    x.normalize();
    for (int it = 0; it < 3; ++it) {
      x = lu_.solve(x);
      const double nrm = x.norm();
      if (!(nrm > 0) || !std::isfinite(nrm)) break;
      x /= nrm;
    }
    null_residual_ = (saved * x).norm();
    for (int layer = 0; layer < n_; ++layer) {
      const int c0 = 6 * (n_ - 1 - layer);
      x.segment<6>(c0) =
          (face_[layers_[layer].sol_id].to_raw * x.segment<6>(c0)).eval();
    }
    return x;
  }
  double null_residual() const { return null_residual_; }

  // Displacement at global height z for amplitudes A; valid for the (f, k)
  // of the preceding assemble/null_vector call.
  Eigen::Vector3cd displacement(double z, const Eigen::VectorXcd& A) const {
    int layer = n_ - 1;
    for (int i = 0; i < n_; ++i)
      if (z <= z_base_[i + 1] || i == n_ - 1) { layer = i; break; }
    const double zl = std::clamp(z - z_base_[layer], 0.0, layers_[layer].h);
    const LayerSolution& sol = sols_[layers_[layer].sol_id];
    const int c0 = 6 * (n_ - 1 - layer);
    Eigen::Vector3cd u = Eigen::Vector3cd::Zero();
    for (int c = 0; c < 6; ++c) {
      const Complex a = sol.alpha[c];
      const double ref = std::imag(a) >= 0 ? 0.0 : layers_[layer].h;
      const Complex ph = std::exp(Complex(0, 1) * (sol_k_ * a * (zl - ref)));
      u += A[c0 + c] * ph * sol.p.col(c);
    }
    return u;
  }

 private:
  // A layer's six columns evaluated at its two faces (phase-referenced),
  // plus the map from these orthogonalized pair columns back to raw
  // partial-wave amplitudes.
  struct FaceBlocks {
    Matrix6cd top, bot, to_raw;
  };

  // Near a grazing bulk speed partial-wave columns become linearly
  // dependent (the +/- members of a pair collapse onto each other), carving
  // a spurious determinant trench that can swallow true roots.
  // Orthogonalizing the six stacked face columns restores rank; column
  // operations never move a determinant root, they only rescale the
  // determinant smoothly.
  //
  // The column angles are measured with displacement and traction rows
  // balanced: tractions carry the stiffness scale and would otherwise
  // dominate, making every traction rank drop (a dispersion root) look like
  // column degeneracy. Balanced, the stacked block only loses rank when a
  // combination of partial waves has zero displacement AND traction on both
  // faces at once, which is the grazing artifact and never a plate mode.
  static void make_face_blocks(const LayerSolution& sol, FaceBlocks& f) {
    Eigen::Matrix<Complex, 12, 6> raw;
    for (int c = 0; c < 6; ++c) {
      Complex t, b;
      if (std::imag(sol.alpha[c]) >= 0) {
        t = sol.phase_h[c];
        b = 1.0;
      } else {
        t = 1.0;
        b = 1.0 / sol.phase_h[c];
      }
      raw.col(c).head<6>() = sol.G.col(c) * t;
      raw.col(c).tail<6>() = sol.G.col(c) * b;
    }
    double tscale = 0;
    for (int i : {3, 4, 5, 9, 10, 11})
      tscale = std::max(tscale, raw.row(i).cwiseAbs().maxCoeff());
    if (!(tscale > 0)) tscale = 1;
    Eigen::Matrix<Complex, 12, 6> w = raw;
    for (int i : {3, 4, 5, 9, 10, 11}) w.row(i) /= tscale;

    // Modified Gram-Schmidt on the balanced columns; every operation is
    // mirrored on the raw columns, so raw ends up as raw_orig * R^{-1}.
    Matrix6cd R = Matrix6cd::Zero();
    for (int c = 0; c < 6; ++c) {
      for (int j = 0; j < c; ++j) {
        const Complex r = w.col(j).dot(w.col(c));
        R(j, c) = r;
        w.col(c) -= r * w.col(j);
        raw.col(c) -= r * raw.col(j);
      }
      const double n = w.col(c).norm();
      const double d = n > 0 ? n : 1.0;
      R(c, c) = d;
      w.col(c) /= d;
      raw.col(c) /= d;
    }
    f.top = raw.topRows<6>();
    f.bot = raw.bottomRows<6>();
    f.to_raw = R.triangularView<Eigen::Upper>().solve(Matrix6cd::Identity());
  }

  int n_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<int> unique_;
  std::vector<double> z_base_;
  std::vector<double> grazing_;
  std::vector<LayerSolution> sols_;
  std::vector<FaceBlocks> face_;
  double sol_f_ = -1, sol_k_ = -1;
  Eigen::MatrixXcd M_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double null_residual_ = kInf;
};

struct ClassifiedRoot {
  double k = 0, cp = 0;
  double sym_score = 0;    // +1 symmetric, -1 antisymmetric
  Eigen::Vector3d pol = Eigen::Vector3d::Zero();
  bool sh = false;
  bool classified = false;
};

struct GoldenResult {
  double k = 0, value = 0;
};

template <class F>
GoldenResult golden_min(F&& fn, double a, double b, double rel_tol) {
  constexpr double invphi = 0.6180339887498948;
  constexpr double invphi2 = 1.0 - invphi;
  double x1 = a + invphi2 * (b - a), x2 = a + invphi * (b - a);
  double f1 = fn(x1), f2 = fn(x2);
  while (b - a > rel_tol * b) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = a + invphi2 * (b - a); f1 = fn(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + invphi * (b - a); f2 = fn(x2);
    }
  }
  return f1 < f2 ? GoldenResult{x1, f1} : GoldenResult{x2, f2};
}

void classify_root(Evaluator& ev, double f_hz, double k, ClassifiedRoot& r) {
  const Eigen::VectorXcd A = ev.null_vector(f_hz, k);
  if (!(ev.null_residual() < 1e-4)) return;  // ambiguous; keep unclassified
  const double D = ev.total_thickness();

  const Eigen::Vector3cd u_top = ev.displacement(D, A);
  const double tot = u_top.squaredNorm();
  if (tot > 0) {
    r.pol = u_top.cwiseAbs().array().square();
    r.pol /= r.pol.sum();
    r.sh = r.pol[1] > 0.5;
  }

  double r_sym = 0, r_anti = 0;
  for (double t : {0.05, 0.15, 0.25, 0.35, 0.45}) {
    const Eigen::Vector3cd up = ev.displacement(D * (0.5 + t), A);
    const Eigen::Vector3cd dn = ev.displacement(D * (0.5 - t), A);
    r_sym += std::norm(up[0] - dn[0]) + std::norm(up[1] - dn[1]) +
             std::norm(up[2] + dn[2]);
    r_anti += std::norm(up[0] + dn[0]) + std::norm(up[1] + dn[1]) +
              std::norm(up[2] - dn[2]);
  }
  const double denom = r_sym + r_anti;
  if (denom > 0) r.sym_score = (r_anti - r_sym) / denom;
  r.classified = true;
}

struct ScanCandidate {
  double k = 0, log_det = 0, drop = 0;
  bool accepted = false, bulk = false;
};

// Refines one bracketed minimum and applies the acceptance rules.
ScanCandidate process_bracket(Evaluator& ev, double f_hz, double ka,
                              double km, double kb, double flank_level,
                              const SweepOptions& opts) {
  (void)km;
  auto value = [&](double k) { return ev.eval(f_hz, k).log_abs_det; };
  GoldenResult g = golden_min(value, ka, kb, opts.k_rel_tol);

  ScanCandidate c;
  c.k = g.k;
  c.log_det = g.value;
  c.drop = flank_level - g.value;
  if (!(c.drop >= opts.min_log_drop)) return c;

  const double cp = 2 * std::numbers::pi * f_hz / g.k;
  for (double gsp : ev.grazing()) {
    if (std::abs(cp - gsp) <= opts.bulk_speed_rel_tol * gsp) {
      c.bulk = true;
      return c;
    }
  }
  const double dk = 3e-4 * g.k;
  const double ph_lo = ev.eval(f_hz, g.k - dk).phase;
  const double ph_hi = ev.eval(f_hz, g.k + dk).phase;
  if (std::abs(wrap_angle(ph_hi - ph_lo)) < opts.min_phase_rotation) return c;

  c.accepted = true;
  return c;
}

std::vector<ClassifiedRoot> find_roots(Evaluator& ev, double f_hz,
                                       const SweepOptions& opts) {
  const double w = 2 * std::numbers::pi * f_hz;
  const double k_lo = w / opts.cp_max_mps;
  const double k_hi = w / opts.cp_min_mps;
  const int S = std::max(16, opts.scan_points);
  const std::vector<double> ks = logspace(k_lo, k_hi, S);
  const double cell_rel = std::log(k_hi / k_lo) / (S - 1);

  std::vector<double> L(S);
  for (int j = 0; j < S; ++j) L[j] = ev.eval(f_hz, ks[j]).log_abs_det;

  std::vector<ScanCandidate> found;
  std::vector<std::pair<double, double>> zoom;  // intervals to rescan

  for (int j = 1; j + 1 < S; ++j) {
    if (!(L[j] < L[j - 1] && L[j] <= L[j + 1])) continue;
    // Roundoff produces flat micro-minima; a genuine dip sampled anywhere
    // within a cell of the root sits at least ~ln(3) below one flank.
    if (std::max(L[j - 1], L[j + 1]) - L[j] < 0.5) continue;
    ScanCandidate c = process_bracket(ev, f_hz, ks[j - 1], ks[j], ks[j + 1],
                                      std::max(L[j - 1], L[j + 1]), opts);
    if (c.accepted) {
      found.push_back(c);
    } else if (!c.bulk && c.drop >= 0.5 * opts.min_log_drop) {
      // A deep but rejected dip may be two roots sharing a cell.
      zoom.emplace_back(ks[j - 1], ks[j + 1]);
    }
  }

  // Adjacent accepted roots inside ~3 scan cells may hide a third between
  // them; rescan those gaps densely.
  for (size_t i = 1; i < found.size(); ++i) {
    const double ka = found[i - 1].k, kb = found[i].k;
    if (std::log(kb / ka) < 3 * cell_rel)
      zoom.emplace_back(ka * (1 - cell_rel), kb * (1 + cell_rel));
  }

  for (const auto& [za, zb] : zoom) {
    const int Z = 48;
    const std::vector<double> zk = logspace(std::max(za, k_lo * (1 + 1e-12)),
                                            std::min(zb, k_hi), Z);
    std::vector<double> zl(Z);
    for (int j = 0; j < Z; ++j) zl[j] = ev.eval(f_hz, zk[j]).log_abs_det;
    for (int j = 1; j + 1 < Z; ++j) {
      if (!(zl[j] < zl[j - 1] && zl[j] <= zl[j + 1])) continue;
      if (std::max(zl[j - 1], zl[j + 1]) - zl[j] < 0.25) continue;
      ScanCandidate c =
          process_bracket(ev, f_hz, zk[j - 1], zk[j], zk[j + 1],
                          std::max(zl[j - 1], zl[j + 1]), opts);
      if (c.accepted) found.push_back(c);
    }
  }

  std::sort(found.begin(), found.end(),
            [](const ScanCandidate& a, const ScanCandidate& b) {
              return a.k < b.k;
            });
  std::vector<ClassifiedRoot> roots;
  for (const ScanCandidate& c : found) {
    if (!roots.empty() &&
        std::abs(c.k - roots.back().k) <= 10 * opts.k_rel_tol * c.k)
      continue;
    ClassifiedRoot r;
    r.k = c.k;
    r.cp = w / c.k;
    if (opts.classify) classify_root(ev, f_hz, c.k, r);
    roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end(),
            [](const ClassifiedRoot& a, const ClassifiedRoot& b) {
              return a.cp < b.cp;
            });
  return roots;
}

struct ActiveBranch {
  DispersionBranch data;
  int first_f_index = 0;
  double sym_sum = 0;
  int sh_votes = 0, n_class = 0;
  Eigen::Vector3d pol_sum = Eigen::Vector3d::Zero();
  int misses = 0;
  bool retired = false;
  std::size_t step_start_pts = 0;

  double predict(double f) const {
    const auto& pts = data.points;
    if (pts.size() == 1) return pts.back().cp_mps;
    const BranchPoint& a = pts[pts.size() - 2];
    const BranchPoint& b = pts.back();
    const double slope = (b.cp_mps - a.cp_mps) / (b.f_hz - a.f_hz);
    return b.cp_mps + slope * (f - b.f_hz);
  }
  double slope() const {
    const auto& pts = data.points;
    if (pts.size() < 2) return 0;
    const BranchPoint& a = pts[pts.size() - 2];
    const BranchPoint& b = pts.back();
    return (b.cp_mps - a.cp_mps) / (b.f_hz - a.f_hz);
  }
  bool sh_majority() const { return 2 * sh_votes > n_class; }
  double mean_sym() const { return n_class ? sym_sum / n_class : 0; }
};

bool compatible(const ActiveBranch& b, const ClassifiedRoot& r) {
  if (!r.classified || b.n_class == 0) return true;
  if (b.sh_majority() != r.sh) return false;
  const double bs = b.mean_sym();
  if (std::abs(bs) > 0.3 && std::abs(r.sym_score) > 0.3 &&
      bs * r.sym_score < 0)
    return false;
  return true;
}

void label_branches(std::vector<ActiveBranch>& branches, bool symmetric_layup) {
  for (ActiveBranch& b : branches) {
    b.data.family = b.sh_majority() ? ModeFamily::shear_horizontal
                                    : ModeFamily::lamb;
    const double s = b.mean_sym();
    if (!symmetric_layup || b.n_class == 0 || std::abs(s) <= 0.2)
      b.data.symmetry = ModeSymmetry::unknown;
    else
      b.data.symmetry =
          s > 0 ? ModeSymmetry::symmetric : ModeSymmetry::antisymmetric;
    if (b.pol_sum.sum() > 0)
      b.data.polarization_signature = b.pol_sum / b.pol_sum.sum();
  }

  std::map<std::pair<ModeFamily, ModeSymmetry>, std::vector<ActiveBranch*>>
      groups;
  for (ActiveBranch& b : branches)
    groups[{b.data.family, b.data.symmetry}].push_back(&b);
  for (auto& [key, grp] : groups) {
    if (key.second == ModeSymmetry::unknown) continue;
    std::sort(grp.begin(), grp.end(), [](ActiveBranch* a, ActiveBranch* b) {
      if (a->first_f_index != b->first_f_index)
        return a->first_f_index < b->first_f_index;
      return a->data.points.front().cp_mps < b->data.points.front().cp_mps;
    });
    const char* stem = key.first == ModeFamily::shear_horizontal
                           ? (key.second == ModeSymmetry::symmetric ? "SSH" : "ASH")
                           : (key.second == ModeSymmetry::symmetric ? "S" : "A");
    for (size_t i = 0; i < grp.size(); ++i)
      grp[i]->data.label = stem + std::to_string(i);
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Eigen::MatrixXcd assemble_global(const Laminate& lam, double f_hz,
                                 double k_radpm) {
  Evaluator ev(lam);
  ev.assemble(f_hz, k_radpm);
  return ev.matrix();
}

CharacteristicEvaluation characteristic(const Laminate& lam, double f_hz,
                                        double k_radpm) {
  Evaluator ev(lam);
  return ev.eval(f_hz, k_radpm);
}

SweepResult dispersion_sweep(const Laminate& lam,
                             const std::vector<double>& f_grid,
                             const SweepOptions& opts) {
  if (f_grid.empty()) throw std::invalid_argument("empty frequency grid");
  for (size_t i = 0; i < f_grid.size(); ++i)
    if (!(f_grid[i] > 0) || (i && !(f_grid[i] > f_grid[i - 1])))
      throw std::invalid_argument("frequency grid must be positive ascending");
  if (!(opts.cp_min_mps > 0 && opts.cp_max_mps > opts.cp_min_mps))
    throw std::invalid_argument("bad phase-velocity scan range");

  std::vector<std::vector<ClassifiedRoot>> roots(f_grid.size());
  parallel_for(f_grid.size(), opts.workers, [&](std::size_t i) {
    Evaluator ev(lam);
    roots[i] = find_roots(ev, f_grid[i], opts);
  });

  SweepResult result;
  std::vector<ActiveBranch> branches;
  Evaluator refine_ev(lam);

  auto near_bulk = [&](double cp) {
    for (double g : refine_ev.grazing())
      if (std::abs(cp - g) <= 4 * opts.bulk_speed_rel_tol * g) return true;
    return false;
  };

  // Greedy nearest-prediction matching; preview (commit=false) only counts
  // active branches that would stall so the caller can bisect the step.
  auto run_match = [&](double f, std::vector<ClassifiedRoot>& rs, bool commit,
                       size_t fi, bool grid_point) -> int {
    struct Cand { double cost; size_t b, r; };
    std::vector<Cand> cands;
    for (size_t bi = 0; bi < branches.size(); ++bi) {
      ActiveBranch& b = branches[bi];
      if (b.retired) continue;
      const BranchPoint& last = b.data.points.back();
      const double pred = b.predict(f);
      const double df_local = f - last.f_hz;
      double window;
      if (b.data.points.size() == 1)
        // No slope yet: admit the cp drift a power-law branch can produce
        // over one relative frequency step.
        window = std::abs(pred) * std::max(opts.continuation_rel_window,
                                           df_local / last.f_hz);
      else
        window = std::max(opts.continuation_rel_window * std::abs(pred),
                          3 * std::abs(b.slope()) * df_local);
      for (size_t ri = 0; ri < rs.size(); ++ri) {
        if (!compatible(b, rs[ri])) continue;
        const double cost = std::abs(rs[ri].cp - pred);
        if (cost <= window) cands.push_back({cost, bi, ri});
      }
    }
    std::sort(cands.begin(), cands.end(),
              [](const Cand& a, const Cand& b) { return a.cost < b.cost; });
    std::vector<char> branch_matched(branches.size(), 0);
    std::vector<char> root_used(rs.size(), 0);
    for (const Cand& c : cands) {
      if (branch_matched[c.b] || root_used[c.r]) continue;
      branch_matched[c.b] = 1;
      root_used[c.r] = 1;
      if (!commit) continue;
      ActiveBranch& b = branches[c.b];
      const ClassifiedRoot& r = rs[c.r];
      b.data.points.push_back({f, r.k, r.cp});
      b.misses = 0;
      if (r.classified) {
        b.sym_sum += r.sym_score;
        b.sh_votes += r.sh ? 1 : 0;
        b.pol_sum += r.pol;
        ++b.n_class;
      }
    }
    int stalled = 0;
    for (size_t bi = 0; bi < branches.size(); ++bi) {
      ActiveBranch& b = branches[bi];
      if (b.retired || branch_matched[bi]) continue;
      // Refining near a grazing bulk speed is futile: the root detector
      // rejects such roots at every frequency.
      if (!commit && !near_bulk(b.predict(f))) ++stalled;
      if (commit && grid_point && b.data.points.size() == b.step_start_pts) {
        ++b.misses;
        if (b.data.points.size() >= 2 && b.misses == 1) {
          std::ostringstream os;
          os << "missed root: branch at cp=" << b.data.points.back().cp_mps
             << " m/s (last f=" << b.data.points.back().f_hz
             << " Hz) has no candidate at f=" << f << " Hz";
          result.warnings.push_back(os.str());
        }
        if (b.misses > opts.max_gap) b.retired = true;
      }
    }
    if (commit) {
      for (size_t ri = 0; ri < rs.size(); ++ri) {
        if (root_used[ri]) continue;
        ActiveBranch nb;
        nb.first_f_index = static_cast<int>(fi);
        nb.data.points.push_back({f, rs[ri].k, rs[ri].cp});
        if (rs[ri].classified) {
          nb.sym_sum = rs[ri].sym_score;
          nb.sh_votes = rs[ri].sh ? 1 : 0;
          nb.pol_sum = rs[ri].pol;
          nb.n_class = 1;
        }
        branches.push_back(std::move(nb));
      }
    }
    return stalled;
  };

  for (size_t fi = 0; fi < f_grid.size(); ++fi) {
    for (ActiveBranch& b : branches) b.step_start_pts = b.data.points.size();
    int budget = fi ? opts.max_refine_per_step : 0;
    std::function<void(double, std::vector<ClassifiedRoot>&, double, bool)>
        advance = [&](double fhi, std::vector<ClassifiedRoot>& rs, double flo,
                      bool grid_point) {
          const double fmid = 0.5 * (flo + fhi);
          if (run_match(fhi, rs, false, fi, grid_point) > 0 && budget > 0 &&
              fmid > flo * (1 + 1e-9) && fmid < fhi * (1 - 1e-9)) {
            --budget;
            std::vector<ClassifiedRoot> rsm = find_roots(refine_ev, fmid, opts);
            advance(fmid, rsm, flo, false);
            advance(fhi, rs, fmid, grid_point);
            return;
          }
          run_match(fhi, rs, true, fi, grid_point);
        };
    advance(f_grid[fi], roots[fi], fi ? f_grid[fi - 1] : f_grid[fi], true);
  }

  const int min_pts =
      std::min<int>(opts.min_branch_points, static_cast<int>(f_grid.size()));
  std::vector<ActiveBranch> survivors;
  survivors.reserve(branches.size());
  int dropped = 0;
  for (ActiveBranch& b : branches) {
    if (static_cast<int>(b.data.points.size()) >= min_pts)
      survivors.push_back(std::move(b));
    else
      ++dropped;
  }
  branches.swap(survivors);
  if (dropped) {
    std::ostringstream os;
    os << "dropped " << dropped << " branch fragment(s) shorter than "
       << min_pts << " points";
    result.warnings.push_back(os.str());
  }

  label_branches(branches, lam.is_symmetric(1e-6));
  std::sort(branches.begin(), branches.end(),
            [](const ActiveBranch& a, const ActiveBranch& b) {
              if (a.first_f_index != b.first_f_index)
                return a.first_f_index < b.first_f_index;
              return a.data.points.front().cp_mps <
                     b.data.points.front().cp_mps;
            });
  for (ActiveBranch& b : branches)
    result.branches.push_back(std::move(b.data));
  return result;
}

std::vector<std::pair<double, double>> phase_velocity(
    const DispersionBranch& branch, double total_thickness_m) {
  std::vector<std::pair<double, double>> out;
  out.reserve(branch.points.size());
  for (const BranchPoint& p : branch.points)
    out.emplace_back(p.f_hz * total_thickness_m / 1000.0, p.cp_mps);
  return out;
}

void write_branch_csv(std::ostream& os, const SweepResult& result,
                      double total_thickness_m) {
  os << "mode,f_hz,fd_mhzmm,k_radpm,nu_1pm,cp_mps\n";
  for (const DispersionBranch& b : result.branches) {
    for (const BranchPoint& p : b.points) {
      os << b.label << ',' << format_double(p.f_hz) << ','
         << format_double(p.f_hz * total_thickness_m / 1000.0) << ','
         << format_double(p.k_radpm) << ','
         << format_double(p.k_radpm / (2 * std::numbers::pi)) << ','
         << format_double(p.cp_mps) << '\n';
    }
  }
}

SweepResult read_branch_csv(std::istream& is) {
  SweepResult result;
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("branch CSV: missing header");
  if (line.rfind("mode,f_hz", 0) != 0)
    throw std::runtime_error("branch CSV: unexpected header: " + line);
  std::map<std::string, size_t> index;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string mode, field;
    std::getline(ls, mode, ',');
    double vals[5];
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(ls, field, ','))
        throw std::runtime_error("branch CSV line " + std::to_string(lineno) +
                                 ": expected 6 columns");
      char* end = nullptr;
      vals[i] = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0')
        throw std::runtime_error("branch CSV line " + std::to_string(lineno) +
                                 ": bad number '" + field + "'");
    }
    auto [it, fresh] = index.try_emplace(mode, result.branches.size());
    if (fresh) {
      DispersionBranch b;
      b.label = mode;
      b.family = mode.find("SH") != std::string::npos
                     ? ModeFamily::shear_horizontal
                     : ModeFamily::lamb;
      b.symmetry = mode.empty() ? ModeSymmetry::unknown
                   : mode[0] == 'A' ? ModeSymmetry::antisymmetric
                   : mode[0] == 'S' ? ModeSymmetry::symmetric
                                    : ModeSymmetry::unknown;
      result.branches.push_back(std::move(b));
    }
    result.branches[it->second].points.push_back({vals[0], vals[2], vals[4]});
  }
  for (DispersionBranch& b : result.branches)
    std::sort(b.points.begin(), b.points.end(),
              [](const BranchPoint& a, const BranchPoint& c) {
                return a.f_hz < c.f_hz;
              });
  return result;
}

}  // namespace lamwave
