#include "lamwave/outlier_filter.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "lamwave/rng.hpp"

namespace lamwave {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double fd_mhzmm(double f_hz, double thickness_m) { return f_hz * thickness_m * 1e-3; }

// --- banded SPD Cholesky, bandwidth 2 (pentadiagonal) -----------------------

// Symmetric band storage: band[b][i] = A(i, i-b), b = 0..2.
struct PentaMatrix {
  std::vector<double> d0, d1, d2;
  explicit PentaMatrix(std::size_t m) : d0(m, 0.0), d1(m, 0.0), d2(m, 0.0) {}
  std::size_t size() const { return d0.size(); }
};

struct PentaCholesky {
  std::vector<double> l0, l1, l2;

  explicit PentaCholesky(const PentaMatrix& a) {
    const std::size_t m = a.size();
    l0.assign(m, 0.0);
    l1.assign(m, 0.0);
    l2.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      double s = a.d0[j];
      if (j >= 1) s -= l1[j] * l1[j];
      if (j >= 2) s -= l2[j] * l2[j];
      if (!(s > 0.0)) throw std::runtime_error("smoothing system lost positive definiteness");
      l0[j] = std::sqrt(s);
      if (j + 1 < m) {
        double t = a.d1[j + 1];
        if (j >= 1) t -= l1[j] * l2[j + 1];
        l1[j + 1] = t / l0[j];
      }
      if (j + 2 < m) l2[j + 2] = a.d2[j + 2] / l0[j];
    }
  }

  void solve(std::vector<double>& b) const {
    const std::size_t m = l0.size();
    for (std::size_t i = 0; i < m; ++i) {
      double s = b[i];
      if (i >= 1) s -= l1[i] * b[i - 1];
      if (i >= 2) s -= l2[i] * b[i - 2];
      b[i] = s / l0[i];
    }
    for (std::size_t ii = m; ii-- > 0;) {
      double s = b[ii];
      if (ii + 1 < m) s -= l1[ii + 1] * b[ii + 1];
      if (ii + 2 < m) s -= l2[ii + 2] * b[ii + 2];
      b[ii] = s / l0[ii];
    }
  }
};

// --- weighted natural cubic smoothing spline --------------------------------

struct SplineWork {
  std::vector<double> h;       // n-1 spacings
  PentaMatrix r, b;            // R and Qt W^-1 Q, both (n-2) square
  std::vector<double> qty;     // Qt y

  SplineWork(const std::vector<double>& x, const std::vector<double>& y,
             const std::vector<double>& w)
      : r(x.size() - 2), b(x.size() - 2), qty(x.size() - 2) {
    const std::size_t n = x.size();
    h.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];
    const std::size_t m = n - 2;
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t i = c + 1;  // interior data index
      const double a1 = 1.0 / h[i - 1];
      const double a2 = -(1.0 / h[i - 1] + 1.0 / h[i]);
      const double a3 = 1.0 / h[i];
      qty[c] = a1 * y[i - 1] + a2 * y[i] + a3 * y[i + 1];
      r.d0[c] = (h[i - 1] + h[i]) / 3.0;
      if (c + 1 < m) r.d1[c + 1] = h[i] / 6.0;
      b.d0[c] = a1 * a1 / w[i - 1] + a2 * a2 / w[i] + a3 * a3 / w[i + 1];
      if (c + 1 < m) {
        const double b1 = 1.0 / h[i];
        const double b2 = -(1.0 / h[i] + 1.0 / h[i + 1]);
        b.d1[c + 1] = a2 * b1 / w[i] + a3 * b2 / w[i + 1];
      }
      if (c + 2 < m) b.d2[c + 2] = a3 * (1.0 / h[i + 1]) / w[i + 1];
    }
  }

  PentaMatrix system(double lambda) const {
    PentaMatrix mtx(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      mtx.d0[i] = r.d0[i] + lambda * b.d0[i];
      mtx.d1[i] = r.d1[i] + lambda * b.d1[i];
      mtx.d2[i] = lambda * b.d2[i];
    }
    return mtx;
  }

  void apply_b(const std::vector<double>& z, std::vector<double>& out) const {
    const std::size_t m = b.size();
    for (std::size_t i = 0; i < m; ++i) {
      double s = b.d0[i] * z[i];
      if (i >= 1) s += b.d1[i] * z[i - 1];
      if (i + 1 < m) s += b.d1[i + 1] * z[i + 1];
      if (i >= 2) s += b.d2[i] * z[i - 2];
      if (i + 2 < m) s += b.d2[i + 2] * z[i + 2];
      out[i] = s;
    }
  }

  // Fitted values g = y - lambda W^-1 Q gamma.
  std::vector<double> fit(const std::vector<double>& y, const std::vector<double>& w,
                          double lambda) const {
    const std::size_t n = y.size();
    std::vector<double> gamma = qty;
    PentaCholesky chol(system(lambda));
    chol.solve(gamma);
    std::vector<double> qg(n, 0.0);
    for (std::size_t c = 0; c < gamma.size(); ++c) {
      const std::size_t i = c + 1;
      qg[i - 1] += gamma[c] / h[i - 1];
      qg[i] -= gamma[c] * (1.0 / h[i - 1] + 1.0 / h[i]);
      qg[i + 1] += gamma[c] / h[i];
    }
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = y[i] - lambda * qg[i] / w[i];
    return g;
  }

  // Hutchinson estimate of tr(M(lambda)^-1 B) with fixed Rademacher probes.
  double trace_mb(double lambda, int probes = 8) const {
    const std::size_t m = b.size();
    PentaCholesky chol(system(lambda));
    std::vector<double> z(m), bz(m);
    double acc = 0.0;
    for (int k = 0; k < probes; ++k) {
      for (std::size_t i = 0; i < m; ++i) {
        const std::uint64_t bit =
            splitmix64(0x5EEDull + static_cast<std::uint64_t>(k) * 0x10001ull + i);
        z[i] = (bit & 1u) ? 1.0 : -1.0;
      }
      apply_b(z, bz);
      chol.solve(bz);
      acc += std::inner_product(z.begin(), z.end(), bz.begin(), 0.0);
    }
    return acc / probes;
  }
};

}  // namespace

std::vector<double> smoothing_spline_gcv(const std::vector<double>& x,
                                         const std::vector<double>& y,
                                         const std::vector<double>& w, double* lambda_out) {
  const std::size_t n = x.size();
  if (n < 4 || y.size() != n || w.size() != n) {
    throw std::invalid_argument("smoothing spline needs >= 4 equally sized x/y/w arrays");
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(x[i + 1] > x[i])) throw std::invalid_argument("spline abscissae must be increasing");
  }
  for (double wi : w) {
    if (!(wi > 0.0)) throw std::invalid_argument("spline weights must be positive");
  }

  // Normalize to a unit box so the stiffness grid is scale-free.
  const double x0 = x.front(), span = x.back() - x.front();
  double y_scale = 0.0;
  for (double yi : y) y_scale = std::max(y_scale, std::abs(yi));
  if (y_scale == 0.0) y_scale = 1.0;
  std::vector<double> xn(n), yn(n);
  for (std::size_t i = 0; i < n; ++i) {
    xn[i] = (x[i] - x0) / span;
    yn[i] = y[i] / y_scale;
  }

  SplineWork work(xn, yn, w);
  double best_gcv = std::numeric_limits<double>::infinity();
  double best_lambda = 1e-9;
  for (int j = 0; j < 25; ++j) {
    const double lambda = std::pow(10.0, -9.0 + 11.0 * j / 24.0);
    const auto g = work.fit(yn, w, lambda);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) rss += w[i] * (yn[i] - g[i]) * (yn[i] - g[i]);
    const double tr_a = static_cast<double>(n) - lambda * work.trace_mb(lambda);
    const double dof = static_cast<double>(n) - tr_a;
    if (!(dof > 1e-9)) continue;
    const double gcv = static_cast<double>(n) * rss / (dof * dof);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_lambda = lambda;
    }
  }
  if (lambda_out != nullptr) *lambda_out = best_lambda;
  auto g = work.fit(yn, w, best_lambda);
  for (double& gi : g) gi *= y_scale;
  return g;
}

void FilterConfig::validate() const {
  if (!(path_length_m > 0.0)) throw std::invalid_argument("path_length_m must be positive");
  if (!(min_point_spacing_m > 0.0)) {
    throw std::invalid_argument("min_point_spacing_m must be positive");
  }
  if (!(lambda_factor > 0.0) || !(nyquist_factor > 0.0)) {
    throw std::invalid_argument("bound factors must be positive");
  }
  if (!(nu_min_1pm() < nu_max_1pm())) {
    throw std::invalid_argument("nu_min " + format_double(nu_min_1pm()) +
                                " must stay below nu_max " + format_double(nu_max_1pm()));
  }
  if (!(residual_threshold_rel > 0.0)) {
    throw std::invalid_argument("residual_threshold_rel must be positive");
  }
  if (spline_segment_min_points < 4) {
    throw std::invalid_argument("spline_segment_min_points must be >= 4");
  }
  if (segment_target_points < spline_segment_min_points) {
    throw std::invalid_argument("segment_target_points below spline_segment_min_points");
  }
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  for (const auto& z : exclusion_zones) {
    if (!(z.fd_lo_mhzmm <= z.fd_hi_mhzmm)) {
      throw std::invalid_argument("exclusion zone [" + format_double(z.fd_lo_mhzmm) + ", " +
                                  format_double(z.fd_hi_mhzmm) + "] is inverted");
    }
  }
  if (!exclusion_zones.empty() && !(thickness_m > 0.0)) {
    throw std::invalid_argument("exclusion zones need a positive thickness_m");
  }
}

std::vector<ExclusionZone> FilterConfig::default_zones() {
  return {
      {1.1, 1.2, {"S0"}, "sh_interference"},
      {1.8, std::numeric_limits<double>::infinity(), {}, "mode_convergence"},
  };
}

FilterConfig FilterConfig::defaults(double path_length_m, double min_point_spacing_m,
                                    double thickness_m) {
  FilterConfig cfg;
  cfg.path_length_m = path_length_m;
  cfg.min_point_spacing_m = min_point_spacing_m;
  cfg.thickness_m = thickness_m;
  cfg.exclusion_zones = default_zones();
  cfg.validate();
  return cfg;
}

const char* to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::below_nu_min: return "below_nu_min";
    case RejectReason::above_nu_max: return "above_nu_max";
    case RejectReason::exclusion_zone: return "exclusion_zone";
    case RejectReason::linear_residual: return "linear_residual";
    case RejectReason::spline_residual: return "spline_residual";
  }
  return "unknown";
}

namespace {

void finalize_counts(FilterReport& report, const ModePeaks& input) {
  for (const auto& [mode, set] : input) {
    report.kept_count[mode] = static_cast<int>(report.kept[mode].peaks.size());
    (void)set;
    report.rejected_count[mode] = 0;
  }
  for (const auto& r : report.rejected) ++report.rejected_count[r.mode];
}

}  // namespace

FilterReport apply_bounds(const ModePeaks& peaks, const FilterConfig& cfg) {
  cfg.validate();
  FilterReport report;
  report.config = cfg;
  const double lo = cfg.nu_min_1pm(), hi = cfg.nu_max_1pm();
  for (const auto& [mode, set] : peaks) {
    auto& kept = report.kept[mode];
    for (const auto& p : set.peaks) {
      if (p.nu_1pm < lo) {
        report.rejected.push_back({mode, p, RejectReason::below_nu_min,
                                   "nu_min=" + format_double(lo)});
      } else if (p.nu_1pm > hi) {
        report.rejected.push_back({mode, p, RejectReason::above_nu_max,
                                   "nu_max=" + format_double(hi)});
      } else {
        kept.peaks.push_back(p);
      }
    }
  }
  finalize_counts(report, peaks);
  return report;
}

FilterReport apply_exclusions(const ModePeaks& peaks, const FilterConfig& cfg) {
  cfg.validate();
  FilterReport report;
  report.config = cfg;
  for (const auto& [mode, set] : peaks) {
    auto& kept = report.kept[mode];
    for (const auto& p : set.peaks) {
      const double fd = fd_mhzmm(p.f_hz, cfg.thickness_m);
      const ExclusionZone* hit = nullptr;
      for (const auto& z : cfg.exclusion_zones) {
        const bool in_scope =
            z.modes.empty() || std::find(z.modes.begin(), z.modes.end(), mode) != z.modes.end();
        if (in_scope && fd >= z.fd_lo_mhzmm && fd <= z.fd_hi_mhzmm) {
          hit = &z;
          break;
        }
      }
      if (hit != nullptr) {
        report.rejected.push_back({mode, p, RejectReason::exclusion_zone, hit->reason});
      } else {
        kept.peaks.push_back(p);
      }
    }
  }
  finalize_counts(report, peaks);
  return report;
}

namespace {

struct Segment {
  std::size_t begin, end;  // half-open index range into the active arrays
};

std::vector<Segment> make_segments(std::size_t n, const FilterConfig& cfg) {
  const auto target = static_cast<std::size_t>(cfg.segment_target_points);
  const auto min_pts = static_cast<std::size_t>(cfg.spline_segment_min_points);
  std::size_t n_seg = std::max<std::size_t>(1, (n + target / 2) / target);
  while (n_seg > 1 && n / n_seg < min_pts) --n_seg;
  std::vector<Segment> segs(n_seg);
  for (std::size_t s = 0; s < n_seg; ++s) {
    segs[s].begin = n * s / n_seg;
    segs[s].end = n * (s + 1) / n_seg;
  }
  return segs;
}

struct LinearFit {
  double a = 0.0, b = 0.0;  // nu = a + b * f
  double operator()(double f) const { return a + b * f; }
};

LinearFit weighted_linear(const std::vector<double>& f, const std::vector<double>& nu,
                          const std::vector<double>& w, std::size_t lo, std::size_t hi) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    sw += w[i];
    sx += w[i] * f[i];
    sy += w[i] * nu[i];
    sxx += w[i] * f[i] * f[i];
    sxy += w[i] * f[i] * nu[i];
  }
  const double det = sw * sxx - sx * sx;
  LinearFit fit;
  if (std::abs(det) < 1e-300) {
    fit.a = sw > 0 ? sy / sw : 0.0;
    fit.b = 0.0;
  } else {
    fit.b = (sw * sxy - sx * sy) / det;
    fit.a = (sy - fit.b * sx) / sw;
  }
  return fit;
}

double linear_rss(const std::vector<double>& f, const std::vector<double>& nu, std::size_t lo,
                  std::size_t hi, const LinearFit& fit) {
  double rss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double r = nu[i] - fit(f[i]);
    rss += r * r;
  }
  return rss;
}

double quadratic_rss(const std::vector<double>& f, const std::vector<double>& nu, std::size_t lo,
                     std::size_t hi) {
  // Centered/scaled quadratic least squares via 3x3 normal equations.
  const std::size_t n = hi - lo;
  double mean = 0.0;
  for (std::size_t i = lo; i < hi; ++i) mean += f[i];
  mean /= static_cast<double>(n);
  double scale = 0.0;
  for (std::size_t i = lo; i < hi; ++i) scale = std::max(scale, std::abs(f[i] - mean));
  if (scale == 0.0) return 0.0;
  double s[5] = {0, 0, 0, 0, 0};
  double t[3] = {0, 0, 0};
  for (std::size_t i = lo; i < hi; ++i) {
    const double u = (f[i] - mean) / scale;
    double up = 1.0;
    for (int p = 0; p < 5; ++p) {
      s[p] += up;
      if (p < 3) t[p] += up * nu[i];
      up *= u;
    }
  }
  Eigen::Matrix3d m;
  m << s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4];
  const Eigen::Vector3d rhs(t[0], t[1], t[2]);
  const Eigen::Vector3d c = m.fullPivLu().solve(rhs);
  double rss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double u = (f[i] - mean) / scale;
    const double r = nu[i] - (c(0) + c(1) * u + c(2) * u * u);
    rss += r * r;
  }
  return rss;
}

LinearFit bisquare_linear(const std::vector<double>& f, const std::vector<double>& nu,
                          std::size_t lo, std::size_t hi) {
  std::vector<double> w(f.size(), 1.0);
  LinearFit fit = weighted_linear(f, nu, w, lo, hi);
  for (int iter = 0; iter < 10; ++iter) {
    std::vector<double> r(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) r[i - lo] = std::abs(nu[i] - fit(f[i]));
    std::vector<double> sorted = r;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2),
                     sorted.end());
    const double mad = sorted[sorted.size() / 2];
    if (mad <= 0.0) break;
    const double cutoff = 4.685 * mad / 0.6745;
    for (std::size_t i = lo; i < hi; ++i) {
      const double u = r[i - lo] / cutoff;
      w[i] = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    }
    const LinearFit next = weighted_linear(f, nu, w, lo, hi);
    if (std::abs(next.a - fit.a) <= 1e-12 * std::abs(fit.a) &&
        std::abs(next.b - fit.b) <= 1e-12 * std::abs(fit.b)) {
      fit = next;
      break;
    }
    fit = next;
  }
  return fit;
}

double rel_residual(double value, double fitted) {
  const double denom = std::max(std::abs(fitted), 1e-12);
  return std::abs(value - fitted) / denom;
}

// One full rejection cycle over the active points of one mode. Returns the
// indices (into the mode's sorted peak list) rejected in this cycle.
void fit_cycle(const std::vector<Peak>& pts, std::vector<bool>& alive, const FilterConfig& cfg,
               const std::string& mode, std::vector<RejectedPeak>& rejected) {
  std::vector<std::size_t> idx;
  std::vector<double> f, nu;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!alive[i]) continue;
    idx.push_back(i);
    f.push_back(pts[i].f_hz);
    nu.push_back(pts[i].nu_1pm);
  }
  const std::size_t n = idx.size();
  if (n < 4) return;

  const auto segs = make_segments(n, cfg);

  // Pass 1: robust linear rejection where the data is locally straight.
  std::vector<bool> pass1_gone(n, false);
  for (const auto& seg : segs) {
    if (seg.end - seg.begin < 3) continue;
    const LinearFit probe = weighted_linear(f, nu, std::vector<double>(n, 1.0), seg.begin, seg.end);
    const double rss_lin = linear_rss(f, nu, seg.begin, seg.end, probe);
    const double rss_quad = quadratic_rss(f, nu, seg.begin, seg.end);
    if (rss_lin > 0.0 && (rss_lin - rss_quad) > cfg.curvature_gate_rel * rss_lin) continue;
    const LinearFit fit = bisquare_linear(f, nu, seg.begin, seg.end);
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
      const double rel = rel_residual(nu[i], fit(f[i]));
      if (rel > cfg.residual_threshold_rel) {
        pass1_gone[i] = true;
        alive[idx[i]] = false;
        rejected.push_back({mode, pts[idx[i]], RejectReason::linear_residual,
                            "rel_residual=" + format_double(rel)});
      }
    }
  }

  // Pass 2: weighted smoothing spline on the survivors.
  std::vector<std::size_t> sidx;
  std::vector<double> sf, snu;
  for (std::size_t i = 0; i < n; ++i) {
    if (pass1_gone[i]) continue;
    sidx.push_back(idx[i]);
    sf.push_back(f[i]);
    snu.push_back(nu[i]);
  }
  if (sidx.size() < 4) return;

  // Collapse duplicate frequencies for the spline; remember the mapping.
  const double span = sf.back() - sf.front();
  if (!(span > 0.0)) return;
  std::vector<double> xu, yu, wu;
  std::vector<std::size_t> owner(sidx.size());
  for (std::size_t i = 0; i < sidx.size(); ++i) {
    if (!xu.empty() && sf[i] - xu.back() <= 1e-12 * span) {
      const double wsum = wu.back() + 1.0;
      yu.back() = (yu.back() * wu.back() + snu[i]) / wsum;
      wu.back() = wsum;
    } else {
      xu.push_back(sf[i]);
      yu.push_back(snu[i]);
      wu.push_back(1.0);
    }
    owner[i] = xu.size() - 1;
  }
  if (xu.size() < 4) return;

  // Density weighting: points in crowded segments count more.
  const auto wsegs = make_segments(xu.size(), cfg);
  std::vector<double> density(xu.size(), 1.0);
  double dsum = 0.0;
  for (const auto& seg : wsegs) {
    const double width = std::max(xu[seg.end - 1] - xu[seg.begin], 1e-12 * span);
    const double d = static_cast<double>(seg.end - seg.begin) / width;
    for (std::size_t i = seg.begin; i < seg.end; ++i) density[i] = d;
  }
  for (std::size_t i = 0; i < xu.size(); ++i) {
    density[i] *= wu[i];
    dsum += density[i];
  }
  for (double& d : density) d *= static_cast<double>(xu.size()) / dsum;

  const auto g = smoothing_spline_gcv(xu, yu, density);
  for (std::size_t i = 0; i < sidx.size(); ++i) {
    const double rel = rel_residual(snu[i], g[owner[i]]);
    if (rel > cfg.residual_threshold_rel) {
      alive[sidx[i]] = false;
      rejected.push_back({mode, pts[sidx[i]], RejectReason::spline_residual,
                          "rel_residual=" + format_double(rel)});
    }
  }
}

}  // namespace

FilterReport fit_reject(const ModePeaks& peaks, const FilterConfig& cfg) {
  cfg.validate();
  FilterReport report;
  report.config = cfg;
  for (const auto& [mode, set] : peaks) {
    if (set.peaks.size() < 10) {
      throw std::runtime_error("mode '" + mode + "' has only " +
                               std::to_string(set.peaks.size()) +
                               " points; residual filtering needs at least 10");
    }
    std::vector<Peak> pts = set.peaks;
    std::sort(pts.begin(), pts.end(), [](const Peak& a, const Peak& b) {
      if (a.f_hz != b.f_hz) return a.f_hz < b.f_hz;
      return a.nu_1pm < b.nu_1pm;
    });
    std::vector<bool> alive(pts.size(), true);
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
      const std::size_t before = report.rejected.size();
      fit_cycle(pts, alive, cfg, mode, report.rejected);
      if (report.rejected.size() == before) break;
    }
    auto& kept = report.kept[mode];
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (alive[i]) kept.peaks.push_back(pts[i]);
    }
  }
  finalize_counts(report, peaks);
  return report;
}

FilterReport run_filter(const ModePeaks& peaks, const FilterConfig& cfg) {
  FilterReport bounds = apply_bounds(peaks, cfg);
  FilterReport zones = apply_exclusions(bounds.kept, cfg);
  FilterReport fit = fit_reject(zones.kept, cfg);

  FilterReport report;
  report.config = cfg;
  report.kept = std::move(fit.kept);
  report.rejected = std::move(bounds.rejected);
  report.rejected.insert(report.rejected.end(), zones.rejected.begin(), zones.rejected.end());
  report.rejected.insert(report.rejected.end(), fit.rejected.begin(), fit.rejected.end());
  finalize_counts(report, peaks);
  return report;
}

ModePeaks assign_fundamental_modes(const PeakSet& peaks) {
  ModePeaks out;
  std::size_t i = 0;
  while (i < peaks.peaks.size()) {
    std::size_t j = i;
    while (j < peaks.peaks.size() && peaks.peaks[j].f_hz == peaks.peaks[i].f_hz) ++j;
    std::vector<const Peak*> group;
    for (std::size_t k = i; k < j; ++k) group.push_back(&peaks.peaks[k]);
    std::sort(group.begin(), group.end(),
              [](const Peak* a, const Peak* b) { return a->magnitude > b->magnitude; });
    if (group.size() == 1) {
      out["A0"].peaks.push_back(*group[0]);
    } else {
      const Peak* first = group[0];
      const Peak* second = group[1];
      if (first->nu_1pm < second->nu_1pm) std::swap(first, second);
      out["A0"].peaks.push_back(*first);
      out["S0"].peaks.push_back(*second);
    }
    i = j;
  }
  for (auto& [mode, set] : out) {
    std::sort(set.peaks.begin(), set.peaks.end(), [](const Peak& a, const Peak& b) {
      if (a.f_hz != b.f_hz) return a.f_hz < b.f_hz;
      return a.nu_1pm < b.nu_1pm;
    });
  }
  return out;
}

void write_filter_report_csv(std::ostream& os, const FilterReport& report) {
  const auto& cfg = report.config;
  os << "# lamwave-filter-report v1\n";
  os << "# nu_min_1pm=" << format_double(cfg.nu_min_1pm())
     << " nu_max_1pm=" << format_double(cfg.nu_max_1pm())
     << " residual_threshold_rel=" << format_double(cfg.residual_threshold_rel)
     << " thickness_m=" << format_double(cfg.thickness_m) << "\n";
  for (const auto& z : cfg.exclusion_zones) {
    os << "# zone ";
    if (z.modes.empty()) {
      os << "*";
    } else {
      for (std::size_t i = 0; i < z.modes.size(); ++i) os << (i ? "|" : "") << z.modes[i];
    }
    os << ":[" << format_double(z.fd_lo_mhzmm) << "," << format_double(z.fd_hi_mhzmm)
       << "]:" << z.reason << "\n";
  }
  os << "mode,f_hz,fd_mhzmm,nu_1pm,cp_mps,mag,prom,kept,reason,detail\n";

  struct Row {
    std::string mode;
    Peak peak;
    bool kept;
    std::string reason, detail;
  };
  std::vector<Row> rows;
  for (const auto& [mode, set] : report.kept) {
    for (const auto& p : set.peaks) rows.push_back({mode, p, true, "", ""});
  }
  for (const auto& r : report.rejected) {
    rows.push_back({r.mode, r.peak, false, to_string(r.reason), r.detail});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.mode != b.mode) return a.mode < b.mode;
    if (a.peak.f_hz != b.peak.f_hz) return a.peak.f_hz < b.peak.f_hz;
    return a.peak.nu_1pm < b.peak.nu_1pm;
  });
  for (const auto& r : rows) {
    const double fd = fd_mhzmm(r.peak.f_hz, cfg.thickness_m);
    const double cp = r.peak.nu_1pm != 0.0 ? r.peak.f_hz / r.peak.nu_1pm : 0.0;
    os << r.mode << ',' << format_double(r.peak.f_hz) << ',' << format_double(fd) << ','
       << format_double(r.peak.nu_1pm) << ',' << format_double(cp) << ','
       << format_double(r.peak.magnitude) << ',' << format_double(r.peak.prominence) << ','
       << (r.kept ? 1 : 0) << ',' << r.reason << ',' << r.detail << '\n';
  }
}

}  // namespace lamwave
