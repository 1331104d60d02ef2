#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lamwave {

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = n > 1 ? a + (b - a) * i / (n - 1) : a;
  return v;
}

inline std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v = linspace(std::log(a), std::log(b), n);
  for (double& x : v) x = std::exp(x);
  return v;
}

// Monotonicity-preserving piecewise cubic interpolant (Fritsch-Carlson
// slopes). Evaluation outside [x.front(), x.back()] throws std::domain_error;
// callers that must not extrapolate should clip to in_support() first.
class PchipInterpolator {
 public:
  PchipInterpolator() = default;
  PchipInterpolator(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("pchip needs >= 2 matching samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw std::invalid_argument("pchip abscissae must strictly increase");
    m_.resize(n);
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      d[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      m_[0] = m_[1] = d[0];
    } else {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0) {
          m_[i] = 0;
        } else {
          const double w1 = 2 * h[i] + h[i - 1];
          const double w2 = h[i] + 2 * h[i - 1];
          m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
      }
      m_[0] = edge_slope(h[0], h[1], d[0], d[1]);
      m_[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }
  }

  bool in_support(double x) const {
    return x >= x_.front() && x <= x_.back();
  }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

  double operator()(double x) const {
    if (!in_support(x))
      throw std::domain_error("pchip evaluation outside support");
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
    const double h = x_[lo + 1] - x_[lo];
    const double t = (x - x_[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[lo] + (t3 - 2 * t2 + t) * h * m_[lo] +
           (-2 * t3 + 3 * t2) * y_[lo + 1] + (t3 - t2) * h * m_[lo + 1];
  }

 private:
  static double edge_slope(double h0, double h1, double d0, double d1) {
    double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0) return 0;
    if (d0 * d1 < 0 && std::abs(m) > 3 * std::abs(d0)) return 3 * d0;
    return m;
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace lamwave
