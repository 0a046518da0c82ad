#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace spikefisher::detail {

// Dense polynomials, coefficients ascending in degree.
using Poly = std::vector<double>;

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

inline Poly poly_axpy(Poly a, const Poly& b, double scale) {
  if (b.size() > a.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += scale * b[i];
  return a;
}

inline Poly poly_deriv(const Poly& a) {
  if (a.size() <= 1) return {0.0};
  Poly r(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * (double)i;
  return r;
}

inline Poly poly_shift_mul_m(const Poly& a) {  // multiply by m
  Poly r(a.size() + 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i + 1] = a[i];
  return r;
}

template <typename Scalar>
Scalar poly_eval(const std::vector<double>& a, Scalar m) {
  Scalar r = Scalar(0);
  for (std::size_t i = a.size(); i-- > 0;) r = r * m + a[i];
  return r;
}

// Parlett-Reinsch balancing (diagonal similarity by powers of two).
inline void balance_in_place(Eigen::MatrixXcd& a) {
  const int n = (int)a.rows();
  const double radix = 2.0, sqrdx = radix * radix;
  bool again = true;
  while (again) {
    again = false;
    for (int i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        again = true;
        for (int j = 0; j < n; ++j) a(i, j) /= f;
        for (int j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Newton refinement in extended precision; kept only when it reduces |p|.
inline std::complex<double> polish_root(const std::vector<std::complex<double>>& q,
                                        std::complex<double> r0) {
  using cl = std::complex<long double>;
  const auto eval = [&q](const cl& m, cl& p, cl& dp) {
    p = cl(0.0L);
    dp = cl(0.0L);
    for (std::size_t i = q.size(); i-- > 0;) {
      dp = dp * m + p;
      p = p * m + cl(q[i].real(), q[i].imag());
    }
  };
  cl r(r0.real(), r0.imag());
  cl p, dp;
  eval(r, p, dp);
  long double best = std::abs(p);
  cl best_r = r;
  for (int it = 0; it < 6 && std::abs(dp) > 0.0L; ++it) {
    r -= p / dp;
    eval(r, p, dp);
    if (std::abs(p) < best) {
      best = std::abs(p);
      best_r = r;
    }
  }
  return {(double)best_r.real(), (double)best_r.imag()};
}

// Roots via the balanced companion matrix of the rescaled polynomial, polished
// by Newton steps. Only exactly-zero extreme coefficients are factored out: a
// small leading coefficient next to huge interior ones is genuine structure
// when the roots span several orders of magnitude.
inline std::vector<std::complex<double>> poly_roots(std::vector<std::complex<double>> c) {
  using cd = std::complex<double>;
  double scale = 0.0;
  for (const cd& v : c) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw std::invalid_argument("poly_roots: zero polynomial");
  std::vector<cd> roots;
  while (c.size() > 1 && std::abs(c.back()) == 0.0) c.pop_back();
  while (c.size() > 1 && std::abs(c.front()) == 0.0) {
    roots.emplace_back(0.0);
    c.erase(c.begin());
  }
  const int n = (int)c.size() - 1;
  if (n < 1) return roots;
  // substitute m = s u so the extreme coefficients match in magnitude
  double s = std::pow(std::abs(c.front()) / std::abs(c.back()), 1.0 / n);
  if (!std::isfinite(s) || s <= 0.0) s = 1.0;
  std::vector<cd> q(c.size());
  double pw = 1.0;
  for (int i = 0; i <= n; ++i, pw *= s) q[i] = c[i] * pw;
  double qmax = 0.0;
  for (const cd& v : q) qmax = std::max(qmax, std::abs(v));
  for (cd& v : q) v /= qmax;
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -q[i] / q[n];
  balance_in_place(comp);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  for (int i = 0; i < n; ++i) roots.push_back(s * polish_root(q, es.eigenvalues()(i)));
  return roots;
}

inline std::vector<std::complex<double>> poly_roots(const Poly& p) {
  std::vector<std::complex<double>> c(p.begin(), p.end());
  return poly_roots(std::move(c));
}

}  // namespace spikefisher::detail
