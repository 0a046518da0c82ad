#include "spikefisher/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "poly.hpp"
#include "quadrature.hpp"

namespace spikefisher {
namespace {

using detail::Poly;

constexpr double kPi = 3.14159265358979323846;

std::string num_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct MapPolys {
  Poly pi;    // prod_i (t_i + m)
  Poly sigw;  // sum_i w_i prod_{j != i} (t_j + m)
  Poly a;     // z numerator  -((1-c1) m Pi + c1 m^2 Sigw)
  Poly b;     // z denominator  Pi - c2 m Sigw
  Poly dnum;  // z' numerator  A'B - AB'
};

MapPolys build_polys(double c1, double c2, const SpectrumH& h) {
  MapPolys mp;
  const int k = (int)h.t.size();
  mp.pi = {1.0};
  for (int i = 0; i < k; ++i) mp.pi = detail::poly_mul(mp.pi, {h.t[i], 1.0});
  mp.sigw = {0.0};
  for (int i = 0; i < k; ++i) {
    Poly term = {h.w[i]};
    for (int j = 0; j < k; ++j)
      if (j != i) term = detail::poly_mul(term, {h.t[j], 1.0});
    mp.sigw = detail::poly_axpy(std::move(mp.sigw), term, 1.0);
  }
  const Poly mpi = detail::poly_shift_mul_m(mp.pi);
  const Poly msw = detail::poly_shift_mul_m(mp.sigw);
  const Poly m2sw = detail::poly_shift_mul_m(msw);
  mp.a = detail::poly_axpy(Poly{0.0}, mpi, -(1.0 - c1));
  mp.a = detail::poly_axpy(std::move(mp.a), m2sw, -c1);
  mp.b = detail::poly_axpy(mp.pi, msw, -c2);
  mp.dnum = detail::poly_axpy(detail::poly_mul(detail::poly_deriv(mp.a), mp.b),
                              detail::poly_mul(mp.a, detail::poly_deriv(mp.b)), -1.0);
  return mp;
}

void check_ratios(double c1, double c2, const char* what) {
  if (!(c1 > 0.0) || !std::isfinite(c1))
    throw std::invalid_argument(std::string(what) + ": c1 must be positive");
  if (!(c2 >= 0.0 && c2 < 1.0))
    throw std::invalid_argument(std::string(what) + ": c2 must lie in [0, 1)");
}

// Real critical pairs (x*, m*) of z(m), i.e. z'(m*) = 0 with x* = z(m*) finite
// and nonnegative.
std::vector<std::pair<double, double>> critical_pairs(const MapPolys& mp) {
  std::vector<std::pair<double, double>> out;
  for (const cplx& r : detail::poly_roots(mp.dnum)) {
    if (std::abs(r.imag()) > 1e-8 * (1.0 + std::abs(r))) continue;
    const double m = r.real();
    const double bb = detail::poly_eval(mp.b, m);
    const double aa = detail::poly_eval(mp.a, m);
    if (std::abs(bb) < 1e-13 * (1.0 + std::abs(aa))) continue;
    const double x = aa / bb;
    if (!std::isfinite(x)) continue;
    if (x < -1e-9 * (1.0 + std::abs(x))) continue;
    out.emplace_back(std::max(x, 0.0), m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Adaptive Gauss-Legendre on one support interval under x = lo + (hi-lo) sin^2(theta),
// which absorbs the square-root edge behavior. Returns (int f rho, int rho).
template <typename Density>
std::pair<double, double> integrate_interval(double lo, double hi, const SpectralFn* f,
                                             Density&& den) {
  double prev_f = 0.0, prev_m = 0.0;
  double acc_f = 0.0, acc_m = 0.0;
  for (int n = 64; n <= 8192; n *= 2) {
    const auto& rule = detail::gauss_legendre(n);
    acc_f = 0.0;
    acc_m = 0.0;
    for (int j = 0; j < n; ++j) {
      const double theta = 0.25 * kPi * (rule.x[j] + 1.0);
      const double s = std::sin(theta);
      const double x = lo + (hi - lo) * s * s;
      const double wt = rule.w[j] * 0.25 * kPi * (hi - lo) * std::sin(2.0 * theta);
      const double d = den(x);
      acc_m += wt * d;
      if (f) acc_f += wt * d * (*f)(x);
    }
    if (n > 64 && std::abs(acc_m - prev_m) < 1e-10 + 1e-9 * std::abs(acc_m) &&
        (!f || std::abs(acc_f - prev_f) < 1e-10 + 1e-9 * std::abs(acc_f)))
      break;
    prev_f = acc_f;
    prev_m = acc_m;
  }
  return {acc_f, acc_m};
}

// Density evaluator over one interval along ascending x. The branch is pinned
// just above the axis, where the Herglotz sign test identifies it even across
// the narrow throats of barely-merged spike islands; the hint only breaks
// degenerate ties. Resets when the sweep restarts.
struct HintedDensity {
  const FisherLsdMap* map;
  double left_m0;
  cplx hint;
  double last_x = -std::numeric_limits<double>::infinity();

  HintedDensity(const FisherLsdMap& m, double lm) : map(&m), left_m0(lm), hint(lm, 0.0) {}

  // Newton continuation from the previous node; accepted only when the
  // residual vanishes and the root passes the same Herglotz sign tests that
  // m0_at applies, so a failure (e.g. near an edge, where dz/dm0 -> 0) falls
  // back to the full root enumeration.
  std::optional<cplx> newton_step(cplx z) const {
    cplx m = hint;
    for (int it = 0; it < 8; ++it) {
      const cplx resid = map->z_of_m0(m) - z;
      if (std::abs(resid) <= 1e-12 * (1.0 + std::abs(z))) {
        if (!(m.imag() < 0.0)) return std::nullopt;
        if (!(map->underline_m(m).imag() > 0.0)) return std::nullopt;
        if (!(map->m_f(m, z).imag() > 0.0)) return std::nullopt;
        return m;
      }
      const cplx slope = map->dz_dm0(m);
      if (!(std::abs(slope) > 0.0)) return std::nullopt;
      m -= resid / slope;
      if (!std::isfinite(m.real()) || !std::isfinite(m.imag())) return std::nullopt;
    }
    return std::nullopt;
  }

  double operator()(double x) {
    if (x < last_x) hint = cplx(left_m0, 0.0);
    if (!std::isfinite(left_m0)) return map->density_at(x).density;
    const cplx z(x, 1e-8 * (1.0 + x));
    cplx m0;
    if (auto fast = (last_x > -std::numeric_limits<double>::infinity()) ? newton_step(z)
                                                                        : std::nullopt)
      m0 = *fast;
    else
      m0 = map->m0_at(z, hint);
    hint = m0;
    last_x = x;
    return std::max(0.0, map->m_f(m0, z).imag() / kPi);
  }
};

}  // namespace

StieltjesSolution solve_stieltjes_mc2(cplx z, double c2, const SpectrumH& h,
                                      const StieltjesOptions& opts) {
  h.validate();
  if (!(c2 >= 0.0 && c2 < 1.0))
    throw std::invalid_argument("solve_stieltjes_mc2: c2 must lie in [0, 1)");
  if (std::abs(z) == 0.0) throw std::invalid_argument("solve_stieltjes_mc2: z must be nonzero");
  const auto sum_s = [&](cplx m) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < h.t.size(); ++i) acc += h.w[i] / (h.t[i] + m);
    return acc;
  };
  const double zscale = 1.0 + std::abs(z);
  cplx m = opts.initial ? *opts.initial
                        : -1.0 / z + cplx(0.0, z.imag() >= 0.0 ? 0.25 : -0.25) / zscale;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const cplx denom = z - c2 * sum_s(m);
    if (std::abs(denom) < 1e-300) {
      m += cplx(1e-8, 1e-8);
      continue;
    }
    const cplx next = (1.0 - opts.damping) * m + opts.damping * (-1.0 / denom);
    const bool done = std::abs(next - m) < opts.tol * (1.0 + std::abs(next));
    m = next;
    if (done) break;
  }
  for (int k = 0; k < 12; ++k) {  // Newton polish
    const cplx g = -1.0 / m + c2 * sum_s(m) - z;
    cplx gp = 1.0 / (m * m);
    for (std::size_t i = 0; i < h.t.size(); ++i) {
      const cplx d = h.t[i] + m;
      gp -= c2 * h.w[i] / (d * d);
    }
    if (std::abs(gp) < 1e-300) break;
    const cplx step = g / gp;
    m -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(m))) break;
  }
  const double res = std::abs(-1.0 / m + c2 * sum_s(m) - z);
  if (!(res < 1e-8 * zscale))
    throw std::runtime_error("solve_stieltjes_mc2: no convergence, residual " + num_str(res));
  if (z.imag() > 1e-12 && m.imag() < -1e-12)
    throw std::runtime_error("solve_stieltjes_mc2: converged to a non-Herglotz branch");
  return {m, it, res};
}

FisherLsdMap::FisherLsdMap(double c1, double c2, SpectrumH h)
    : c1_(c1), c2_(c2), h_(std::move(h)) {
  check_ratios(c1_, c2_, "fisher_lsd");
  h_.validate();
  MapPolys mp = build_polys(c1_, c2_, h_);
  pi_ = std::move(mp.pi);
  sigw_ = std::move(mp.sigw);
  a_ = std::move(mp.a);
  b_ = std::move(mp.b);
  dnum_ = std::move(mp.dnum);
}

cplx FisherLsdMap::atom_integral(int a, int b, cplx m0) const {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < h_.t.size(); ++i) {
    double ta = 1.0;
    for (int j = 0; j < a; ++j) ta *= h_.t[i];
    const cplx d = h_.t[i] + m0;
    cplx db = 1.0;
    for (int j = 0; j < b; ++j) db *= d;
    acc += h_.w[i] * ta / db;
  }
  return acc;
}

cplx FisherLsdMap::z_of_m0(cplx m0) const {
  return detail::poly_eval(a_, m0) / detail::poly_eval(b_, m0);
}

cplx FisherLsdMap::dz_dm0(cplx m0) const {
  const cplx bb = detail::poly_eval(b_, m0);
  return detail::poly_eval(dnum_, m0) / (bb * bb);
}

cplx FisherLsdMap::underline_m(cplx m0) const {
  // (1 - c2 (1 - K)) / m0 = B(m0) / (m0 Pi(m0))
  return detail::poly_eval(b_, m0) / (m0 * detail::poly_eval(pi_, m0));
}

cplx FisherLsdMap::dunderline_m_dm0(cplx m0) const {
  const cplx kprime = -atom_integral(1, 2, m0);  // dK/dm0
  const cplx d = 1.0 - c2_ * (1.0 - atom_integral(1, 1, m0));
  return (c2_ * kprime * m0 - d) / (m0 * m0);
}

cplx FisherLsdMap::m_f(cplx m0, cplx z) const {
  return (underline_m(m0) + (1.0 - c1_) / z) / c1_;
}

cplx FisherLsdMap::dm0_dz(cplx m0) const { return 1.0 / dz_dm0(m0); }

std::vector<cplx> FisherLsdMap::branch_roots(cplx z) const {
  const std::size_t n = std::max(a_.size(), b_.size());
  std::vector<cplx> coeff(n, 0.0);
  for (std::size_t i = 0; i < b_.size(); ++i) coeff[i] += z * b_[i];
  for (std::size_t i = 0; i < a_.size(); ++i) coeff[i] -= a_[i];
  return detail::poly_roots(std::move(coeff));
}

cplx FisherLsdMap::m0_at(cplx z, std::optional<cplx> hint) const {
  const auto roots = branch_roots(z);
  if (roots.empty()) throw std::runtime_error("fisher_lsd: branch polynomial has no roots");
  const double imag_tol = 1e-13 * (1.0 + std::abs(z));
  const double sgn = z.imag() > imag_tol ? 1.0 : (z.imag() < -imag_tol ? -1.0 : 0.0);
  std::vector<cplx> cands;
  if (sgn != 0.0) {
    for (const cplx& r : roots) {
      if (!(r.imag() * sgn < 0.0)) continue;
      if (!(underline_m(r).imag() * sgn > 0.0)) continue;
      if (!(m_f(r, z).imag() * sgn > 0.0)) continue;
      cands.push_back(r);
    }
    if (cands.size() == 1) return cands[0];
    if (cands.empty()) cands = roots;
  } else {
    cands = roots;
  }
  if (!hint) return m0_far_start(z);
  cplx best = cands[0];
  double bd = std::numeric_limits<double>::infinity();
  for (const cplx& r : cands) {
    const double d = std::abs(r - *hint);
    if (d < bd) {
      bd = d;
      best = r;
    }
  }
  return best;
}

cplx FisherLsdMap::m0_far_start(cplx z0) const {
  const double scale = std::abs(z0) + h_.t_max() + 1.0;
  const cplx zf = z0 + cplx(1.0, 1.0) * (60.0 * scale);
  const cplx asym = -(1.0 - c2_) * zf;
  cplx m = asym;
  {
    double bd = std::numeric_limits<double>::infinity();
    for (const cplx& r : branch_roots(zf)) {
      const double d = std::abs(r - asym);
      if (d < bd) {
        bd = d;
        m = r;
      }
    }
  }
  const cplx dz = zf - z0;
  for (double s = 0.75; s * std::abs(dz) > 1e-12 * scale; s *= 0.75)
    m = m0_at(z0 + dz * s, m);
  return m0_at(z0, m);
}

FisherLsdMap::Boundary FisherLsdMap::density_at(double x, std::optional<cplx> hint) const {
  if (!(x > 0.0)) throw std::invalid_argument("fisher_lsd: density requested at non-positive x");
  const auto roots = branch_roots(cplx(x, 0.0));
  if (roots.empty()) throw std::runtime_error("fisher_lsd: branch polynomial has no roots");
  Boundary out;
  if (hint) {
    cplx best = roots[0];
    double bd = std::numeric_limits<double>::infinity();
    for (const cplx& r : roots) {
      const double d = std::abs(r - *hint);
      if (d < bd) {
        bd = d;
        best = r;
      }
    }
    if (best.imag() > 0.0) best = std::conj(best);  // real coefficients: conjugate is a root
    out.m0 = best;
    out.density = std::max(0.0, m_f(best, cplx(x, 0.0)).imag() / kPi);
    return out;
  }
  double bestden = -1.0;
  cplx bestroot = roots[0];
  double realest = std::numeric_limits<double>::infinity();
  cplx realroot = roots[0];
  for (const cplx& r : roots) {
    const cplx rr = r.imag() > 0.0 ? std::conj(r) : r;
    const double den = m_f(rr, cplx(x, 0.0)).imag() / kPi;
    if (den > bestden) {
      bestden = den;
      bestroot = rr;
    }
    if (std::abs(rr.imag()) < realest) {
      realest = std::abs(rr.imag());
      realroot = rr;
    }
  }
  if (bestden > 1e-10) {
    out.m0 = bestroot;
    out.density = bestden;
  } else {
    out.m0 = realroot;
    out.density = 0.0;
  }
  return out;
}

FisherLsdMap::Support FisherLsdMap::support() const {
  MapPolys mp;
  mp.pi = pi_;
  mp.sigw = sigw_;
  mp.a = a_;
  mp.b = b_;
  mp.dnum = dnum_;
  auto crit = critical_pairs(mp);
  if (crit.empty()) throw std::runtime_error("fisher_lsd: no support edges found");
  // merge near-coincident critical values
  std::vector<std::pair<double, double>> uniq;
  for (const auto& c : crit) {
    if (!uniq.empty() && std::abs(c.first - uniq.back().first) <= 1e-10 * (1.0 + std::abs(c.first)))
      continue;
    uniq.push_back(c);
  }
  const int n = (int)uniq.size();
  std::vector<bool> inside(n + 1, false);  // cell i spans (x_{i-1}, x_i), cell n ignored
  for (int i = 0; i < n; ++i) {
    const double lo = i == 0 ? 0.0 : uniq[i - 1].first;
    const double hi = uniq[i].first;
    if (!(hi > lo * (1.0 + 1e-12) + 1e-300)) continue;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > 0.0)) continue;
    inside[i] = density_at(mid).density > 1e-8;
  }
  Support sup;
  sup.point_mass = c1_ > 1.0 ? 1.0 - 1.0 / c1_ : 0.0;
  int i = 0;
  while (i < n) {
    if (!inside[i]) {
      ++i;
      continue;
    }
    const double lo = i == 0 ? 0.0 : uniq[i - 1].first;
    const double lom = i == 0 ? std::numeric_limits<double>::quiet_NaN() : uniq[i - 1].second;
    int j = i;
    while (j + 1 < n && inside[j + 1]) ++j;
    sup.intervals.emplace_back(lo, uniq[j].first);
    sup.left_edge_m0.push_back(lom);
    i = j + 1;
  }
  if (sup.intervals.empty()) throw std::runtime_error("fisher_lsd: empty continuous support");
  return sup;
}

double wachter_density(double x, double c1, double c2, double t) {
  check_ratios(c1, c2, "wachter_density");
  if (!(t > 0.0)) throw std::invalid_argument("wachter_density: atom must be positive");
  const auto [a, b] = wachter_edges(c1, c2, 1.0);
  const double u = x / t;
  if (u <= a || u >= b) return 0.0;
  return (1.0 - c2) * std::sqrt((b - u) * (u - a)) / (2.0 * kPi * u * (c1 + c2 * u)) / t;
}

std::pair<double, double> wachter_edges(double c1, double c2, double t) {
  check_ratios(c1, c2, "wachter_edges");
  if (!(t > 0.0)) throw std::invalid_argument("wachter_edges: atom must be positive");
  const double h = std::sqrt(c1 + c2 - c1 * c2);
  const double s = (1.0 - c2) * (1.0 - c2);
  return {t * (1.0 - h) * (1.0 - h) / s, t * (1.0 + h) * (1.0 + h) / s};
}

double LsdDensity::total_mass() const {
  double m = point_mass;
  for (double v : interval_mass) m += v;
  return m;
}

double LsdDensity::cdf(double x) const {
  double acc = x >= 0.0 ? point_mass : 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto [lo, hi] = intervals[i];
    if (x >= hi) {
      acc += interval_mass[i];
      continue;
    }
    if (x <= lo) break;
    // trapezoid over this interval's grid slice up to x (grid is globally ascending)
    const std::size_t j0 =
        std::lower_bound(grid_x.begin(), grid_x.end(), lo) - grid_x.begin();
    for (std::size_t j = j0 + 1; j < grid_x.size() && grid_x[j] <= hi; ++j) {
      if (grid_x[j] <= grid_x[j - 1]) break;
      if (grid_x[j] <= x) {
        acc += 0.5 * (grid_density[j] + grid_density[j - 1]) * (grid_x[j] - grid_x[j - 1]);
      } else {
        const double fr = (x - grid_x[j - 1]) / (grid_x[j] - grid_x[j - 1]);
        const double dv = grid_density[j - 1] + fr * (grid_density[j] - grid_density[j - 1]);
        acc += 0.5 * (grid_density[j - 1] + dv) * (x - grid_x[j - 1]);
        break;
      }
    }
    break;
  }
  return std::min(acc, 1.0);
}

LsdDensity fisher_lsd_density(double c1, double c2, const SpectrumH& h, int grid_size) {
  if (grid_size < 16) throw std::invalid_argument("fisher_lsd_density: grid too small");
  FisherLsdMap map(c1, c2, h);
  const auto sup = map.support();
  LsdDensity out;
  out.intervals = sup.intervals;
  out.point_mass = sup.point_mass;
  double wsum = 0.0;
  for (const auto& [lo, hi] : sup.intervals) wsum += hi - lo;
  const bool closed_form = h.size() == 1;
  for (std::size_t i = 0; i < sup.intervals.size(); ++i) {
    const auto [lo, hi] = sup.intervals[i];
    std::pair<double, double> r;
    if (closed_form) {
      r = integrate_interval(lo, hi, nullptr,
                             [&](double x) { return wachter_density(x, c1, c2, h.t[0]); });
    } else {
      HintedDensity den(map, sup.left_edge_m0[i]);
      r = integrate_interval(lo, hi, nullptr, std::ref(den));
    }
    out.interval_mass.push_back(r.second);
    const int ng = std::max(33, (int)std::lround(grid_size * (hi - lo) / wsum));
    HintedDensity den(map, sup.left_edge_m0[i]);
    for (int j = 0; j < ng; ++j) {
      const double theta = 0.5 * kPi * j / (ng - 1);
      const double s = std::sin(theta);
      const double x = lo + (hi - lo) * s * s;
      const double d = closed_form ? wachter_density(x, c1, c2, h.t[0])
                                   : (x > lo && x < hi ? den(x) : 0.0);
      out.grid_x.push_back(x);
      out.grid_density.push_back(d);
    }
  }
  const double tol = closed_form ? 1e-6 : 1e-3;
  if (std::abs(out.total_mass() - 1.0) > tol)
    throw std::runtime_error("fisher_lsd_density: recovered mass " + num_str(out.total_mass()) +
                             " misses 1");
  return out;
}

double psi(double alpha, double c1, double c2, const SpectrumH& h) {
  if (!(c1 >= 0.0) || !std::isfinite(c1)) throw std::invalid_argument("psi: c1 must be nonnegative");
  if (!(c2 >= 0.0 && c2 < 1.0)) throw std::invalid_argument("psi: c2 must lie in [0, 1)");
  h.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("psi: spike must be positive");
  double k = 0.0;
  for (std::size_t i = 0; i < h.t.size(); ++i) {
    if (std::abs(alpha - h.t[i]) < 1e-10 * (1.0 + h.t[i]))
      throw std::invalid_argument("psi: spike coincides with a population atom");
    k += h.w[i] * h.t[i] / (h.t[i] - alpha);
  }
  const double denom = 1.0 - c2 * (1.0 - k);
  if (std::abs(denom) < 1e-12)
    throw std::runtime_error("psi: map degenerates at alpha " + num_str(alpha));
  return alpha * (1.0 - c1 * k) / denom;
}

PsiDetachment psi_detachment(double c1, double c2, const SpectrumH& h) {
  check_ratios(c1, c2, "psi_detachment");
  h.validate();
  const MapPolys mp = build_polys(c1, c2, h);
  const double tmax = h.t_max();
  PsiDetachment det;
  bool found = false;
  for (const auto& [x, m] : critical_pairs(mp)) {
    if (m >= -tmax * (1.0 + 1e-12)) continue;
    if (!(x > 0.0)) continue;
    if (!found || x > det.psi_min) {
      det.alpha_c = -m;
      det.psi_min = x;
      found = true;
    }
  }
  if (!found) throw std::runtime_error("psi_detachment: no detachment point found");
  return det;
}

PsiInverse psi_inverse(double l, double c1, double c2, const SpectrumH& h) {
  if (!(l > 0.0)) throw std::invalid_argument("psi_inverse: eigenvalue must be positive");
  const PsiDetachment det = psi_detachment(c1, c2, h);
  if (l <= det.psi_min * (1.0 + 1e-12)) return {det.alpha_c, true};
  double lo = det.alpha_c;
  double hi = det.alpha_c * 2.0 + 1.0;
  const double cap = 1e12 * (1.0 + h.t_max());
  while (psi(hi, c1, c2, h) < l) {
    hi *= 2.0;
    if (hi > cap) throw std::runtime_error("psi_inverse: eigenvalue out of range");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (psi(mid, c1, c2, h) < l ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

namespace {

BulkCentering centering_core(const SpectralFn& f, double c1, double c2, const SpectrumH& h,
                             int p, const std::vector<double>& spike_images) {
  if (p <= 0) throw std::invalid_argument("centering_d1: p must be positive");
  FisherLsdMap map(c1, c2, h);
  const double pm = c1 > 1.0 ? 1.0 - 1.0 / c1 : 0.0;
  double pm_term = 0.0;
  if (pm > 0.0) {
    switch (f.kind) {
      case SpectralFn::Kind::x:
      case SpectralFn::Kind::log1p_scaled:
        break;
      case SpectralFn::Kind::log:
        throw std::domain_error("centering_d1: log statistic undefined with mass at zero");
      case SpectralFn::Kind::custom:
        pm_term = pm * f(0.0);
        break;
    }
  }
  const auto sup = map.support();
  const std::size_t ni = sup.intervals.size();
  std::vector<std::pair<double, double>> parts(ni);
  double mass = 0.0;
  std::size_t heaviest = 0;
  for (std::size_t i = 0; i < ni; ++i) {
    const auto [lo, hi] = sup.intervals[i];
    if (h.size() == 1) {
      parts[i] = integrate_interval(lo, hi, &f,
                                    [&](double x) { return wachter_density(x, c1, c2, h.t[0]); });
    } else {
      HintedDensity den(map, sup.left_edge_m0[i]);
      parts[i] = integrate_interval(lo, hi, &f, std::ref(den));
    }
    mass += parts[i].second;
    if (parts[i].second > parts[heaviest].second) heaviest = i;
  }
  mass += pm;
  const double tol = h.size() == 1 ? 1e-6 : 1e-3;
  if (std::abs(mass - 1.0) > tol)
    throw std::runtime_error("centering_d1: recovered mass " + num_str(mass) + " misses 1");
  BulkCentering out;
  double total = 0.0;
  for (std::size_t i = 0; i < ni; ++i) {
    const auto [lo, hi] = sup.intervals[i];
    // drop intervals holding a detached-spike image, but never the main bulk
    const bool spike = i != heaviest &&
                       std::any_of(spike_images.begin(), spike_images.end(), [&](double z) {
                         return z >= lo - 1e-9 * (1.0 + std::abs(lo)) &&
                                z <= hi + 1e-9 * (1.0 + std::abs(hi));
                       });
    if (spike) continue;
    total += parts[i].first;
    out.bulk_edge = hi;
  }
  out.value = p * (total + pm_term);
  return out;
}

}  // namespace

double centering_d1(const SpectralFn& f, double c1, double c2, const SpectrumH& h, int p) {
  return centering_core(f, c1, c2, h, p, {}).value;
}

BulkCentering centering_bulk(const SpectralFn& f, double c1, double c2, const SpectrumH& h,
                             int p, const std::vector<double>& spike_images) {
  return centering_core(f, c1, c2, h, p, spike_images);
}

SpectrumH spiked_population(const SpectrumH& h_base, const std::vector<double>& alphas,
                            const std::vector<int>& multiplicities, int p) {
  h_base.validate();
  if (alphas.size() != multiplicities.size())
    throw std::invalid_argument("spiked_population: alphas and multiplicities differ in length");
  int m_total = 0;
  for (int m : multiplicities) {
    if (m <= 0) throw std::invalid_argument("spiked_population: multiplicities must be positive");
    m_total += m;
  }
  if (p <= m_total)
    throw std::invalid_argument("spiked_population: p must exceed the total multiplicity");
  std::vector<std::pair<double, double>> atoms;
  const double base_w = (double)(p - m_total) / p;
  for (std::size_t i = 0; i < h_base.t.size(); ++i)
    atoms.emplace_back(h_base.t[i], h_base.w[i] * base_w);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    if (!(alphas[k] > 0.0))
      throw std::invalid_argument("spiked_population: spikes must be positive");
    atoms.emplace_back(alphas[k], (double)multiplicities[k] / p);
  }
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> t, w;
  for (const auto& [ti, wi] : atoms) {
    if (!t.empty() && std::abs(ti - t.back()) <= 1e-8 * (1.0 + ti)) {
      const double tw = w.back() + wi;
      t.back() = (t.back() * w.back() + ti * wi) / tw;
      w.back() = tw;
    } else {
      t.push_back(ti);
      w.push_back(wi);
    }
  }
  double wsum = 0.0;
  for (double v : w) wsum += v;
  for (double& v : w) v /= wsum;
  return SpectrumH::from_atoms(std::move(t), std::move(w));
}

}  // namespace spikefisher
