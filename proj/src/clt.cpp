#include "spikefisher/clt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadrature.hpp"

namespace spikefisher {

namespace {

constexpr double k_pi = 3.14159265358979323846;

void check_inputs(double c1, double c2, const MomentProfile& moments, const char* who) {
  if (!(c1 > 0.0) || !std::isfinite(c1))
    throw std::invalid_argument(std::string(who) + ": c1 must be positive");
  if (!(c2 >= 0.0 && c2 < 1.0))
    throw std::invalid_argument(std::string(who) + ": c2 must lie in [0,1)");
  moments.validate();
}

cplx sq(cplx v) { return v * v; }

// ---- low-rank circle method ----------------------------------------------
//
// With H = delta_1 the support pulls back to the unit circle through
// z(xi) = (1 + h^2 + 2h Re xi) / (1-c2)^2, and f(z(xi)) has a Laurent
// expansion sum_m b_m xi^m with b_{-m} = b_m real on the annulus where it is
// analytic. Negative powers integrate to zero against every kernel below, so
// each term reduces to the one-sided series B(a) = sum_{m>=0} b_m a^m and its
// derivatives at a in {1, -1, -c2/h}, which also settles the r -> 1 limit of
// the pole pair at +-1/r exactly.

std::vector<double> circle_coeffs(const SpectralFn& f, double c2, double h, int n) {
  const double scale = 1.0 / ((1.0 - c2) * (1.0 - c2));
  const int half = n / 2;
  std::vector<double> vals(half + 1);
  for (int j = 0; j <= half; ++j)
    vals[j] = f((1.0 + h * h + 2.0 * h * std::cos(2.0 * k_pi * j / n)) * scale);
  std::vector<double> bm(half + 1);
  for (int m = 0; m <= half; ++m) bm[m] = vals[0] + (m % 2 ? -vals[half] : vals[half]);
  for (int j = 1; j < half; ++j) {
    const double ct = std::cos(2.0 * k_pi * j / n);
    const double vj = 2.0 * vals[j];
    double c_prev = 1.0, c_cur = ct;
    bm[0] += vj;
    bm[1] += vj * ct;
    for (int m = 2; m <= half; ++m) {
      const double c_next = 2.0 * ct * c_cur - c_prev;
      bm[m] += vj * c_next;
      c_prev = c_cur;
      c_cur = c_next;
    }
  }
  for (double& b : bm) b /= n;
  return bm;
}

// ---- general rectangle-contour method -------------------------------------

struct ContourNode {
  cplx z;    // evaluation point on the upper half of the rectangle
  cplx w;    // Gauss-Legendre weight times dz, counterclockwise orientation
  cplx m0;   // branch value m0(z)
  cplx m0p;  // dm0/dz
  cplx f;    // f(z)
};

struct Rect {
  double xl = 0.0, xr = 0.0, eta = 0.0;
};

void add_segment(std::vector<ContourNode>& nodes, cplx za, cplx zb, const detail::GlRule& rule) {
  const cplx mid = 0.5 * (za + zb), halfd = 0.5 * (zb - za);
  for (std::size_t i = 0; i < rule.x.size(); ++i)
    nodes.push_back({mid + halfd * rule.x[i], halfd * rule.w[i], {}, {}, {}});
}

// Upper boundary of the rectangle traversed counterclockwise: right side
// upward, top right-to-left, left side downward. Vertical runs are split
// into geometrically graded panels so the nodes cluster toward the real
// axis where the edge singularities of the transform sit closest.
std::vector<ContourNode> build_upper_path(const Rect& r, int top_nodes, int side_panels,
                                          int side_panel_nodes, int* top_start) {
  const auto& side_rule = detail::gauss_legendre(side_panel_nodes);
  const auto& top_rule = detail::gauss_legendre(top_nodes);
  std::vector<double> brk{0.0};
  for (int k = side_panels - 1; k >= 0; --k) brk.push_back(r.eta * std::pow(4.0, -k));
  std::vector<ContourNode> nodes;
  nodes.reserve(2 * side_panels * side_panel_nodes + top_nodes);
  for (std::size_t j = 0; j + 1 < brk.size(); ++j)
    add_segment(nodes, cplx(r.xr, brk[j]), cplx(r.xr, brk[j + 1]), side_rule);
  *top_start = static_cast<int>(nodes.size());
  add_segment(nodes, cplx(r.xr, r.eta), cplx(r.xl, r.eta), top_rule);
  for (std::size_t j = brk.size() - 1; j >= 1; --j)
    add_segment(nodes, cplx(r.xl, brk[j]), cplx(r.xl, brk[j - 1]), side_rule);
  return nodes;
}

// Branch values by continuation: both chains start from the far-field top
// corner where the cold start is unambiguous, then walk node to node.
void solve_branch(std::vector<ContourNode>& nodes, int top_start, const FisherLsdMap& map,
                  const SpectralFn& f) {
  std::optional<cplx> hint;
  for (std::size_t i = top_start; i < nodes.size(); ++i) {
    nodes[i].m0 = map.m0_at(nodes[i].z, hint);
    hint = nodes[i].m0;
  }
  hint = nodes[top_start].m0;
  for (int i = top_start - 1; i >= 0; --i) {
    nodes[i].m0 = map.m0_at(nodes[i].z, hint);
    hint = nodes[i].m0;
  }
  for (auto& n : nodes) {
    n.m0p = map.dm0_dz(n.m0);
    n.f = f.eval(n.z);
  }
}

// Boundary values along the upper side of one support interval, placed at
// x = lo + (hi - lo) sin^2(theta) so the quadrature weight absorbs the
// square-root vanishing of dz/dm0 at both edges.
struct BankNode {
  double v = 0.0;  // quadrature weight including the edge substitution
  double f = 0.0;  // f(x), real on the support
  cplx m0;         // boundary branch value, Im m0 <= 0
  cplx m0p;        // dm0/dz just above the cut
};

std::vector<BankNode> build_bank(const SpectralFn& f, const FisherLsdMap& map,
                                 const std::vector<std::pair<double, double>>& intervals, int n) {
  const auto& rule = detail::gauss_legendre(n);
  const std::size_t nn = rule.x.size();
  std::vector<BankNode> bank;
  bank.reserve(nn * intervals.size());
  std::vector<BankNode> part(nn);
  std::vector<double> xs(nn);
  for (const auto& iv : intervals) {
    const double len = iv.second - iv.first;
    for (std::size_t i = 0; i < nn; ++i) {
      const double theta = 0.25 * k_pi * (rule.x[i] + 1.0);
      const double s = std::sin(theta);
      xs[i] = iv.first + len * s * s;
      part[i].v = 0.25 * k_pi * len * std::sin(2.0 * theta) * rule.w[i];
      part[i].f = f(xs[i]);
    }
    // solve outward from the interval middle so every root continues a
    // close neighbor; the edges are where the branches collide
    std::optional<cplx> hint;
    for (std::size_t i = nn / 2; i < nn; ++i) {
      part[i].m0 = map.density_at(xs[i], hint).m0;
      hint = part[i].m0;
    }
    hint = part[nn / 2].m0;
    for (std::size_t i = nn / 2; i-- > 0;) {
      part[i].m0 = map.density_at(xs[i], hint).m0;
      hint = part[i].m0;
    }
    for (auto& bn : part) bn.m0p = map.dm0_dz(bn.m0);
    bank.insert(bank.end(), part.begin(), part.end());
  }
  return bank;
}

// One full evaluation of all mean and variance terms. The closed contour
// integral over the full rectangle of a conjugation symmetric integrand
// equals 2i Im of the upper-path sum. In the variance cross-term the inner
// contour is collapsed onto the support cut, so its full circuit reduces to
// the jump of the integrand across the banks (lower-bank values are
// conjugates of upper-bank ones for fixed complex outer z).
MeanVar contour_pass(const SpectralFn& f, const FisherLsdMap& map, const MomentProfile& mom,
                     const Rect& outer_rect, const std::vector<BankNode>& bank, int top_nodes,
                     int side_panels, int side_panel_nodes) {
  const double c1 = map.c1(), c2 = map.c2();
  const SpectrumH& hs = map.h();
  const std::size_t natoms = hs.size();

  int top_start = 0;
  auto outer = build_upper_path(outer_rect, top_nodes, side_panels, side_panel_nodes, &top_start);
  solve_branch(outer, top_start, map, f);

  cplx acc_q(0.0), acc_bx(0.0), acc_by(0.0);
  std::vector<cplx> acc_atom(natoms, cplx(0.0));
  for (const auto& n : outer) {
    const cplx m0 = n.m0;
    const cplx v1 = m0 * map.atom_integral(0, 1, m0);
    const cplx v2 = m0 * m0 * map.atom_integral(0, 2, m0);
    const cplx i13 = map.atom_integral(1, 3, m0);
    const cplx d = 1.0 - c2 * v2;  // the second log bracket
    // first bracket rearranged as (1-c1) + c1 (2V1 - V2 - c2 V1^2)/D, which
    // stays finite as c2 -> 0
    const cplx g1 = (1.0 - c1) + c1 * (2.0 * v1 - v2 - c2 * v1 * v1) / d;
    const cplx nn = 1.0 - c2 * v1;
    const cplx v1p = map.atom_integral(1, 2, m0);
    const cplx v2p = 2.0 * m0 * i13;
    const cplx dg1 = c1 * nn * (2.0 * v1p * d - nn * v2p) / (d * d);
    const cplx dg2 = -c2 * v2p;
    const cplx wf = n.w * n.f;
    acc_q += wf * n.m0p * (dg1 / g1 + dg2 / d);
    const cplx um = map.underline_m(m0);
    acc_bx += wf * um * um * m0 * m0 * map.atom_integral(2, 3, m0) / (g1 * d);
    acc_by += wf * map.dunderline_m_dm0(m0) * n.m0p * m0 * m0 * m0 * i13 / d;
    for (std::size_t i = 0; i < natoms; ++i) acc_atom[i] += wf * n.m0p / sq(hs.t[i] + m0);
  }
  const double mu = mom.q / (2.0 * k_pi) * acc_q.imag() -
                    mom.beta_x * c1 / k_pi * acc_bx.imag() +
                    mom.beta_y * c2 / k_pi * acc_by.imag();
  double nu23 = 0.0;
  for (std::size_t i = 0; i < natoms; ++i)
    nu23 += hs.w[i] * hs.t[i] * hs.t[i] * acc_atom[i].imag() * acc_atom[i].imag();
  nu23 *= (mom.beta_x * c1 + mom.beta_y * c2) / (k_pi * k_pi);

  cplx acc(0.0);
  for (const auto& n : outer) {
    cplx s(0.0);
    for (const auto& bn : bank)
      s += bn.v * bn.f *
           (std::conj(bn.m0p) / sq(std::conj(bn.m0) - n.m0) - bn.m0p / sq(bn.m0 - n.m0));
    acc += n.w * n.f * n.m0p * s;
  }
  const double nu1 = -(mom.q + 1.0) / (4.0 * k_pi * k_pi) * 2.0 * acc.real();

  MeanVar out;
  out.mu = mu;
  out.nu = nu1 + nu23;
  out.method = CltMethod::contour_general;
  return out;
}

}  // namespace

MeanVar meanvar_x_delta1(double c1, double c2, const MomentProfile& moments) {
  check_inputs(c1, c2, moments, "meanvar_x_delta1");
  const double h2 = c1 + c2 - c1 * c2;
  const double omc = 1.0 - c2;
  MeanVar out;
  out.mu = moments.q * c2 / (omc * omc) + moments.beta_y * c2 / omc;
  out.nu = (moments.q + 1.0) * h2 / (omc * omc * omc * omc) +
           (moments.beta_x * c1 + moments.beta_y * c2) / (omc * omc);
  out.method = CltMethod::closed_form;
  return out;
}

MeanVar meanvar_log_delta1(double c1, double c2, const MomentProfile& moments) {
  check_inputs(c1, c2, moments, "meanvar_log_delta1");
  const double h2 = c1 + c2 - c1 * c2;
  if (!(h2 < 1.0))
    throw std::domain_error("meanvar_log_delta1: h^2 >= 1, log statistic undefined");
  const double omc = 1.0 - c2;
  MeanVar out;
  out.mu = 0.5 * moments.q * std::log((1.0 - h2) / (omc * omc)) -
           0.5 * (moments.beta_x * c1 - moments.beta_y * c2);
  out.nu = -(moments.q + 1.0) * std::log(1.0 - h2) + moments.beta_x * c1 + moments.beta_y * c2;
  out.method = CltMethod::closed_form;
  return out;
}

MeanVar meanvar_regression(double c1, double c2) {
  check_inputs(c1, c2, MomentProfile::gaussian_real(), "meanvar_regression");
  const double h = std::sqrt(c1 + c2 - c1 * c2);
  const double omc = 1.0 - c2;
  const double a = (1.0 - h) * (1.0 - h) / (omc * omc);
  const double b = (1.0 + h) * (1.0 + h) / (omc * omc);
  const double cc = 0.5 * (std::sqrt(1.0 + c2 * b / c1) + std::sqrt(1.0 + c2 * a / c1));
  const double dd = 0.5 * (std::sqrt(1.0 + c2 * b / c1) - std::sqrt(1.0 + c2 * a / c1));
  const double denom = (cc * h - c2 * dd) * (cc * h - c2 * dd);
  MeanVar out;
  out.mu = 0.5 * std::log((cc * cc - dd * dd) * h * h / denom);
  out.nu = 2.0 * std::log(cc * cc / (cc * cc - dd * dd));
  out.method = CltMethod::closed_form;
  return out;
}

MeanVar meanvar_contour_lowrank(const SpectralFn& f, double c1, double c2,
                                const MomentProfile& moments, int grid) {
  check_inputs(c1, c2, moments, "meanvar_contour_lowrank");
  const double h2 = c1 + c2 - c1 * c2;
  if (!(h2 < 1.0))
    throw std::domain_error("meanvar_contour_lowrank: requires h^2 < 1 (one support interval)");
  const double h = std::sqrt(h2);
  const double u = c2 / h;  // pole location; u < 1 strictly
  int n = grid;
  if (n <= 0) {
    const double decay = std::max(h, u);
    const int need = static_cast<int>(36.0 / -std::log(decay)) + 64;
    n = 1024;
    while (n / 2 < need && n < 16384) n *= 2;
  }
  if (n < 64) throw std::invalid_argument("meanvar_contour_lowrank: grid too small");
  if (n % 2) ++n;

  const std::vector<double> bm = circle_coeffs(f, c2, h, n);
  const int mmax = n / 2;
  double b_one = 0.0, b_neg = 0.0, b_u = 0.0, b_up = 0.0, b_upp = 0.0, series = 0.0;
  double b_abs = 0.0;
  double pw = 1.0, pw1 = 0.0, pw2 = 0.0;  // (-u)^m, (-u)^{m-1}, (-u)^{m-2}
  double sgn = 1.0;
  for (int m = 0; m <= mmax; ++m) {
    const double b = bm[m];
    b_abs += std::abs(b);
    b_one += b;
    b_neg += sgn * b;
    b_u += b * pw;
    if (m >= 1) {
      b_up += m * b * pw1;
      series += m * b * b;
    }
    if (m >= 2) b_upp += m * (m - 1.0) * b * pw2;
    pw2 = pw1;
    pw1 = pw;
    pw *= -u;
    sgn = -sgn;
  }

  const double omc = 1.0 - c2;
  MeanVar out;
  out.mu = 0.5 * moments.q * (b_one + b_neg - 2.0 * b_u) +
           moments.beta_x * c1 * omc * omc / h2 * 0.5 * b_upp +
           moments.beta_y * omc * u * (omc / (2.0 * h) * b_upp + b_up);
  out.nu = (moments.q + 1.0) * series +
           (moments.beta_x * c1 + moments.beta_y * c2) * omc * omc / h2 * b_up * b_up;
  out.method = CltMethod::contour_lowrank;
  // truncation tail plus the roundoff floor of the length-n recurrence
  out.quad_error = mmax * (std::abs(bm[mmax]) + std::abs(bm[mmax - 1])) +
                   32.0 * n * std::numeric_limits<double>::epsilon() * b_abs;
  if (!(out.nu > 0.0))
    throw std::runtime_error("meanvar_contour_lowrank: nonpositive variance estimate");
  return out;
}

MeanVar meanvar_contour_general(const SpectralFn& f, double c1, double c2, const SpectrumH& h,
                                const MomentProfile& moments, const ContourOptions& opts) {
  if (!f.analytic())
    throw std::invalid_argument("meanvar_contour_general: f must be a built-in analytic kind");
  check_inputs(c1, c2, moments, "meanvar_contour_general");
  if (opts.top_nodes < 8 || opts.side_panels < 1 || opts.side_panel_nodes < 4 ||
      opts.bank_nodes < 16)
    throw std::invalid_argument("meanvar_contour_general: too few contour nodes");
  if (!(opts.lo_clearance > 0.0 && opts.lo_clearance < 1.0) || !(opts.hi_clearance > 0.0))
    throw std::invalid_argument("meanvar_contour_general: invalid clearance configuration");

  FisherLsdMap map(c1, c2, h);
  const auto sup = map.support();
  if (sup.point_mass > 0.0)
    throw std::domain_error(
        "meanvar_contour_general: point mass at zero falls outside the contour (requires c1 < 1)");
  const double a = sup.intervals.front().first;
  const double b = sup.intervals.back().second;
  if (!(a > 0.0)) throw std::domain_error("meanvar_contour_general: support touches zero");

  Rect outer;
  outer.xl = a * (1.0 - opts.lo_clearance);
  outer.xr = b * (1.0 + opts.hi_clearance);
  outer.eta = opts.height > 0.0 ? opts.height : 0.35 * (outer.xr - outer.xl);

  auto bank = build_bank(f, map, sup.intervals, opts.bank_nodes);
  MeanVar fine = contour_pass(f, map, moments, outer, bank, opts.top_nodes, opts.side_panels,
                              opts.side_panel_nodes);
  if (opts.error_estimate) {
    const int ct = std::max(8, 2 * opts.top_nodes / 3);
    const int cs = std::max(4, 2 * opts.side_panel_nodes / 3);
    auto coarse_bank = build_bank(f, map, sup.intervals, std::max(16, 2 * opts.bank_nodes / 3));
    MeanVar coarse = contour_pass(f, map, moments, outer, coarse_bank, ct, opts.side_panels, cs);
    fine.quad_error = std::max(std::abs(fine.mu - coarse.mu), std::abs(fine.nu - coarse.nu));
  }
  if (!(fine.nu > 0.0))
    throw std::runtime_error("meanvar_contour_general: nonpositive variance, quadrature failed");
  return fine;
}

}  // namespace spikefisher
