#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "spikefisher/spectral_fn.hpp"
#include "spikefisher/spectrum.hpp"

namespace spikefisher {

using cplx = std::complex<double>;

struct StieltjesOptions {
  int max_iter = 2000;
  double tol = 1e-12;
  double damping = 0.5;
  std::optional<cplx> initial;
};

struct StieltjesSolution {
  cplx m;
  int iterations = 0;
  double residual = 0.0;
};

// Solves z = -1/m + c2 * int dH(t)/(t+m) for the Herglotz branch by damped
// fixed-point iteration with Newton polish. Throws on non-convergence,
// carrying the last residual.
StieltjesSolution solve_stieltjes_mc2(cplx z, double c2, const SpectrumH& h,
                                      const StieltjesOptions& opts = {});

// The limiting spectral distribution of the Fisher ensemble with population
// spectral distribution H and ratios (c1, c2), handled through the rational
// parameterization z(m0) = -m0 (1 - c1 K(m0)) / (1 - c2 (1 - K(m0))),
// K(m0) = int t/(t+m0) dH(t). m0(z) is recovered as a root of a degree
// (#atoms + 1) polynomial with Herglotz-sign branch selection; support edges
// are the real critical values of z(m0).
class FisherLsdMap {
 public:
  FisherLsdMap(double c1, double c2, SpectrumH h);

  double c1() const { return c1_; }
  double c2() const { return c2_; }
  const SpectrumH& h() const { return h_; }

  // int t^a / (t+m0)^b dH(t)
  cplx atom_integral(int a, int b, cplx m0) const;

  cplx z_of_m0(cplx m0) const;
  cplx dz_dm0(cplx m0) const;
  cplx underline_m(cplx m0) const;
  cplx dunderline_m_dm0(cplx m0) const;
  // Stieltjes transform of the LSD at z, given the matching m0
  cplx m_f(cplx m0, cplx z) const;
  // dm0/dz = 1 / z'(m0)
  cplx dm0_dz(cplx m0) const;

  // all roots of the branch polynomial at z
  std::vector<cplx> branch_roots(cplx z) const;
  // physical branch at z (off the real axis, or real z outside the support);
  // an optional hint selects by continuation
  cplx m0_at(cplx z, std::optional<cplx> hint = {}) const;
  // branch at far field walked in by continuation; robust contour starter
  cplx m0_far_start(cplx z0) const;

  // boundary value at real x: root with Im m0 <= 0; density = Im m_F / pi
  struct Boundary {
    cplx m0;
    double density = 0.0;
  };
  Boundary density_at(double x, std::optional<cplx> hint = {}) const;

  struct Support {
    std::vector<std::pair<double, double>> intervals;  // sorted, disjoint
    std::vector<double> left_edge_m0;                  // critical m0 of each left edge
    double point_mass = 0.0;                           // at zero, max(0, 1-1/c1)
  };
  Support support() const;

 private:
  double c1_, c2_;
  SpectrumH h_;
  std::vector<double> pi_;       // prod_i (t_i + m)
  std::vector<double> sigw_;     // sum_i w_i prod_{j!=i} (t_j + m)
  std::vector<double> a_;        // numerator of z(m):  -( (1-c1) m Pi + c1 m^2 Sigw )
  std::vector<double> b_;        // denominator:        Pi - c2 m Sigw
  std::vector<double> dnum_;     // numerator of z'(m): A'B - AB'
};

// Wachter-type closed-form density for single-atom H = delta_t.
double wachter_density(double x, double c1, double c2, double t = 1.0);
// support edges [(1 -+ h)^2 / (1-c2)^2] * t for single-atom H
std::pair<double, double> wachter_edges(double c1, double c2, double t = 1.0);

struct LsdDensity {
  std::vector<std::pair<double, double>> intervals;
  std::vector<double> interval_mass;
  double point_mass = 0.0;
  std::vector<double> grid_x;
  std::vector<double> grid_density;

  double total_mass() const;
  // continuous-part cdf from the sampled grid (plus the point mass at 0)
  double cdf(double x) const;
};

// Density of F^{(c1,c2,H)} on an evaluation grid of roughly grid_size points.
// Throws if the recovered mass misses 1 beyond tolerance.
LsdDensity fisher_lsd_density(double c1, double c2, const SpectrumH& h, int grid_size = 2048);

// Spike map psi(alpha) = alpha (1 - c1 int t/(t-alpha) dH) / (1 + c2 int alpha/(t-alpha) dH).
double psi(double alpha, double c1, double c2, const SpectrumH& h);

// Rightmost detachment point: critical alpha_c > t_max with psi'(alpha_c) = 0;
// psi(alpha_c) equals the right support edge.
struct PsiDetachment {
  double alpha_c = 0.0;
  double psi_min = 0.0;
};
PsiDetachment psi_detachment(double c1, double c2, const SpectrumH& h);

struct PsiInverse {
  double alpha = 0.0;
  bool clamped = false;  // sample eigenvalue did not exceed the support edge
};
PsiInverse psi_inverse(double l, double c1, double c2, const SpectrumH& h);

// p * int f dF^{(c1,c2,H)} by adaptive Gauss-Legendre quadrature per support
// interval under the square-root edge substitution.
double centering_d1(const SpectralFn& f, double c1, double c2, const SpectrumH& h, int p);

// Same integral restricted to the bulk: support intervals containing one of
// the given spike images are dropped from the sum (their mass still counts
// toward the sanity check).  bulk_edge is the upper edge of the kept support.
struct BulkCentering {
  double value = 0.0;
  double bulk_edge = 0.0;
};
BulkCentering centering_bulk(const SpectralFn& f, double c1, double c2, const SpectrumH& h,
                             int p, const std::vector<double>& spike_images);

// H_n = ((p - M0)/p) H_base + (1/p) sum_k m_k delta_{alpha_k}; near-coincident
// atoms are merged.
SpectrumH spiked_population(const SpectrumH& h_base, const std::vector<double>& alphas,
                            const std::vector<int>& multiplicities, int p);

}  // namespace spikefisher
