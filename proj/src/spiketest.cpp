#include "spikefisher/spiketest.hpp"

#include <cmath>
#include <stdexcept>

#include "spikefisher/rmt.hpp"

namespace spikefisher {

namespace {

constexpr double k_sqrt2 = 1.4142135623730951;

// an eigenvalue within this fraction of the support edge on either side is
// treated as the top of the bulk; further below it cannot correspond to a
// spike and contributes nothing
constexpr double k_edge_margin = 0.1;

bool is_delta1(const SpectrumH& h) {
  return h.size() == 1 && std::abs(h.t[0] - 1.0) <= 1e-12;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / k_sqrt2); }

double two_sided_p(double z) { return std::erfc(std::abs(z) / k_sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: probability must lie in (0,1)");
  // rational initial guess (Acklam), then one Halley step on the exact cdf
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double u = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double u = p - 0.5;
    const double r = u * u;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double u = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double partial_lss(const FisherEigs& eigs, int m0, const SpectralFn& f) {
  const int p = static_cast<int>(eigs.values.size());
  if (p == 0) throw std::invalid_argument("partial_lss: no eigenvalues");
  if (m0 < 0 || m0 >= p) throw std::invalid_argument("partial_lss: m0 must lie in [0, p)");
  long double acc = 0.0L;
  for (int j = p - 1; j >= m0; --j) acc += static_cast<long double>(f(eigs.values[j]));
  return static_cast<double>(acc);
}

MeanVar meanvar_for_method(const SpectralFn& f, double c1, double c2, const SpectrumH& h,
                           const MomentProfile& moments, CltMethod method) {
  if (method != CltMethod::contour_general && !is_delta1(h))
    throw std::invalid_argument(
        "meanvar_for_method: selected method requires the unit single-atom population");
  switch (method) {
    case CltMethod::closed_form:
      if (f.kind == SpectralFn::Kind::x) return meanvar_x_delta1(c1, c2, moments);
      if (f.kind == SpectralFn::Kind::log) return meanvar_log_delta1(c1, c2, moments);
      throw std::invalid_argument("meanvar_for_method: no closed form for statistic " + f.name());
    case CltMethod::contour_lowrank:
      return meanvar_contour_lowrank(f, c1, c2, moments);
    case CltMethod::contour_general:
      return meanvar_contour_general(f, c1, c2, h, moments);
  }
  throw std::logic_error("meanvar_for_method: unknown method");
}

TestReport test_spike_count(const FisherEigs& eigs, int m0, const SpectralFn& f,
                            const SpikeConfig& hypothesis, const SpectrumH& h,
                            const MeanVar& mv, double alpha) {
  const int p = static_cast<int>(eigs.values.size());
  if (m0 < 0 || m0 >= p) throw std::invalid_argument("test_spike_count: m0 must lie in [0, p)");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("test_spike_count: alpha must lie in (0,1)");
  if (!(mv.nu > 0.0)) throw std::invalid_argument("test_spike_count: variance must be positive");
  h.validate();
  const RatioProfile ratios = eigs.ratios();
  ratios.validate();

  // Hypothesised eigenvalues split three ways against the detachment edge:
  // genuinely detached ones get a population atom plus an exact point
  // correction, near-edge ones consume a top bulk quantile, and eigenvalues
  // well below the edge cannot be spikes at all and contribute nothing.
  const PsiDetachment edge = psi_detachment(ratios.c1, ratios.c2, h);
  const double band = k_edge_margin * edge.psi_min;
  std::vector<double> alphas, images;
  std::vector<int> mults;
  int edge_bound = 0;
  double d2 = 0.0;
  if (hypothesis.groups() > 0) {
    hypothesis.validate(h);
    if (hypothesis.total() != m0)
      throw std::invalid_argument("test_spike_count: hypothesis multiplicity does not match m0");
    for (std::size_t k = 0; k < hypothesis.alpha.size(); ++k) {
      const double image = hypothesis.alpha[k] > edge.alpha_c
                               ? psi(hypothesis.alpha[k], ratios.c1, ratios.c2, h)
                               : edge.psi_min;
      if (image - edge.psi_min > above) {
        alphas.push_back(hypothesis.alpha[k]);
        mults.push_back(hypothesis.multiplicity[k]);
        images.push_back(image);
      } else {
        edge_bound += hypothesis.multiplicity[k];
      }
    }
  } else {
    for (int k = 0; k < m0; ++k) {
      const double gap = eigs.values[k] - edge.psi_min;
      if (gap > above) {
        alphas.push_back(psi_inverse(eigs.values[k], ratios.c1, ratios.c2, h).alpha);
        mults.push_back(1);
        images.push_back(eigs.values[k]);
      } else if (gap >= -below) {
        ++edge_bound;
      }
    }
  }
  for (std::size_t k = 0; k < alphas.size(); ++k) d2 += mults[k] * f(images[k]);

  TestReport rep;
  rep.m0 = m0;
  rep.alpha = alpha;
  rep.statistic_raw = partial_lss(eigs, m0, f);
  rep.d2 = d2;
  const SpectrumH h_n = alphas.empty() ? h : spiked_population(h, alphas, mults, p);
  const BulkCentering cen = centering_bulk(f, ratios.c1, ratios.c2, h_n, p, images);
  rep.d1 = cen.value - edge_bound * f(cen.bulk_edge) + rep.d2;
  rep.mu = mv.mu;
  rep.nu = mv.nu;
  rep.z_score = (rep.statistic_raw - rep.d1 + rep.d2 - rep.mu) / std::sqrt(rep.nu);
  rep.p_value = two_sided_p(rep.z_score);
  rep.decision = rep.p_value < alpha ? Decision::reject : Decision::accept;
  return rep;
}

TestReport test_spike_count(const FisherEigs& eigs, int m0, const SpectralFn& f,
                            const SpikeConfig& hypothesis, const SpectrumH& h,
                            const MomentProfile& moments, double alpha, CltMethod method) {
  moments.validate();
  const RatioProfile ratios = eigs.ratios();
  const MeanVar mv = meanvar_for_method(f, ratios.c1, ratios.c2, h, moments, method);
  return test_spike_count(eigs, m0, f, hypothesis, h, mv, alpha);
}

SpikeCountEstimate estimate_spike_count(const FisherEigs& eigs, const SpectralFn& f,
                                        const SpectrumH& h, const MomentProfile& moments,
                                        double alpha, int m_max, CltMethod method) {
  const int p = static_cast<int>(eigs.values.size());
  if (m_max < 0 || 2 * m_max >= p)
    throw std::invalid_argument("estimate_spike_count: m_max must lie in [0, p/2)");
  moments.validate();
  const RatioProfile ratios = eigs.ratios();
  const MeanVar mv = meanvar_for_method(f, ratios.c1, ratios.c2, h, moments, method);
  SpikeCountEstimate est;
  for (int m0 = 0; m0 <= m_max; ++m0) {
    est.trail.push_back(test_spike_count(eigs, m0, f, SpikeConfig::none(), h, mv, alpha));
    if (est.trail.back().decision == Decision::accept) {
      est.m0 = m0;
      est.found = true;
      return est;
    }
  }
  est.m0 = m_max;
  est.found = false;
  return est;
}

}  // namespace spikefisher
