#pragma once

#include <vector>

#include "spikefisher/clt.hpp"
#include "spikefisher/model.hpp"
#include "spikefisher/spectral_fn.hpp"
#include "spikefisher/spectrum.hpp"

namespace spikefisher {

enum class Decision { accept, reject };

// Standardized two-sided test report; the fields satisfy
// z_score = (statistic_raw - d1 + d2 - mu) / sqrt(nu).
struct TestReport {
  double statistic_raw = 0.0;  // spectral sum over the non-spiked eigenvalues
  double d1 = 0.0;             // bulk centering p * int f dF
  double d2 = 0.0;             // spike correction sum m_k f(psi(alpha_k))
  double mu = 0.0;
  double nu = 0.0;
  double z_score = 0.0;
  double p_value = 1.0;
  Decision decision = Decision::accept;
  double alpha = 0.05;
  int m0 = 0;
};

double normal_cdf(double x);
// inverse of normal_cdf on (0,1)
double normal_quantile(double p);
// two-sided tail probability 2 (1 - Phi(|z|))
double two_sided_p(double z);

// sum_{j = m0+1}^{p} f(l_j): the full spectral sum minus the top-m0 terms.
double partial_lss(const FisherEigs& eigs, int m0, const SpectralFn& f);

// Mean/variance pair for the chosen evaluation method; closed_form and
// contour_lowrank require the unit single-atom population.
MeanVar meanvar_for_method(const SpectralFn& f, double c1, double c2, const SpectrumH& h,
                           const MomentProfile& moments, CltMethod method);

// Test of "exactly m0 spikes" from the eigenvalues of a two-sample Fisher
// matrix. When hypothesis is empty the spike values are recovered by inverting
// psi at the top-m0 eigenvalues; otherwise the supplied values are used and
// their total multiplicity must equal m0.
TestReport test_spike_count(const FisherEigs& eigs, int m0, const SpectralFn& f,
                            const SpikeConfig& hypothesis, const SpectrumH& h,
                            const MomentProfile& moments, double alpha,
                            CltMethod method = CltMethod::contour_lowrank);

// Same test with a precomputed mean/variance pair (shared across an m0 scan or
// across replications at fixed dimensions).
TestReport test_spike_count(const FisherEigs& eigs, int m0, const SpectralFn& f,
                            const SpikeConfig& hypothesis, const SpectrumH& h,
                            const MeanVar& mv, double alpha);

struct SpikeCountEstimate {
  int m0 = 0;
  bool found = false;
  std::vector<TestReport> trail;  // reports in scan order, m0 = 0, 1, ...
};

// Sequential scan: smallest m0 in {0, ..., m_max} whose test accepts. If none
// accepts, m0 = m_max with found = false.
SpikeCountEstimate estimate_spike_count(const FisherEigs& eigs, const SpectralFn& f,
                                        const SpectrumH& h, const MomentProfile& moments,
                                        double alpha, int m_max,
                                        CltMethod method = CltMethod::contour_lowrank);

}  // namespace spikefisher
