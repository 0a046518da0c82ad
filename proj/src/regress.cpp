#include "spikefisher/regress.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spikefisher/rmt.hpp"

namespace spikefisher {

namespace {

void check_m0(int m0, int p, int r1, const char* what) {
  if (m0 < 0 || 2 * m0 >= std::min(p, r1))
    throw std::invalid_argument(std::string(what) + ": m0 must lie in [0, min(p, r1)/2)");
}

}  // namespace

void RegressionDesign::validate() const {
  if (z.rows() < 1 || z.cols() < 1) throw std::invalid_argument("RegressionDesign: empty responses");
  if (w.rows() < 1) throw std::invalid_argument("RegressionDesign: empty design matrix");
  if (w.cols() != z.cols())
    throw std::invalid_argument("RegressionDesign: responses and design disagree on sample count");
  if (r1 < 1 || r1 > r())
    throw std::invalid_argument("RegressionDesign: column split r1 must lie in [1, r]");
  if (n() < p() + r())
    throw std::invalid_argument("RegressionDesign: sample size violates n >= p + r");
  // singular values of W through the spectrum of its Gram matrix
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("RegressionDesign: Gram eigenvalue computation failed");
  const double top = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  const double bottom = std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
  if (!(bottom > 1e-10 * top))
    throw std::invalid_argument("RegressionDesign: design matrix is rank deficient");
}

ManovaFactors fit_mle(const RegressionDesign& design) {
  design.validate();
  const int n = design.n(), r = design.r(), r1 = design.r1;
  const Eigen::MatrixXd& w = design.w;
  const Eigen::MatrixXd wwt = w * w.transpose();
  Eigen::LLT<Eigen::MatrixXd> wllt(wwt);
  if (wllt.info() != Eigen::Success)
    throw std::runtime_error("fit_mle: regressor Gram matrix is not positive definite");

  ManovaFactors out;
  out.bhat = wllt.solve(w * design.z.transpose()).transpose();  // Z W^T (W W^T)^{-1}
  const Eigen::MatrixXd resid = design.z - out.bhat * w;
  out.g = resid * resid.transpose() / static_cast<double>(n - r);
  // a residual energy at rounding level means Z lies in the span of W and the
  // denominator of the pencil is vacuous
  if (!(out.g.trace() > 1e-16 * design.z.squaredNorm() / static_cast<double>(n - r)))
    throw std::runtime_error("fit_mle: residual covariance is singular");
  Eigen::LLT<Eigen::MatrixXd> gllt(out.g);
  if (gllt.info() != Eigen::Success)
    throw std::runtime_error("fit_mle: residual covariance is singular");

  if (r1 == r) {
    out.a112 = wwt;
  } else {
    const auto w1 = w.topRows(r1);
    const auto w2 = w.bottomRows(r - r1);
    const Eigen::MatrixXd cross = w1 * w2.transpose();
    Eigen::LLT<Eigen::MatrixXd> w2llt(w2 * w2.transpose());
    if (w2llt.info() != Eigen::Success)
      throw std::runtime_error("fit_mle: nuisance block Gram matrix is singular");
    out.a112 = w1 * w1.transpose() - cross * w2llt.solve(cross.transpose());
  }
  out.h = out.bhat.leftCols(r1) * out.a112 * out.bhat.leftCols(r1).transpose() /
          static_cast<double>(r1);
  return out;
}

WilksStatistic wilks_modified(const ManovaFactors& factors, int n, int r) {
  const int p = static_cast<int>(factors.h.rows());
  const int r1 = static_cast<int>(factors.a112.rows());
  if (n <= r) throw std::invalid_argument("wilks_modified: need n > r");
  if (factors.g.rows() != p) throw std::invalid_argument("wilks_modified: factor size mismatch");
  WilksStatistic out;
  out.eigs.values = fisher_eigenvalues(factors.h, factors.g);
  out.eigs.p = p;
  out.eigs.n1 = r1;
  out.eigs.n2 = n - r;
  out.minus_log_lambda =
      partial_lss(out.eigs, 0, SpectralFn::log1p_scaled(static_cast<double>(r1) / (n - r)));
  return out;
}

TestReport test_variable_count(const RegressionDesign& design, int m0, double alpha) {
  check_m0(m0, design.p(), design.r1, "test_variable_count");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("test_variable_count: alpha must lie in (0,1)");
  const WilksStatistic wilks = wilks_modified(fit_mle(design), design.n(), design.r());
  const RatioProfile ratios = wilks.eigs.ratios();
  ratios.validate();
  const SpectralFn f = SpectralFn::log1p_scaled(ratios.c2 / ratios.c1);
  const MeanVar mv = meanvar_regression(ratios.c1, ratios.c2);
  return test_spike_count(wilks.eigs, m0, f, SpikeConfig::none(), SpectrumH::delta1(), mv, alpha);
}

SpikeCountEstimate count_significant_variables(const RegressionDesign& design, double alpha,
                                               int m_max) {
  check_m0(m_max, design.p(), design.r1, "count_significant_variables");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("count_significant_variables: alpha must lie in (0,1)");
  const WilksStatistic wilks = wilks_modified(fit_mle(design), design.n(), design.r());
  const RatioProfile ratios = wilks.eigs.ratios();
  ratios.validate();
  const SpectralFn f = SpectralFn::log1p_scaled(ratios.c2 / ratios.c1);
  const MeanVar mv = meanvar_regression(ratios.c1, ratios.c2);
  SpikeCountEstimate est;
  for (int m0 = 0; m0 <= m_max; ++m0) {
    est.trail.push_back(
        test_spike_count(wilks.eigs, m0, f, SpikeConfig::none(), SpectrumH::delta1(), mv, alpha));
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
