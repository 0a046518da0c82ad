#pragma once

#include <Eigen/Dense>

#include "spikefisher/model.hpp"
#include "spikefisher/spiketest.hpp"

namespace spikefisher {

// Multivariate regression z_i = B w_i + eps_i with B = (B1, B2) split after
// column r1; the test counts the nonzero columns of B1.
struct RegressionDesign {
  Eigen::MatrixXd z;  // p x n responses
  Eigen::MatrixXd w;  // r x n regressors
  int r1 = 0;

  int p() const { return static_cast<int>(z.rows()); }
  int n() const { return static_cast<int>(z.cols()); }
  int r() const { return static_cast<int>(w.rows()); }
  void validate() const;
};

// Factors of the modified Wilk's statistic.
struct ManovaFactors {
  Eigen::MatrixXd h;     // spiked numerator, p x p PSD
  Eigen::MatrixXd g;     // residual denominator, p x p PD
  Eigen::MatrixXd a112;  // Schur complement of the regressor Gram blocks, r1 x r1
  Eigen::MatrixXd bhat;  // coefficient MLE, p x r
};

ManovaFactors fit_mle(const RegressionDesign& design);

struct WilksStatistic {
  double minus_log_lambda = 0.0;  // -log Lambda* = sum log(1 + r1/(n-r) l_j)
  FisherEigs eigs;                // pencil eigenvalues of H G^{-1}, descending
};

WilksStatistic wilks_modified(const ManovaFactors& factors, int n, int r);

// Test of "exactly m0 significant variables" among the first r1 regressors.
TestReport test_variable_count(const RegressionDesign& design, int m0, double alpha);

// Sequential scan: smallest m0 in {0, ..., m_max} whose test accepts.
SpikeCountEstimate count_significant_variables(const RegressionDesign& design, double alpha,
                                               int m_max);

}  // namespace spikefisher
