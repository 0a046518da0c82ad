#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "spikefisher/spiketest.hpp"

namespace spikefisher {

// Sliding-window plan: each window holds q11 leading samples (group 1, fixed
// size) followed by the current group-2 budget, which shrinks by one whenever
// an anomalous end sample is removed. A run of s consecutive anomalous indices
// declares a change point.
struct WindowPlan {
  int q11 = 0;
  int q12 = 0;
  int s = 20;
  double alpha = 0.0005;

  void validate(int p) const;
};

struct DetectionState {
  std::vector<int> anomaly_set;      // rejected window-end indices, ascending
  std::vector<int> removed_indices;  // samples excluded from later windows
  std::vector<double> z_scores;      // one entry per evaluated window
  int window_index = 0;              // number of windows evaluated
  std::optional<int> change_point;   // first index of the s-run, when found
};

// z-score of tr(S1^{-1} S2) against its null law, with moment corrections
// re-estimated from each group. q switches real (1) and complex (0) entries;
// use_printed_h2 selects the squared-ratio variance form kept for comparison.
TestReport window_statistic(const Eigen::MatrixXd& group1, const Eigen::MatrixXd& group2,
                            int q = 1, bool use_printed_h2 = false);

// Point-by-point slide over the columns of x (p x T). Rejected end samples are
// excluded from all later windows so isolated outliers cannot stack up into a
// false run. An explicit threshold overrides the normal-theory critical value.
DetectionState detect_change_point(const Eigen::MatrixXd& x, const WindowPlan& plan,
                                   std::optional<double> threshold = std::nullopt);

// Empirical two-sided critical value: the 95th percentile of |z| over all full
// windows of an anomaly-free reference sequence.
double calibrate_threshold(const Eigen::MatrixXd& reference, const WindowPlan& plan);

}  // namespace spikefisher
