#include "spikefisher/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "spikefisher/model.hpp"

namespace spikefisher {

namespace {

// effective ratio of an unbiased covariance: p over its degrees of freedom
double dof_ratio(int p, int q) { return static_cast<double>(p) / (q - 1); }

}  // namespace

void WindowPlan::validate(int p) const {
  if (q11 <= p + 1)
    throw std::invalid_argument("WindowPlan: q11 must exceed p + 1 so group 1 stays invertible");
  if (q12 < 2) throw std::invalid_argument("WindowPlan: q12 must be at least 2");
  if (s < 2) throw std::invalid_argument("WindowPlan: s must be at least 2");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("WindowPlan: alpha must lie in (0,1)");
}

TestReport window_statistic(const Eigen::MatrixXd& group1, const Eigen::MatrixXd& group2, int q,
                            bool use_printed_h2) {
  const int p = static_cast<int>(group1.rows());
  if (group2.rows() != p)
    throw std::invalid_argument("window_statistic: groups disagree on dimension");
  if (q != 0 && q != 1) throw std::invalid_argument("window_statistic: q must be 0 or 1");
  const int q1 = static_cast<int>(group1.cols());
  const int q2 = static_cast<int>(group2.cols());
  if (q1 <= p + 1)
    throw std::invalid_argument("window_statistic: group 1 needs more than p + 1 samples");
  if (q2 < 2) throw std::invalid_argument("window_statistic: group 2 needs at least 2 samples");

  const Eigen::MatrixXd s1 = sample_covariance(group1, true);
  const Eigen::MatrixXd s2 = sample_covariance(group2, true);
  Eigen::LLT<Eigen::MatrixXd> llt(s1);
  if (llt.info() != Eigen::Success || !(s1.trace() > 0.0))
    throw std::runtime_error("window_statistic: group-1 covariance is singular");
  const double trace = llt.solve(s2).trace();
  if (!std::isfinite(trace))
    throw std::runtime_error("window_statistic: group-1 covariance is singular");

  const double c1 = dof_ratio(p, q1);  // inverted group, must stay below one
  const double c2 = dof_ratio(p, q2);
  const double beta1 = estimate_beta(group1, q);
  const double beta2 = estimate_beta(group2, q);
  const double h2 = use_printed_h2 ? c1 * c1 + c2 * c2 - c1 * c2 : c1 + c2 - c1 * c2;
  const double om = 1.0 - c1;

  TestReport rep;
  rep.m0 = 0;
  rep.statistic_raw = trace;
  rep.d1 = p / om;
  rep.d2 = 0.0;
  rep.mu = q * c1 / (om * om) + beta1 * c1 / om;
  rep.nu = (q + 1.0) * h2 / (om * om * om * om) + (beta1 * c1 + beta2 * c2) / (om * om);
  if (!(rep.nu > 0.0)) throw std::runtime_error("window_statistic: variance is not positive");
  rep.z_score = (trace - rep.d1 - rep.mu) / std::sqrt(rep.nu);
  rep.p_value = two_sided_p(rep.z_score);
  rep.decision = rep.p_value < rep.alpha ? Decision::reject : Decision::accept;
  return rep;
}

DetectionState detect_change_point(const Eigen::MatrixXd& x, const WindowPlan& plan,
                                   std::optional<double> threshold) {
  const int p = static_cast<int>(x.rows());
  const int t = static_cast<int>(x.cols());
  plan.validate(p);
  if (t < plan.q11 + plan.q12 + plan.s)
    throw std::invalid_argument(
        "detect_change_point: sequence length must be at least q11 + q12 + s");
  const double thr = threshold ? *threshold : normal_quantile(1.0 - plan.alpha / 2.0);
  if (!(thr > 0.0) || !std::isfinite(thr))
    throw std::invalid_argument("detect_change_point: threshold must be positive");

  std::vector<int> active(t);
  std::iota(active.begin(), active.end(), 0);
  int q12_cur = plan.q12;
  int start = 0;
  int run_len = 0;
  int prev_t0 = -2;
  DetectionState st;
  Eigen::MatrixXd g1(p, plan.q11);
  while (q12_cur >= 2 && start + plan.q11 + q12_cur <= static_cast<int>(active.size())) {
    const int count = plan.q11 + q12_cur;
    Eigen::MatrixXd g2(p, q12_cur);
    for (int i = 0; i < plan.q11; ++i) g1.col(i) = x.col(active[start + i]);
    for (int i = 0; i < q12_cur; ++i) g2.col(i) = x.col(active[start + plan.q11 + i]);
    const TestReport rep = window_statistic(g1, g2);
    st.z_scores.push_back(rep.z_score);
    ++st.window_index;
    if (std::abs(rep.z_score) > thr) {
      const int t0 = active[start + count - 1];
      if (!st.anomaly_set.empty() && t0 <= st.anomaly_set.back())
        throw std::logic_error("detect_change_point: anomaly indices must ascend");
      st.anomaly_set.push_back(t0);
      st.removed_indices.push_back(t0);
      active.erase(active.begin() + (start + count - 1));
      --q12_cur;
      run_len = (t0 == prev_t0 + 1) ? run_len + 1 : 1;
      prev_t0 = t0;
      if (run_len >= plan.s) {
        st.change_point = t0 - plan.s + 1;
        break;
      }
    }
    ++start;
  }
  return st;
}

double calibrate_threshold(const Eigen::MatrixXd& reference, const WindowPlan& plan) {
  const int p = static_cast<int>(reference.rows());
  const int t = static_cast<int>(reference.cols());
  plan.validate(p);
  const int span = plan.q11 + plan.q12;
  const int windows = t - span + 1;
  if (windows < 100)
    throw std::invalid_argument("calibrate_threshold: reference allows only " +
                                std::to_string(std::max(windows, 0)) +
                                " windows, need at least 100");
  std::vector<double> abs_z;
  abs_z.reserve(windows);
  for (int start = 0; start < windows; ++start) {
    const TestReport rep = window_statistic(reference.middleCols(start, plan.q11),
                                            reference.middleCols(start + plan.q11, plan.q12));
    abs_z.push_back(std::abs(rep.z_score));
  }
  std::sort(abs_z.begin(), abs_z.end());
  const int idx = static_cast<int>(std::ceil(0.95 * windows)) - 1;
  return abs_z[std::max(idx, 0)];
}

}  // namespace spikefisher
