#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spikefisher/changepoint.hpp"
#include "spikefisher/regress.hpp"
#include "spikefisher/spiketest.hpp"

namespace spikefisher {

enum class Population { gaussian, gamma };

// One Monte-Carlo experiment: model, dimensions, grid, replication budget.
// Models 1-2 are two-sample spike tests (spiked rotation / two-atom diagonal),
// 3-4 regression designs (white / Toeplitz noise), 5-6 monitored sequences
// with a variance or factor-noise change plus two additive outliers.
struct ExperimentSpec {
  int model = 1;
  Population population = Population::gaussian;
  int p = 100;
  double c1 = 0.5;  // models 1-2: n1 = p/c1
  double c2 = 0.2;  // models 1-2: n2 = p/c2
  int n = 750, r = 250, r1 = 200;  // models 3-4 design sizes
  int t = 1500;                    // models 5-6 sequence length
  double rho = 20.0;               // model 4: noise decay; models 5-6: shift size
  std::vector<int> m0_grid = {1, 2, 3, 4, 5, 6};
  int reps = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  double detect_alpha = 0.0005;  // per-window level for models 5-6
  SpectralFn::Kind f = SpectralFn::Kind::log;
  CltMethod method = CltMethod::closed_form;

  int n1() const;
  int n2() const;
  int true_m0() const;             // 4 under models 1-2, 5 under models 3-4
  int change_column() const;       // first post-change column, 2t/3
  int outlier_column() const;      // first of the two outlier columns, t/3
  WindowPlan window_plan() const;  // q11 = q12 = 2p, s = 20
  SpectrumH base_h() const;        // unit atom, or the 1/2 mixture of model 2
  std::string scenario() const;
  void validate() const;
};

// One model draw per replication; streams are counter-based off the master
// seed, so any subset of replications can be regenerated independently.
FisherEigs make_fisher_replication(const ExperimentSpec& spec, int rep);
RegressionDesign make_regression_replication(const ExperimentSpec& spec, int rep);
Eigen::MatrixXd make_sequence_replication(const ExperimentSpec& spec, int rep);

struct SizePowerRow {
  std::string scenario;
  int m0 = 0;
  double frequency = 0.0;  // rejection rate over successful replications
  double std_error = 0.0;  // sqrt(f (1 - f) / N)
  int reps = 0;            // successful replications
  int failures = 0;
};

struct SizePowerTable {
  std::vector<SizePowerRow> rows;
};

// Rejection frequency of the m0-spike (models 1-2) or m0-variable (models
// 3-4) test at every grid point. Aborts when more than 1% of replications
// fail; results do not depend on scheduling order.
SizePowerTable run_size_power(const ExperimentSpec& spec);

struct HistogramData {
  std::vector<double> edges;           // 41 edges spanning [-4, 4]
  std::vector<int> counts;             // 40 bins; out-of-range draws are dropped
  std::vector<double> normal_density;  // standard normal at bin centers
  std::vector<double> z_scores;        // retained statistics in replication order
  double ks_distance = 0.0;
  int failures = 0;
};

// Null z-scores at the true model order (models 1-4) or over pre-change
// windows (models 5-6), binned for plotting against the standard normal.
HistogramData run_null_histogram(const ExperimentSpec& spec);

// sup-distance between the empirical distribution and the standard normal
double ks_normal_distance(std::vector<double> z);

struct BenchmarkResult {
  std::string scenario;
  int runs = 0;
  int detected = 0;
  int correct = 0;          // detected within tolerance of the true change
  int outlier_flagged = 0;  // an outlier column reported as the change point
  double accuracy = 0.0;    // correct / runs
  int true_change = 0;
  std::vector<int> locations;  // detected change column per run, -1 when unset
};

// Detection accuracy for models 5-6 under the default window plan; a negative
// tolerance means the consecutive-run length s.
BenchmarkResult run_changepoint_benchmark(const ExperimentSpec& spec, int tolerance = -1);

}  // namespace spikefisher
