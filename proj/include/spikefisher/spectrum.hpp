#pragma once

#include <cstddef>
#include <vector>

namespace spikefisher {

// Atomic population spectral distribution H = sum_i w_i * delta(t_i).
struct SpectrumH {
  std::vector<double> t;  // atom locations, strictly increasing, > 0
  std::vector<double> w;  // atom weights, > 0, summing to 1

  static SpectrumH delta1();
  static SpectrumH from_atoms(std::vector<double> t, std::vector<double> w);

  std::size_t size() const { return t.size(); }
  double t_max() const;
  double t_min() const;
  // sum_i w_i * t_i^k
  double moment(int k) const;
  void validate() const;
};

// Hypothesized spikes: values with multiplicities, descending.
struct SpikeConfig {
  std::vector<double> alpha;
  std::vector<int> multiplicity;

  static SpikeConfig none() { return {}; }
  static SpikeConfig simple(std::vector<double> alphas);

  std::size_t groups() const { return alpha.size(); }
  int total() const;
  void validate(const SpectrumH& h, double d0 = 0.2) const;
};

// Finite-sample dimension ratios c1 = p/n1, c2 = p/n2.
struct RatioProfile {
  double c1 = 0.0;
  double c2 = 0.0;
  void validate() const;
};

// Field flag q (1 real, 0 complex) and standardized fourth cumulants.
struct MomentProfile {
  int q = 1;
  double beta_x = 0.0;
  double beta_y = 0.0;

  static MomentProfile gaussian_real() { return {1, 0.0, 0.0}; }
  void validate() const;
};

}  // namespace spikefisher
