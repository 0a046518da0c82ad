#include "spikefisher/spectrum.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikefisher {

SpectrumH SpectrumH::delta1() { return from_atoms({1.0}, {1.0}); }

SpectrumH SpectrumH::from_atoms(std::vector<double> t, std::vector<double> w) {
  SpectrumH h;
  h.t = std::move(t);
  h.w = std::move(w);
  h.validate();
  return h;
}

double SpectrumH::t_max() const {
  if (t.empty()) throw std::invalid_argument("SpectrumH: empty");
  return t.back();
}

double SpectrumH::t_min() const {
  if (t.empty()) throw std::invalid_argument("SpectrumH: empty");
  return t.front();
}

double SpectrumH::moment(int k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += w[i] * std::pow(t[i], k);
  return s;
}

void SpectrumH::validate() const {
  if (t.empty() || t.size() != w.size())
    throw std::invalid_argument("SpectrumH: atom/weight size mismatch or empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !std::isfinite(t[i]))
      throw std::invalid_argument("SpectrumH: atoms must be positive and finite");
    if (i > 0 && !(t[i] > t[i - 1]))
      throw std::invalid_argument("SpectrumH: atoms must be strictly increasing");
    if (!(w[i] > 0.0) || !std::isfinite(w[i]))
      throw std::invalid_argument("SpectrumH: weights must be positive");
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("SpectrumH: weights must sum to 1, got " + std::to_string(sum));
}

SpikeConfig SpikeConfig::simple(std::vector<double> alphas) {
  SpikeConfig s;
  s.alpha = std::move(alphas);
  s.multiplicity.assign(s.alpha.size(), 1);
  return s;
}

int SpikeConfig::total() const {
  int m = 0;
  for (int k : multiplicity) m += k;
  return m;
}

void SpikeConfig::validate(const SpectrumH& h, double d0) const {
  if (alpha.size() != multiplicity.size())
    throw std::invalid_argument("SpikeConfig: alpha/multiplicity size mismatch");
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0) || !std::isfinite(alpha[k]))
      throw std::invalid_argument("SpikeConfig: spikes must be positive and finite");
    if (k > 0 && !(alpha[k] <= alpha[k - 1]))
      throw std::invalid_argument("SpikeConfig: spikes must be non-increasing");
    if (multiplicity[k] < 1) throw std::invalid_argument("SpikeConfig: multiplicity must be >= 1");
    for (double t : h.t)
      if (std::abs(alpha[k] / t - 1.0) <= d0)
        throw std::invalid_argument("SpikeConfig: spike " + std::to_string(alpha[k]) +
                                    " violates separation from atom " + std::to_string(t));
  }
}

void RatioProfile::validate() const {
  if (!(c1 > 0.0) || !std::isfinite(c1))
    throw std::invalid_argument("RatioProfile: c1 must be positive");
  if (!(c2 > 0.0) || !(c2 < 1.0))
    throw std::invalid_argument("RatioProfile: c2 must lie in (0,1)");
}

void MomentProfile::validate() const {
  if (q != 0 && q != 1) throw std::invalid_argument("MomentProfile: q must be 0 or 1");
  if (beta_x < -2.0 || beta_y < -2.0 || !std::isfinite(beta_x) || !std::isfinite(beta_y))
    throw std::invalid_argument("MomentProfile: fourth cumulant below attainable bound");
}

}  // namespace spikefisher
