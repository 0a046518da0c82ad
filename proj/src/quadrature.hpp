#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace spikefisher::detail {

struct GlRule {
  std::vector<double> x;  // nodes on [-1, 1], ascending
  std::vector<double> w;
};

// Gauss-Legendre rule of order n, cached across calls.
inline const GlRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
  static std::mutex mu;
  static std::map<int, GlRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GlRule rule;
  rule.x.assign(n, 0.0);
  rule.w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double weight = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.x[i] = -x;  // i = 0 is the largest magnitude root
    rule.x[n - 1 - i] = x;
    rule.w[i] = weight;
    rule.w[n - 1 - i] = weight;
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace spikefisher::detail
