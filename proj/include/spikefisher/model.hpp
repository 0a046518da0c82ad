#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "spikefisher/spectrum.hpp"

namespace spikefisher {

// Population covariance factory. Columns of generated data are x = Sigma^{1/2} z.
struct SigmaSpec {
  enum class Kind { identity, diagonal, haar_diagonal, toeplitz };
  Kind kind = Kind::identity;
  std::vector<double> diag;  // diagonal / haar_diagonal eigenvalues (padded with 1)
  double rho = 0.0;          // toeplitz base
  double scale = 1.0;        // toeplitz multiplier

  static SigmaSpec identity() { return {}; }
  static SigmaSpec diagonal(std::vector<double> d);
  // eigenvalues conjugated by a Haar orthogonal matrix drawn at generation time
  static SigmaSpec haar_diagonal(std::vector<double> d);
  static SigmaSpec toeplitz(double rho, double scale = 1.0);

  // dense sqrt factor, using rng only for the haar case
  Eigen::MatrixXd sqrt_factor(int p, std::mt19937_64& rng) const;
  Eigen::MatrixXd dense(int p, std::mt19937_64& rng) const;
};

enum class EntryDist { gaussian, standardized_gamma };

struct TwoSample {
  Eigen::MatrixXd x;  // p x n1
  Eigen::MatrixXd y;  // p x n2
};

struct FisherEigs {
  Eigen::VectorXd values;  // descending
  int p = 0;
  int n1 = 0;
  int n2 = 0;
  RatioProfile ratios() const;
};

// S = X X^T / n, or mean-centered with divisor n-1 when unbiased.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data, bool unbiased = false);

// Eigenvalues of the pencil (s1, s2), i.e. of s2^{-1} s1, descending.
Eigen::VectorXd fisher_eigenvalues(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2);

FisherEigs fisher_eigs_from_samples(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

TwoSample generate_two_sample(int p, int n1, int n2, const SigmaSpec& sigma1,
                              const SigmaSpec& sigma2, EntryDist dist, std::uint64_t seed);

// beta = (1/pn) sum z_ij^4 - q - 2 over studentized coordinates.
double estimate_beta(const Eigen::MatrixXd& data, int q = 1);

// iid matrix with unit-variance entries (mean zero)
Eigen::MatrixXd random_entries(int rows, int cols, EntryDist dist, std::mt19937_64& rng);

Eigen::MatrixXd haar_orthogonal(int p, std::mt19937_64& rng);

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace spikefisher
