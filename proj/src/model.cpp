#include "spikefisher/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikefisher {

namespace {

constexpr double kPencilTol = 1e-12;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

}  // namespace

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

SigmaSpec SigmaSpec::diagonal(std::vector<double> d) {
  SigmaSpec s;
  s.kind = Kind::diagonal;
  s.diag = std::move(d);
  return s;
}

SigmaSpec SigmaSpec::haar_diagonal(std::vector<double> d) {
  SigmaSpec s;
  s.kind = Kind::haar_diagonal;
  s.diag = std::move(d);
  return s;
}

SigmaSpec SigmaSpec::toeplitz(double rho, double scale) {
  SigmaSpec s;
  s.kind = Kind::toeplitz;
  s.rho = rho;
  s.scale = scale;
  return s;
}

Eigen::MatrixXd haar_orthogonal(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(p, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd rdiag = qr.matrixQR().diagonal();
  for (int j = 0; j < p; ++j)
    if (rdiag(j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Eigen::MatrixXd SigmaSpec::sqrt_factor(int p, std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::identity:
      return Eigen::MatrixXd::Identity(p, p);
    case Kind::diagonal: {
      Eigen::VectorXd d = Eigen::VectorXd::Ones(p);
      if ((int)diag.size() > p) throw std::invalid_argument("SigmaSpec: more eigenvalues than p");
      for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0)) throw std::invalid_argument("SigmaSpec: eigenvalues must be > 0");
        d((Eigen::Index)i) = diag[i];
      }
      return d.cwiseSqrt().asDiagonal();
    }
    case Kind::haar_diagonal: {
      Eigen::VectorXd d = Eigen::VectorXd::Ones(p);
      if ((int)diag.size() > p) throw std::invalid_argument("SigmaSpec: more eigenvalues than p");
      for (std::size_t i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0)) throw std::invalid_argument("SigmaSpec: eigenvalues must be > 0");
        d((Eigen::Index)i) = diag[i];
      }
      Eigen::MatrixXd u = haar_orthogonal(p, rng);
      return u * d.cwiseSqrt().asDiagonal() * u.transpose();
    }
    case Kind::toeplitz: {
      Eigen::MatrixXd m(p, p);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) m(i, j) = scale * std::pow(rho, std::abs(i - j));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
      if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("SigmaSpec: toeplitz matrix not positive definite");
      return es.operatorSqrt();
    }
  }
  throw std::logic_error("SigmaSpec: unknown kind");
}

Eigen::MatrixXd SigmaSpec::dense(int p, std::mt19937_64& rng) const {
  Eigen::MatrixXd f = sqrt_factor(p, rng);
  return f * f.transpose();
}

Eigen::MatrixXd random_entries(int rows, int cols, EntryDist dist, std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  if (dist == EntryDist::gaussian) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = g(rng);
  } else {
    std::gamma_distribution<double> g(2.0, 1.0);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = (g(rng) - 2.0) * inv_sqrt2;
  }
  return m;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data, bool unbiased) {
  if (data.cols() < 1 || data.rows() < 1)
    throw std::invalid_argument("sample_covariance: empty data");
  check_finite(data, "sample_covariance");
  const double n = (double)data.cols();
  if (!unbiased) return (data * data.transpose()) / n;
  if (data.cols() < 2)
    throw std::invalid_argument("sample_covariance: unbiased estimator needs n >= 2");
  Eigen::MatrixXd centered = data.colwise() - data.rowwise().mean();
  return (centered * centered.transpose()) / (n - 1.0);
}

Eigen::VectorXd fisher_eigenvalues(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
  if (s1.rows() != s1.cols() || s2.rows() != s2.cols() || s1.rows() != s2.rows())
    throw std::invalid_argument("fisher_eigenvalues: dimension mismatch");
  check_finite(s1, "fisher_eigenvalues");
  check_finite(s2, "fisher_eigenvalues");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(s2, Eigen::EigenvaluesOnly);
  const double lo = es2.eigenvalues().minCoeff();
  const double hi = es2.eigenvalues().maxCoeff();
  if (!(lo > kPencilTol * std::max(hi, 1.0)))
    throw std::runtime_error("fisher_eigenvalues: s2 numerically singular, eigenvalue ratio " +
                             std::to_string(lo / std::max(hi, 1e-300)));

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(s1, s2, Eigen::EigenvaluesOnly);
  Eigen::VectorXd vals = ges.eigenvalues().reverse();
  for (int i = 0; i < vals.size(); ++i) {
    if (vals(i) < -1e-10 * std::max(1.0, std::abs(vals(0))))
      throw std::runtime_error("fisher_eigenvalues: negative eigenvalue " + std::to_string(vals(i)));
    if (vals(i) < 0.0) vals(i) = 0.0;
  }
  return vals;
}

FisherEigs fisher_eigs_from_samples(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows()) throw std::invalid_argument("fisher_eigs_from_samples: p mismatch");
  FisherEigs fe;
  fe.p = (int)x.rows();
  fe.n1 = (int)x.cols();
  fe.n2 = (int)y.cols();
  if (fe.n2 <= fe.p)
    throw std::invalid_argument("fisher_eigs_from_samples: need n2 > p for invertible s2");
  fe.values = fisher_eigenvalues(sample_covariance(x), sample_covariance(y));
  return fe;
}

RatioProfile FisherEigs::ratios() const {
  RatioProfile r;
  r.c1 = (double)p / (double)n1;
  r.c2 = (double)p / (double)n2;
  r.validate();
  return r;
}

TwoSample generate_two_sample(int p, int n1, int n2, const SigmaSpec& sigma1,
                              const SigmaSpec& sigma2, EntryDist dist, std::uint64_t seed) {
  if (p < 1 || n1 < 1 || n2 < 1) throw std::invalid_argument("generate_two_sample: bad dims");
  std::mt19937_64 rng = seeded_rng(seed);
  TwoSample ts;
  Eigen::MatrixXd f1 = sigma1.sqrt_factor(p, rng);
  Eigen::MatrixXd f2 = sigma2.sqrt_factor(p, rng);
  ts.x = f1 * random_entries(p, n1, dist, rng);
  ts.y = f2 * random_entries(p, n2, dist, rng);
  return ts;
}

double estimate_beta(const Eigen::MatrixXd& data, int q) {
  if (data.cols() < 2) throw std::invalid_argument("estimate_beta: need n >= 2");
  check_finite(data, "estimate_beta");
  const int p = (int)data.rows();
  const int n = (int)data.cols();
  double acc = 0.0;
  for (int i = 0; i < p; ++i) {
    const double mean = data.row(i).mean();
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (data(i, j) - mean) * (data(i, j) - mean);
    var /= (n - 1.0);
    if (!(var > 0.0))
      throw std::invalid_argument("estimate_beta: coordinate " + std::to_string(i) +
                                  " has zero variance");
    const double inv_sd = 1.0 / std::sqrt(var);
    for (int j = 0; j < n; ++j) {
      const double z = (data(i, j) - mean) * inv_sd;
      acc += z * z * z * z;
    }
  }
  return acc / ((double)p * n) - q - 2.0;
}

}  // namespace spikefisher
