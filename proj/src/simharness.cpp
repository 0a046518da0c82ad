#include "spikefisher/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <thread>

namespace spikefisher {

namespace {

EntryDist dist_of(Population pop) {
  return pop == Population::gaussian ? EntryDist::gaussian : EntryDist::standardized_gamma;
}

// the standardized Gamma(2,1) population has fourth cumulant 3
MomentProfile moments_of(Population pop) {
  MomentProfile m = MomentProfile::gaussian_real();
  if (pop == Population::gamma) m.beta_x = m.beta_y = 3.0;
  return m;
}

SpectralFn fn_of(SpectralFn::Kind kind) {
  switch (kind) {
    case SpectralFn::Kind::x:
      return SpectralFn::x();
    case SpectralFn::Kind::log:
      return SpectralFn::log();
    default:
      throw std::invalid_argument("experiment: statistic must be the x or log kind");
  }
}

// Replications are independent; run them on a slot-indexed pool so the
// outcome never depends on scheduling. fn must not throw (catch into slots).
template <typename Fn>
void parallel_reps(int reps, Fn&& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(reps)));
  std::atomic<int> next{0};
  auto drain = [&]() {
    for (int rep; (rep = next.fetch_add(1)) < reps;) fn(rep);
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
  drain();
  for (auto& th : pool) th.join();
}

int count_failures(const std::vector<unsigned char>& failed) {
  int c = 0;
  for (unsigned char f : failed) c += f;
  return c;
}

void enforce_failure_budget(const char* op, const std::vector<unsigned char>& failed,
                            const std::vector<std::string>& errors) {
  const int reps = static_cast<int>(failed.size());
  const int failures = count_failures(failed);
  if (100 * failures <= reps) return;
  std::string first;
  for (int rep = 0; rep < reps; ++rep)
    if (failed[rep]) {
      first = errors[rep];
      break;
    }
  throw std::runtime_error(std::string(op) + ": " + std::to_string(failures) + " of " +
                           std::to_string(reps) + " replications failed, first: " + first);
}

// columns from post_from onward follow the post-change law; post_from == span
// yields a pure pre-change (null) stretch
Eigen::MatrixXd model_sequence(const ExperimentSpec& spec, std::mt19937_64& rng, int span,
                               int post_from) {
  const EntryDist dist = dist_of(spec.population);
  const int post = span - post_from;
  if (spec.model == 5) {
    Eigen::MatrixXd x = random_entries(spec.p, span, dist, rng);
    if (post > 0) x.rightCols(post) *= std::sqrt(spec.rho);
    x.array() += 0.6;
    return x;
  }
  Eigen::MatrixXd a(spec.p, 5);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  for (int i = 0; i < spec.p; ++i)
    for (int j = 0; j < 5; ++j) a(i, j) = unif(rng);
  Eigen::MatrixXd fac = random_entries(5, span, EntryDist::gaussian, rng);
  Eigen::MatrixXd e = random_entries(spec.p, span, dist, rng);
  if (post > 0)
    e.rightCols(post) =
        SigmaSpec::toeplitz(0.8, spec.rho).sqrt_factor(spec.p, rng) * e.rightCols(post);
  return a * fac + e;
}

}  // namespace

int ExperimentSpec::n1() const { return static_cast<int>(std::lround(p / c1)); }

int ExperimentSpec::n2() const { return static_cast<int>(std::lround(p / c2)); }

int ExperimentSpec::true_m0() const { return model <= 2 ? 4 : 5; }

int ExperimentSpec::change_column() const { return 2 * t / 3; }

int ExperimentSpec::outlier_column() const { return t / 3; }

WindowPlan ExperimentSpec::window_plan() const {
  WindowPlan plan;
  plan.q11 = 2 * p;
  plan.q12 = 2 * p;
  plan.s = 20;
  plan.alpha = detect_alpha;
  return plan;
}

SpectrumH ExperimentSpec::base_h() const {
  if (model != 2) return SpectrumH::delta1();
  // the generator's spikes replace the last of the p/2 twos, so the non-spike
  // block holds p/2 ones and p/2 - 4 twos
  const double ones = p / 2, twos = p / 2 - 4;
  return SpectrumH::from_atoms({1.0, 2.0}, {ones / (ones + twos), twos / (ones + twos)});
}

std::string ExperimentSpec::scenario() const {
  const char* pop = population == Population::gaussian ? "gaussian" : "gamma";
  char buf[160];
  if (model <= 2)
    std::snprintf(buf, sizeof buf, "model%d-%s-p%d-c1_%g-c2_%g-%s", model, pop, p, c1, c2,
                  fn_of(f).name().c_str());
  else if (model <= 4)
    std::snprintf(buf, sizeof buf, "model%d-%s-p%d-n%d-r%d-r1_%d", model, pop, p, n, r, r1);
  else
    std::snprintf(buf, sizeof buf, "model%d-%s-p%d-t%d-rho%g", model, pop, p, t, rho);
  return buf;
}

void ExperimentSpec::validate() const {
  if (model < 1 || model > 6) throw std::invalid_argument("experiment: model must lie in 1..6");
  if (reps < 1) throw std::invalid_argument("experiment: replication count must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("experiment: alpha must lie in (0, 1)");
  if (model <= 2) {
    if (p < 10) throw std::invalid_argument("experiment: dimension too small");
    RatioProfile{c1, c2}.validate();
    if (model == 2 && p % 2 != 0)
      throw std::invalid_argument("experiment: model 2 splits the diagonal, p must be even");
    fn_of(f);
    for (int m0 : m0_grid)
      if (m0 < 0 || 2 * m0 >= p)
        throw std::invalid_argument("experiment: grid order " + std::to_string(m0) +
                                    " too large for p");
  } else if (model <= 4) {
    if (r1 < 5 || r1 > r)
      throw std::invalid_argument("experiment: need 5 <= r1 <= r for the regression models");
    if (n < p + r) throw std::invalid_argument("experiment: regression needs n >= p + r");
    if (model == 4 && !(rho > 0.0 && rho < 1.0))
      throw std::invalid_argument("experiment: model 4 noise decay must lie in (0, 1)");
    for (int m0 : m0_grid)
      if (m0 < 0 || 2 * m0 >= std::min(p, r1))
        throw std::invalid_argument("experiment: grid order " + std::to_string(m0) +
                                    " too large for the design");
  } else {
    if (!(rho > 0.0)) throw std::invalid_argument("experiment: shift size must be positive");
    if (t < 3) throw std::invalid_argument("experiment: sequence too short");
    window_plan().validate(p);
  }
}

FisherEigs make_fisher_replication(const ExperimentSpec& spec, int rep) {
  auto rng = seeded_rng(spec.seed, static_cast<std::uint64_t>(rep));
  const EntryDist dist = dist_of(spec.population);
  SigmaSpec sigma1;
  if (spec.model == 1) {
    sigma1 = SigmaSpec::haar_diagonal({10.0, 8.0, 8.0, 6.0});
  } else {
    std::vector<double> d = {36.0, 25.0, 25.0, 16.0};
    d.insert(d.end(), spec.p / 2 - 4, 2.0);  // the remaining p/2 ones are implicit
    sigma1 = SigmaSpec::diagonal(std::move(d));
  }
  Eigen::MatrixXd x =
      sigma1.sqrt_factor(spec.p, rng) * random_entries(spec.p, spec.n1(), dist, rng);
  Eigen::MatrixXd y = random_entries(spec.p, spec.n2(), dist, rng);
  return fisher_eigs_from_samples(x, y);
}

RegressionDesign make_regression_replication(const ExperimentSpec& spec, int rep) {
  auto rng = seeded_rng(spec.seed, static_cast<std::uint64_t>(rep));
  RegressionDesign d;
  d.r1 = spec.r1;
  d.w = random_entries(spec.r, spec.n, EntryDist::gaussian, rng);
  Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(spec.p, spec.r1);
  b1.leftCols(5) = random_entries(spec.p, 5, EntryDist::gaussian, rng);
  Eigen::MatrixXd eps = random_entries(spec.p, spec.n, dist_of(spec.population), rng);
  if (spec.model == 4)
    eps = SigmaSpec::toeplitz(spec.rho).sqrt_factor(spec.p, rng) * eps;
  d.z = b1 * d.w.topRows(spec.r1) + eps;
  return d;
}

Eigen::MatrixXd make_sequence_replication(const ExperimentSpec& spec, int rep) {
  auto rng = seeded_rng(spec.seed, static_cast<std::uint64_t>(rep));
  Eigen::MatrixXd x = model_sequence(spec, rng, spec.t, spec.change_column());
  x.col(spec.outlier_column()).array() += 20.0;
  x.col(spec.outlier_column() + 1).array() += 20.0;
  return x;
}

SizePowerTable run_size_power(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.model > 4)
    throw std::invalid_argument("run_size_power: models 5-6 report accuracy, use the benchmark");
  if (spec.m0_grid.empty()) throw std::invalid_argument("run_size_power: empty m0 grid");
  const int reps = spec.reps;
  const int cells = static_cast<int>(spec.m0_grid.size());
  std::vector<unsigned char> reject(static_cast<std::size_t>(reps) * cells, 0);
  std::vector<unsigned char> failed(reps, 0);
  std::vector<std::string> errors(reps);

  if (spec.model <= 2) {
    const SpectralFn f = fn_of(spec.f);
    const SpectrumH h = spec.base_h();
    CltMethod method = spec.method;
    if (h.size() > 1) method = CltMethod::contour_general;  // mixtures need the general path
    const MeanVar mv = meanvar_for_method(f, spec.c1, spec.c2, h, moments_of(spec.population),
                                          method);
    parallel_reps(reps, [&](int rep) {
      try {
        const FisherEigs eigs = make_fisher_replication(spec, rep);
        for (int k = 0; k < cells; ++k) {
          const TestReport report = test_spike_count(eigs, spec.m0_grid[k], f,
                                                     SpikeConfig::none(), h, mv, spec.alpha);
          reject[static_cast<std::size_t>(rep) * cells + k] =
              report.decision == Decision::reject;
        }
      } catch (const std::exception& e) {
        failed[rep] = 1;
        errors[rep] = e.what();
      }
    });
  } else {
    const RatioProfile ratios{static_cast<double>(spec.p) / spec.r1,
                              static_cast<double>(spec.p) / (spec.n - spec.r)};
    const SpectralFn f = SpectralFn::log1p_scaled(ratios.c2 / ratios.c1);
    const SpectrumH h = SpectrumH::delta1();
    const MeanVar mv = meanvar_regression(ratios.c1, ratios.c2);
    parallel_reps(reps, [&](int rep) {
      try {
        const RegressionDesign d = make_regression_replication(spec, rep);
        const WilksStatistic wilks = wilks_modified(fit_mle(d), d.n(), d.r());
        for (int k = 0; k < cells; ++k) {
          const TestReport report = test_spike_count(wilks.eigs, spec.m0_grid[k], f,
                                                     SpikeConfig::none(), h, mv, spec.alpha);
          reject[static_cast<std::size_t>(rep) * cells + k] =
              report.decision == Decision::reject;
        }
      } catch (const std::exception& e) {
        failed[rep] = 1;
        errors[rep] = e.what();
      }
    });
  }

  enforce_failure_budget("run_size_power", failed, errors);
  const int failures = count_failures(failed);
  const int good = reps - failures;
  SizePowerTable out;
  for (int k = 0; k < cells; ++k) {
    int cnt = 0;
    for (int rep = 0; rep < reps; ++rep)
      if (!failed[rep]) cnt += reject[static_cast<std::size_t>(rep) * cells + k];
    SizePowerRow row;
    row.scenario = spec.scenario();
    row.m0 = spec.m0_grid[k];
    row.frequency = static_cast<double>(cnt) / good;
    row.std_error = std::sqrt(row.frequency * (1.0 - row.frequency) / good);
    row.reps = good;
    row.failures = failures;
    out.rows.push_back(std::move(row));
  }
  return out;
}

double ks_normal_distance(std::vector<double> z) {
  if (z.empty()) throw std::invalid_argument("ks_normal_distance: empty sample");
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double cdf = normal_cdf(z[i]);
    ks = std::max(ks, std::max(std::abs((i + 1.0) / n - cdf), std::abs(i / n - cdf)));
  }
  return ks;
}

HistogramData run_null_histogram(const ExperimentSpec& spec) {
  spec.validate();
  const int reps = spec.reps;
  std::vector<double> z(reps, 0.0);
  std::vector<unsigned char> failed(reps, 0);
  std::vector<std::string> errors(reps);

  if (spec.model <= 2) {
    const SpectralFn f = fn_of(spec.f);
    const SpectrumH h = spec.base_h();
    CltMethod method = spec.method;
    if (h.size() > 1) method = CltMethod::contour_general;
    const MeanVar mv = meanvar_for_method(f, spec.c1, spec.c2, h, moments_of(spec.population),
                                          method);
    const int m0 = spec.true_m0();
    parallel_reps(reps, [&](int rep) {
      try {
        const FisherEigs eigs = make_fisher_replication(spec, rep);
        z[rep] = test_spike_count(eigs, m0, f, SpikeConfig::none(), h, mv, spec.alpha).z_score;
      } catch (const std::exception& e) {
        failed[rep] = 1;
        errors[rep] = e.what();
      }
    });
  } else if (spec.model <= 4) {
    const int m0 = spec.true_m0();
    parallel_reps(reps, [&](int rep) {
      try {
        z[rep] = test_variable_count(make_regression_replication(spec, rep), m0, spec.alpha)
                     .z_score;
      } catch (const std::exception& e) {
        failed[rep] = 1;
        errors[rep] = e.what();
      }
    });
  } else {
    const WindowPlan plan = spec.window_plan();
    const int span = plan.q11 + plan.q12;
    parallel_reps(reps, [&](int rep) {
      try {
        auto rng = seeded_rng(spec.seed, static_cast<std::uint64_t>(rep));
        const Eigen::MatrixXd x = model_sequence(spec, rng, span, span);
        z[rep] = window_statistic(x.leftCols(plan.q11), x.rightCols(plan.q12)).z_score;
      } catch (const std::exception& e) {
        failed[rep] = 1;
        errors[rep] = e.what();
      }
    });
  }

  enforce_failure_budget("run_null_histogram", failed, errors);
  HistogramData out;
  out.failures = count_failures(failed);
  const int bins = 40;
  const double lo = -4.0, hi = 4.0, width = (hi - lo) / bins;
  out.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) out.edges[b] = lo + width * b;
  out.counts.assign(bins, 0);
  out.normal_density.resize(bins);
  for (int b = 0; b < bins; ++b) {
    const double c = lo + width * (b + 0.5);
    out.normal_density[b] = std::exp(-0.5 * c * c) / std::sqrt(2.0 * 3.14159265358979323846);
  }
  for (int rep = 0; rep < reps; ++rep) {
    if (failed[rep]) continue;
    out.z_scores.push_back(z[rep]);
    const int b = static_cast<int>(std::floor((z[rep] - lo) / width));
    if (b >= 0 && b < bins) ++out.counts[b];
  }
  out.ks_distance = ks_normal_distance(out.z_scores);
  return out;
}

BenchmarkResult run_changepoint_benchmark(const ExperimentSpec& spec, int tolerance) {
  spec.validate();
  if (spec.model < 5)
    throw std::invalid_argument("run_changepoint_benchmark: needs model 5 or 6");
  const WindowPlan plan = spec.window_plan();
  if (spec.t < plan.q11 + plan.q12 + plan.s)
    throw std::invalid_argument(
        "run_changepoint_benchmark: sequence shorter than one window plus the run length");
  const int tol = tolerance < 0 ? plan.s : tolerance;

  BenchmarkResult out;
  out.scenario = spec.scenario();
  out.runs = spec.reps;
  out.true_change = spec.change_column();
  out.locations.assign(spec.reps, -1);
  std::vector<unsigned char> failed(spec.reps, 0);
  std::vector<std::string> errors(spec.reps);
  parallel_reps(spec.reps, [&](int rep) {
    try {
      const auto st = detect_change_point(make_sequence_replication(spec, rep), plan);
      if (st.change_point) out.locations[rep] = *st.change_point;
    } catch (const std::exception& e) {
      failed[rep] = 1;
      errors[rep] = e.what();
    }
  });
  for (int rep = 0; rep < spec.reps; ++rep)
    if (failed[rep])
      throw std::runtime_error("run_changepoint_benchmark: replication " + std::to_string(rep) +
                               ": " + errors[rep]);

  const int o = spec.outlier_column();
  for (int loc : out.locations) {
    if (loc < 0) continue;
    ++out.detected;
    out.correct += std::abs(loc - out.true_change) <= tol;
    out.outlier_flagged += loc == o || loc == o + 1;
  }
  out.accuracy = static_cast<double>(out.correct) / out.runs;
  return out;
}

}  // namespace spikefisher
