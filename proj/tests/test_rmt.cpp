#include "spikefisher/rmt.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "spikefisher/model.hpp"

namespace sf = spikefisher;
using sf::cplx;

namespace {

// Example 2.2 bracket: per-unit-p centering of log under H = delta_1
double log_center_unit(double c1, double c2) {
  const double h2 = c1 + c2 - c1 * c2;
  return (1.0 - c2) * std::log(1.0 - c2) / c2 +
         (1.0 - h2) * (std::log(1.0 - h2) - std::log(1.0 - c2)) / (c2 - h2);
}

// closed-form spike map for H = delta_1
double psi_delta1(double alpha, double c1, double c2) {
  return alpha * (1.0 - alpha - c1) / (1.0 - alpha + c2 * alpha);
}

}  // namespace

TEST(stieltjes_mc2, degenerate_c2_zero) {
  auto h = sf::SpectrumH::delta1();
  const cplx z(1.3, 0.7);
  auto sol = sf::solve_stieltjes_mc2(z, 0.0, h);
  EXPECT_NEAR(std::abs(sol.m - (-1.0 / z)), 0.0, 1e-12);
}

TEST(stieltjes_mc2, quadratic_oracle) {
  // z = -1/m + c2/(1+m)  <=>  z m^2 + (z + 1 - c2) m + 1 = 0
  auto h = sf::SpectrumH::delta1();
  const double c2 = 0.2;
  const cplx z(2.0, 1e-6);
  const cplx b = z + 1.0 - c2;
  const cplx disc = std::sqrt(b * b - 4.0 * z);
  cplx r1 = (-b + disc) / (2.0 * z);
  cplx r2 = (-b - disc) / (2.0 * z);
  const cplx want = r1.imag() > 0.0 ? r1 : r2;
  auto sol = sf::solve_stieltjes_mc2(z, c2, h);
  EXPECT_LT(std::abs(sol.m - want), 1e-10);
  EXPECT_LT(sol.residual, 1e-10);
}

TEST(stieltjes_mc2, herglotz_sweep) {
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ux(0.05, 8.0), uy(1e-4, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const cplx z(ux(rng), uy(rng));
    auto sol = sf::solve_stieltjes_mc2(z, 0.5, h);
    EXPECT_GT(sol.m.imag(), 0.0);
    EXPECT_LT(sol.residual, 1e-10);
  }
}

TEST(stieltjes_mc2, real_z_inside_support_is_complex) {
  auto h = sf::SpectrumH::delta1();
  // companion measure at ratio c2 = 0.2 covers (1 -+ sqrt(0.2))^2
  auto sol = sf::solve_stieltjes_mc2(cplx(1.0, 1e-9), 0.2, h);
  EXPECT_GT(sol.m.imag(), 1e-3);
}

TEST(fisher_lsd, support_matches_closed_form) {
  sf::FisherLsdMap map(0.5, 0.2, sf::SpectrumH::delta1());
  auto sup = map.support();
  ASSERT_EQ(sup.intervals.size(), 1u);
  auto [a, b] = sf::wachter_edges(0.5, 0.2);
  EXPECT_NEAR(sup.intervals[0].first, a, 1e-8);
  EXPECT_NEAR(sup.intervals[0].second, b, 1e-8);
  EXPECT_NEAR(a, 0.079385, 2e-6);
  EXPECT_NEAR(b, 4.920616, 2e-6);
  EXPECT_DOUBLE_EQ(sup.point_mass, 0.0);
}

TEST(fisher_lsd, point_mass_when_c1_large) {
  sf::FisherLsdMap map(2.0, 0.2, sf::SpectrumH::delta1());
  auto sup = map.support();
  EXPECT_NEAR(sup.point_mass, 0.5, 1e-12);
  EXPECT_GT(sup.intervals[0].first, 0.0);
  auto dens = sf::fisher_lsd_density(2.0, 0.2, sf::SpectrumH::delta1());
  EXPECT_NEAR(dens.total_mass(), 1.0, 2e-6);
}

TEST(fisher_lsd, root_branch_density_equals_wachter) {
  // drive the general-H machinery on delta_1 and compare pointwise
  sf::FisherLsdMap map(0.5, 0.2, sf::SpectrumH::delta1());
  auto [a, b] = sf::wachter_edges(0.5, 0.2);
  for (double fr : {0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98}) {
    const double x = a + fr * (b - a);
    const double got = map.density_at(x).density;
    EXPECT_NEAR(got, sf::wachter_density(x, 0.5, 0.2), 1e-9);
  }
}

TEST(fisher_lsd, mass_and_grid) {
  auto dens = sf::fisher_lsd_density(0.5, 0.2, sf::SpectrumH::delta1());
  EXPECT_NEAR(dens.total_mass(), 1.0, 2e-6);
  EXPECT_EQ(dens.point_mass, 0.0);
  for (double d : dens.grid_density) EXPECT_GE(d, 0.0);
  for (std::size_t i = 1; i < dens.grid_x.size(); ++i) EXPECT_GT(dens.grid_x[i], dens.grid_x[i - 1]);
  EXPECT_NEAR(dens.cdf(1e9), 1.0, 2e-6);
  EXPECT_NEAR(dens.cdf(-1.0), 0.0, 1e-12);
  const double mid = dens.cdf(1.0);
  EXPECT_GT(mid, 0.3);
  EXPECT_LT(mid, 0.9);
}

TEST(fisher_lsd, two_atom_mass) {
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  auto dens = sf::fisher_lsd_density(0.2, 0.5, h);
  EXPECT_NEAR(dens.total_mass(), 1.0, 1e-3);
}

TEST(fisher_lsd, m0_branch_satisfies_defining_equation) {
  // m0(z) solves the companion equation at -underline_m(z)
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  sf::FisherLsdMap map(0.4, 0.3, h);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.1, 9.0), uy(0.01, 3.0);
  for (int i = 0; i < 200; ++i) {
    const cplx z(ux(rng), uy(rng));
    const cplx m0 = map.m0_at(z);
    EXPECT_LT(std::abs(map.z_of_m0(m0) - z), 1e-9 * (1.0 + std::abs(z)));
    EXPECT_LT(m0.imag(), 0.0);
    const cplx um = map.underline_m(m0);
    EXPECT_GT(um.imag(), 0.0);
    EXPECT_GT(map.m_f(m0, z).imag(), 0.0);
    sf::StieltjesOptions opts;
    opts.initial = m0;
    auto sol = sf::solve_stieltjes_mc2(-um, 0.3, h, opts);
    EXPECT_LT(std::abs(sol.m - m0), 1e-8 * (1.0 + std::abs(m0)));
  }
}

TEST(fisher_lsd, stieltjes_from_density_matches_map) {
  const double c1 = 0.5, c2 = 0.2;
  auto h = sf::SpectrumH::delta1();
  sf::FisherLsdMap map(c1, c2, h);
  auto dens = sf::fisher_lsd_density(c1, c2, h, 8192);
  const cplx z(2.0, 0.8);
  cplx quad = 0.0;
  for (std::size_t i = 1; i < dens.grid_x.size(); ++i) {
    const double xm = 0.5 * (dens.grid_x[i] + dens.grid_x[i - 1]);
    const double dm = 0.5 * (dens.grid_density[i] + dens.grid_density[i - 1]);
    quad += dm * (dens.grid_x[i] - dens.grid_x[i - 1]) / (xm - z);
  }
  const cplx mf = map.m_f(map.m0_at(z), z);
  EXPECT_LT(std::abs(mf - quad), 5e-3);
}

TEST(fisher_lsd, derivative_consistency) {
  auto h = sf::SpectrumH::from_atoms({1.0, 3.0}, {0.7, 0.3});
  sf::FisherLsdMap map(0.6, 0.25, h);
  const cplx m0(-4.2, -0.7);
  const cplx dm(1e-6, 2e-7);
  const cplx num_dz = (map.z_of_m0(m0 + dm) - map.z_of_m0(m0 - dm)) / (2.0 * dm);
  EXPECT_LT(std::abs(num_dz - map.dz_dm0(m0)), 1e-5 * std::abs(num_dz));
  const cplx num_dum = (map.underline_m(m0 + dm) - map.underline_m(m0 - dm)) / (2.0 * dm);
  EXPECT_LT(std::abs(num_dum - map.dunderline_m_dm0(m0)), 1e-5 * std::abs(num_dum));
}

TEST(psi_map, pinned_values) {
  auto h = sf::SpectrumH::delta1();
  EXPECT_NEAR(sf::psi(10.0, 0.5, 0.2, h), 95.0 / 7.0, 1e-12);
  EXPECT_NEAR(sf::psi(6.0, 0.5, 0.2, h), 6.0 * 5.5 / 3.8, 1e-12);
  EXPECT_DOUBLE_EQ(sf::psi(3.7, 0.0, 0.0, h), 3.7);
  EXPECT_THROW(sf::psi(1.0, 0.5, 0.2, h), std::invalid_argument);
}

TEST(psi_map, matches_z_of_m0) {
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  sf::FisherLsdMap map(0.5, 0.2, h);
  for (double alpha : {4.0, 6.0, 11.0}) {
    const double via_map = map.z_of_m0(cplx(-alpha, 0.0)).real();
    EXPECT_NEAR(sf::psi(alpha, 0.5, 0.2, h), via_map, 1e-10 * std::abs(via_map));
  }
}

TEST(psi_map, detachment_hits_support_edge) {
  for (double c1 : {0.2, 0.5, 0.8}) {
    for (double c2 : {0.2, 0.5, 0.8}) {
      auto h = sf::SpectrumH::delta1();
      auto det = sf::psi_detachment(c1, c2, h);
      auto [a, b] = sf::wachter_edges(c1, c2);
      EXPECT_NEAR(det.psi_min, b, 1e-8 * b);
      EXPECT_GT(det.alpha_c, 1.0);
      // detachment is a local minimum of psi beyond the spectrum
      const double eps = 1e-4 * det.alpha_c;
      EXPECT_GE(sf::psi(det.alpha_c + eps, c1, c2, h), det.psi_min - 1e-10);
      EXPECT_GE(sf::psi(det.alpha_c - eps, c1, c2, h), det.psi_min - 1e-10);
    }
  }
}

TEST(psi_map, spikes_passing_separation_detach) {
  auto h = sf::SpectrumH::delta1();
  for (double c1 : {0.2, 0.5, 0.8}) {
    for (double c2 : {0.2, 0.5, 0.8}) {
      const double b = sf::wachter_edges(c1, c2).second;
      const double ac = sf::psi_detachment(c1, c2, h).alpha_c;
      for (double alpha : {1.5, 2.0, 4.0, 9.0}) {
        // strictly past detachment the spike lands strictly beyond the edge;
        // at alpha_c itself psi equals b exactly
        if (alpha <= ac * (1.0 + 1e-9)) continue;
        EXPECT_GT(sf::psi(alpha, c1, c2, h), b);
      }
    }
  }
}

TEST(psi_map, inverse_round_trip) {
  auto h = sf::SpectrumH::delta1();
  const double c1 = 0.5, c2 = 0.2;
  for (double alpha : {2.5, 3.0, 5.0, 8.0, 12.0}) {
    const double l = sf::psi(alpha, c1, c2, h);
    auto inv = sf::psi_inverse(l, c1, c2, h);
    EXPECT_FALSE(inv.clamped);
    EXPECT_NEAR(inv.alpha, alpha, 1e-9 * alpha);
  }
  auto clamped = sf::psi_inverse(4.0, c1, c2, h);  // below the edge b = 4.92
  EXPECT_TRUE(clamped.clamped);
  EXPECT_NEAR(clamped.alpha, sf::psi_detachment(c1, c2, h).alpha_c, 1e-9);
}

TEST(centering, f_x_identity_delta1) {
  auto h = sf::SpectrumH::delta1();
  for (double c1 : {0.2, 0.5, 0.8}) {
    for (double c2 : {0.2, 0.5, 0.8}) {
      const double got = sf::centering_d1(sf::SpectralFn::x(), c1, c2, h, 100);
      const double want = 100.0 / (1.0 - c2);
      EXPECT_NEAR(got, want, 1e-7 * want);
    }
  }
}

TEST(centering, f_x_identity_spiked) {
  // first-moment identity p int x dF = p int t dH / (1 - c2) for any atomic H
  auto hn = sf::spiked_population(sf::SpectrumH::delta1(), {10.0, 8.0, 6.0}, {1, 2, 1}, 200);
  const double mean_h = hn.moment(1);
  EXPECT_NEAR(mean_h, (196.0 + 10 + 8 + 8 + 6) / 200.0, 1e-14);
  const double got = sf::centering_d1(sf::SpectralFn::x(), 0.5, 0.2, hn, 200);
  const double want = 200.0 * mean_h / 0.8;
  EXPECT_NEAR(got, want, 1e-6 * want);
}

TEST(centering, f_x_two_atom) {
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  const double got = sf::centering_d1(sf::SpectralFn::x(), 0.2, 0.5, h, 400);
  const double want = 400.0 * 1.5 / 0.5;
  EXPECT_NEAR(got, want, 1e-6 * want);
}

TEST(centering, f_x_c2_zero_gives_p) {
  const double got = sf::centering_d1(sf::SpectralFn::x(), 0.5, 0.0, sf::SpectrumH::delta1(), 100);
  EXPECT_NEAR(got, 100.0, 1e-6);
}

TEST(centering, f_log_closed_form_delta1) {
  const double c1 = 0.5, c2 = 0.2;
  const double got = sf::centering_d1(sf::SpectralFn::log(), c1, c2, sf::SpectrumH::delta1(), 100);
  const double want = 100.0 * log_center_unit(c1, c2);
  EXPECT_NEAR(got, want, 1e-6 * std::abs(want));
}

TEST(centering, f_log_spiked_matches_example_closed_form) {
  // d_log1 of the worked example equals d1 over the spiked H_n minus the
  // spike compensation sum
  const double c1 = 0.5, c2 = 0.2;
  const int p = 200;
  const std::vector<double> alphas = {10.0, 8.0, 6.0};
  const std::vector<int> mult = {1, 2, 1};
  auto hn = sf::spiked_population(sf::SpectrumH::delta1(), alphas, mult, p);
  const double d1 = sf::centering_d1(sf::SpectralFn::log(), c1, c2, hn, p);
  double d2 = 0.0, closed = p * log_center_unit(c1, c2);
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    d2 += mult[k] * std::log(psi_delta1(alphas[k], c1, c2));
    closed -= mult[k] * std::log((1.0 - alphas[k] - c1) / (1.0 - alphas[k] + c2 * alphas[k]));
  }
  EXPECT_NEAR(d1 - d2, closed, 2e-5 * std::abs(closed));
}

TEST(centering, log_with_point_mass_raises) {
  EXPECT_THROW(sf::centering_d1(sf::SpectralFn::log(), 2.0, 0.2, sf::SpectrumH::delta1(), 100),
               std::domain_error);
}

TEST(centering, log1p_matches_grid_integration) {
  const double c1 = 0.5, c2 = 0.2, kappa = c2 / c1;
  auto f = sf::SpectralFn::log1p_scaled(kappa);
  const double got = sf::centering_d1(f, c1, c2, sf::SpectrumH::delta1(), 100);
  auto dens = sf::fisher_lsd_density(c1, c2, sf::SpectrumH::delta1(), 16384);
  double quad = 0.0;
  for (std::size_t i = 1; i < dens.grid_x.size(); ++i)
    quad += 0.5 * (dens.grid_density[i] * f(dens.grid_x[i]) +
                   dens.grid_density[i - 1] * f(dens.grid_x[i - 1])) *
            (dens.grid_x[i] - dens.grid_x[i - 1]);
  EXPECT_NEAR(got, 100.0 * quad, 1e-3 * std::abs(got));
}

TEST(spiked_population, merges_and_normalizes) {
  auto hn = sf::spiked_population(sf::SpectrumH::delta1(), {10.0, 8.0, 8.0, 6.0}, {1, 1, 1, 1}, 100);
  ASSERT_EQ(hn.size(), 4u);  // 8 merged
  EXPECT_DOUBLE_EQ(hn.t[0], 1.0);
  EXPECT_NEAR(hn.w[0], 0.96, 1e-14);
  EXPECT_NEAR(hn.w[2], 0.02, 1e-14);  // the doubled atom at 8
  EXPECT_THROW(sf::spiked_population(sf::SpectrumH::delta1(), {5.0}, {100}, 100),
               std::invalid_argument);
}

TEST(monte_carlo, lsd_matches_eigenvalue_histogram) {
  // Model-2-like null at p = 400: H = 0.5 delta_1 + 0.5 delta_2
  const int p = 400;
  const double c1 = 0.2, c2 = 0.5;
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  auto dens = sf::fisher_lsd_density(c1, c2, h, 8192);
  std::vector<double> d(p, 1.0);
  for (int i = 0; i < p / 2; ++i) d[i] = 2.0;
  auto s = sf::generate_two_sample(p, (int)(p / c1), (int)(p / c2), sf::SigmaSpec::diagonal(d),
                                   sf::SigmaSpec::identity(), sf::EntryDist::gaussian, 4242);
  auto fe = sf::fisher_eigs_from_samples(s.x, s.y);
  double ks = 0.0;
  for (int i = 0; i < p; ++i) {
    const double x = fe.values(p - 1 - i);  // ascending
    const double emp_lo = (double)i / p, emp_hi = (double)(i + 1) / p;
    const double cdf = dens.cdf(x);
    ks = std::max(ks, std::max(std::abs(cdf - emp_lo), std::abs(cdf - emp_hi)));
  }
  EXPECT_LT(ks, 0.02);
}

TEST(monte_carlo, centering_matches_lss_mean) {
  // |p^{-1} sum f(l_j) - p^{-1} d1| small under the null at p = 400, f = x
  const int p = 400;
  const double c1 = 0.5, c2 = 0.2;
  const double d1 = sf::centering_d1(sf::SpectralFn::x(), c1, c2, sf::SpectrumH::delta1(), p);
  double acc = 0.0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    auto s = sf::generate_two_sample(p, (int)(p / c1), (int)(p / c2), sf::SigmaSpec::identity(),
                                     sf::SigmaSpec::identity(), sf::EntryDist::gaussian, 50 + rep);
    auto fe = sf::fisher_eigs_from_samples(s.x, s.y);
    acc += fe.values.sum() / p;
  }
  EXPECT_NEAR(acc / reps, d1 / p, 0.01);
}
