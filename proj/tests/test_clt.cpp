#include "spikefisher/clt.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "spikefisher/rmt.hpp"

namespace sf = spikefisher;

namespace {

const sf::MomentProfile kGauss = sf::MomentProfile::gaussian_real();
const sf::MomentProfile kGamma{1, 3.0, 3.0};

double rel_gap(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace

TEST(closed_forms, x_delta1_pinned) {
  auto mv = sf::meanvar_x_delta1(0.5, 0.2, kGauss);
  EXPECT_NEAR(mv.mu, 0.3125, 1e-14);
  EXPECT_NEAR(mv.nu, 2.9296875, 1e-12);
  EXPECT_EQ(mv.method, sf::CltMethod::closed_form);
  auto mg = sf::meanvar_x_delta1(0.5, 0.2, kGamma);
  EXPECT_NEAR(mg.mu, 1.0625, 1e-12);
  EXPECT_NEAR(sf::meanvar_x_delta1(0.5, 0.0, kGauss).mu, 0.0, 1e-15);
}

TEST(closed_forms, log_delta1_pinned) {
  auto mv = sf::meanvar_log_delta1(0.5, 0.2, kGauss);
  EXPECT_NEAR(mv.mu, 0.5 * std::log(0.625), 1e-14);
  EXPECT_NEAR(mv.nu, -2.0 * std::log(0.4), 1e-14);
  auto mg = sf::meanvar_log_delta1(0.5, 0.2, kGamma);
  EXPECT_NEAR(mg.mu - mv.mu, -0.45, 1e-12);
  EXPECT_NEAR(mg.nu - mv.nu, 3.0 * 0.7, 1e-12);
  EXPECT_THROW(sf::meanvar_log_delta1(1.0, 0.2, kGauss), std::domain_error);
  EXPECT_THROW(sf::meanvar_log_delta1(2.0, 0.2, kGauss), std::domain_error);
}

TEST(closed_forms, regression_pinned) {
  auto mv = sf::meanvar_regression(0.5, 0.2);
  EXPECT_NEAR(mv.mu, 0.03449644, 1e-7);
  EXPECT_NEAR(mv.nu, 0.1379858, 1e-6);
  // c^2 - d^2 collapses to the geometric mean of the two edge factors
  const double h = std::sqrt(0.6);
  const double a = sf::wachter_edges(0.5, 0.2).first, b = sf::wachter_edges(0.5, 0.2).second;
  const double sb = std::sqrt(1.0 + 0.4 * b), sa = std::sqrt(1.0 + 0.4 * a);
  const double cc = 0.5 * (sb + sa), dd = 0.5 * (sb - sa);
  EXPECT_NEAR(cc * cc - dd * dd, sb * sa, 1e-12);
  EXPECT_NEAR(mv.nu, 2.0 * std::log(cc * cc / (sb * sa)), 1e-12);
  const double denom = (cc * h - 0.2 * dd) * (cc * h - 0.2 * dd);
  EXPECT_NEAR(mv.mu, 0.5 * std::log(sb * sa * h * h / denom), 1e-12);
  EXPECT_LT(sf::meanvar_regression(0.5, 1e-9).nu, 1e-6);
}

TEST(lowrank, matches_closed_forms) {
  const double ratios[][2] = {{0.5, 0.2}, {0.2, 0.5}, {0.4, 0.5}};
  for (const auto& r : ratios) {
    for (const auto& mom : {kGauss, kGamma}) {
      auto cx = sf::meanvar_x_delta1(r[0], r[1], mom);
      auto lx = sf::meanvar_contour_lowrank(sf::SpectralFn::x(), r[0], r[1], mom);
      EXPECT_LT(rel_gap(lx.mu, cx.mu), 1e-8);
      EXPECT_LT(rel_gap(lx.nu, cx.nu), 1e-8);
      EXPECT_EQ(lx.method, sf::CltMethod::contour_lowrank);
      auto cl = sf::meanvar_log_delta1(r[0], r[1], mom);
      auto ll = sf::meanvar_contour_lowrank(sf::SpectralFn::log(), r[0], r[1], mom);
      EXPECT_LT(rel_gap(ll.mu, cl.mu), 1e-8);
      EXPECT_LT(rel_gap(ll.nu, cl.nu), 1e-8);
    }
  }
}

TEST(lowrank, complex_gaussian_mean_vanishes_for_x) {
  auto mv = sf::meanvar_contour_lowrank(sf::SpectralFn::x(), 0.5, 0.2, {0, 0.0, 0.0});
  EXPECT_NEAR(mv.mu, 0.0, 1e-10);
  EXPECT_GT(mv.nu, 0.0);
}

TEST(lowrank, wilks_function_reproduces_regression_constants) {
  const double ratios[][2] = {{0.5, 0.2}, {0.2, 0.5}, {0.4, 0.5}};
  for (const auto& r : ratios) {
    auto reg = sf::meanvar_regression(r[0], r[1]);
    auto low =
        sf::meanvar_contour_lowrank(sf::SpectralFn::log1p_scaled(r[1] / r[0]), r[0], r[1], kGauss);
    EXPECT_LT(rel_gap(low.mu, reg.mu), 1e-10);
    EXPECT_LT(rel_gap(low.nu, reg.nu), 1e-10);
  }
}

TEST(lowrank, grid_refinement_stays_put) {
  auto a = sf::meanvar_contour_lowrank(sf::SpectralFn::log(), 0.5, 0.2, kGamma, 2048);
  auto b = sf::meanvar_contour_lowrank(sf::SpectralFn::log(), 0.5, 0.2, kGamma, 4096);
  EXPECT_LE(std::abs(a.mu - b.mu), a.quad_error + 1e-12);
  EXPECT_LE(std::abs(a.nu - b.nu), a.quad_error + 1e-12);
  EXPECT_THROW(sf::meanvar_contour_lowrank(sf::SpectralFn::x(), 2.0, 0.2, kGauss),
               std::domain_error);
}

TEST(general, matches_closed_forms_delta1) {
  const double ratios[][2] = {{0.5, 0.2}, {0.2, 0.5}, {0.4, 0.5}};
  auto h = sf::SpectrumH::delta1();
  for (const auto& r : ratios) {
    for (const auto& mom : {kGauss, kGamma}) {
      auto cx = sf::meanvar_x_delta1(r[0], r[1], mom);
      auto gx = sf::meanvar_contour_general(sf::SpectralFn::x(), r[0], r[1], h, mom);
      EXPECT_LT(rel_gap(gx.mu, cx.mu), 1e-3);
      EXPECT_LT(rel_gap(gx.nu, cx.nu), 1e-3);
      EXPECT_EQ(gx.method, sf::CltMethod::contour_general);
      auto cl = sf::meanvar_log_delta1(r[0], r[1], mom);
      auto gl = sf::meanvar_contour_general(sf::SpectralFn::log(), r[0], r[1], h, mom);
      EXPECT_LT(rel_gap(gl.mu, cl.mu), 1e-3);
      EXPECT_LT(rel_gap(gl.nu, cl.nu), 1e-3);
    }
  }
}

TEST(general, matches_lowrank_wilks) {
  auto h = sf::SpectrumH::delta1();
  auto low = sf::meanvar_contour_lowrank(sf::SpectralFn::log1p_scaled(0.4), 0.5, 0.2, kGamma);
  auto gen = sf::meanvar_contour_general(sf::SpectralFn::log1p_scaled(0.4), 0.5, 0.2, h, kGamma);
  EXPECT_LT(rel_gap(gen.mu, low.mu), 1e-3);
  EXPECT_LT(rel_gap(gen.nu, low.nu), 1e-3);
}

TEST(general, two_atom_population) {
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  auto mv = sf::meanvar_contour_general(sf::SpectralFn::log(), 0.2, 0.5, h, kGauss);
  EXPECT_TRUE(std::isfinite(mv.mu));
  EXPECT_GT(mv.nu, 0.0);
  auto mx = sf::meanvar_contour_general(sf::SpectralFn::x(), 0.2, 0.5, h, kGamma);
  EXPECT_TRUE(std::isfinite(mx.mu));
  EXPECT_GT(mx.nu, 0.0);
}

TEST(general, single_atom_rescaling) {
  // population delta_s rescales every eigenvalue by s, so log constants are
  // unchanged while x constants pick up s and s^2
  const double s = 2.0;
  auto hs = sf::SpectrumH::from_atoms({s}, {1.0});
  auto gl = sf::meanvar_contour_general(sf::SpectralFn::log(), 0.5, 0.2, hs, kGamma);
  auto cl = sf::meanvar_log_delta1(0.5, 0.2, kGamma);
  EXPECT_LT(rel_gap(gl.mu, cl.mu), 1e-6);
  EXPECT_LT(rel_gap(gl.nu, cl.nu), 1e-6);
  auto gx = sf::meanvar_contour_general(sf::SpectralFn::x(), 0.5, 0.2, hs, kGamma);
  auto cx = sf::meanvar_x_delta1(0.5, 0.2, kGamma);
  EXPECT_LT(rel_gap(gx.mu, s * cx.mu), 1e-6);
  EXPECT_LT(rel_gap(gx.nu, s * s * cx.nu), 1e-6);
}

TEST(general, continuity_in_ratios) {
  auto h = sf::SpectrumH::delta1();
  auto base = sf::meanvar_contour_general(sf::SpectralFn::log(), 0.5, 0.2, h, kGauss);
  auto bumped = sf::meanvar_contour_general(sf::SpectralFn::log(), 0.5 + 1e-6, 0.2 + 1e-6, h, kGauss);
  EXPECT_LT(std::abs(base.mu - bumped.mu), 1e-4);
  EXPECT_LT(std::abs(base.nu - bumped.nu), 1e-4);
}

TEST(general, node_doubling_within_reported_error) {
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  sf::ContourOptions fine;
  fine.top_nodes = 320;
  fine.side_panel_nodes = 48;
  fine.error_estimate = false;
  auto base = sf::meanvar_contour_general(sf::SpectralFn::log(), 0.2, 0.5, h, kGauss);
  auto doubled = sf::meanvar_contour_general(sf::SpectralFn::log(), 0.2, 0.5, h, kGauss, fine);
  EXPECT_LE(std::abs(base.mu - doubled.mu), base.quad_error + 1e-10);
  EXPECT_LE(std::abs(base.nu - doubled.nu), base.quad_error + 1e-10);
}

TEST(general, rejects_bad_inputs) {
  auto h = sf::SpectrumH::delta1();
  EXPECT_THROW(sf::meanvar_contour_general(sf::SpectralFn::x(), 2.0, 0.2, h, kGauss),
               std::domain_error);
  EXPECT_THROW(
      sf::meanvar_contour_general(sf::SpectralFn::custom([](double v) { return v; }), 0.5, 0.2, h,
                                  kGauss),
      std::invalid_argument);
  sf::ContourOptions bad;
  bad.lo_clearance = 1.5;
  EXPECT_THROW(sf::meanvar_contour_general(sf::SpectralFn::x(), 0.5, 0.2, h, kGauss, bad),
               std::invalid_argument);
  sf::ContourOptions sparse;
  sparse.bank_nodes = 8;
  EXPECT_THROW(sf::meanvar_contour_general(sf::SpectralFn::x(), 0.5, 0.2, h, kGauss, sparse),
               std::invalid_argument);
}

TEST(invariants, variance_positive_on_grid) {
  auto h = sf::SpectrumH::delta1();
  for (double c1 : {0.2, 0.5, 0.8}) {
    for (double c2 : {0.2, 0.5, 0.8}) {
      EXPECT_GT(sf::meanvar_x_delta1(c1, c2, kGauss).nu, 0.0);
      EXPECT_GT(sf::meanvar_x_delta1(c1, c2, kGamma).nu, 0.0);
      EXPECT_GT(sf::meanvar_contour_lowrank(sf::SpectralFn::x(), c1, c2, kGamma).nu, 0.0);
      if (c1 + c2 - c1 * c2 < 1.0) {
        EXPECT_GT(sf::meanvar_log_delta1(c1, c2, kGauss).nu, 0.0);
      }
      EXPECT_GT(sf::meanvar_regression(c1, c2).nu, 0.0);
    }
  }
}
