#include "spikefisher/spectrum.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

namespace sf = spikefisher;

TEST(spectrum_h, delta1_is_unit_atom) {
  auto h = sf::SpectrumH::delta1();
  ASSERT_EQ(h.size(), 1u);
  EXPECT_DOUBLE_EQ(h.t[0], 1.0);
  EXPECT_DOUBLE_EQ(h.w[0], 1.0);
  EXPECT_DOUBLE_EQ(h.t_min(), 1.0);
  EXPECT_DOUBLE_EQ(h.t_max(), 1.0);
}

TEST(spectrum_h, moments) {
  auto h = sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(h.moment(0), 1.0);
  EXPECT_DOUBLE_EQ(h.moment(1), 1.5);
  EXPECT_DOUBLE_EQ(h.moment(2), 2.5);
}

TEST(spectrum_h, rejects_bad_atoms) {
  EXPECT_THROW(sf::SpectrumH::from_atoms({}, {}), std::invalid_argument);
  EXPECT_THROW(sf::SpectrumH::from_atoms({2.0, 1.0}, {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(sf::SpectrumH::from_atoms({-1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(sf::SpectrumH::from_atoms({1.0, 2.0}, {0.5, 0.4}), std::invalid_argument);
  EXPECT_THROW(sf::SpectrumH::from_atoms({1.0}, {1.0, 0.0}), std::invalid_argument);
}

TEST(spike_config, separation_rule) {
  auto h = sf::SpectrumH::delta1();
  auto ok = sf::SpikeConfig::simple({10.0, 8.0, 6.0});
  EXPECT_NO_THROW(ok.validate(h));
  auto close = sf::SpikeConfig::simple({1.15});
  EXPECT_THROW(close.validate(h), std::invalid_argument);
  EXPECT_NO_THROW(close.validate(h, 0.1));
  auto unsorted = sf::SpikeConfig::simple({6.0, 8.0});
  EXPECT_THROW(unsorted.validate(h), std::invalid_argument);
}

TEST(spike_config, totals) {
  sf::SpikeConfig s;
  s.alpha = {10.0, 8.0, 6.0};
  s.multiplicity = {1, 2, 1};
  EXPECT_EQ(s.total(), 4);
  EXPECT_EQ(sf::SpikeConfig::none().total(), 0);
}

TEST(profiles, validation) {
  sf::RatioProfile r{0.5, 0.2};
  EXPECT_NO_THROW(r.validate());
  EXPECT_THROW((sf::RatioProfile{0.0, 0.2}.validate()), std::invalid_argument);
  EXPECT_THROW((sf::RatioProfile{0.5, 1.0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW(sf::MomentProfile::gaussian_real().validate());
  EXPECT_THROW((sf::MomentProfile{2, 0.0, 0.0}.validate()), std::invalid_argument);
  EXPECT_THROW((sf::MomentProfile{1, -3.0, 0.0}.validate()), std::invalid_argument);
}
