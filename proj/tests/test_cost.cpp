#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "vgka/vgka.hpp"

using namespace vgka;
using namespace vgka::cost;

TEST(Cost, OursVectors) {
  EXPECT_DOUBLE_EQ(verification_delay(Scheme::Ours, Side::RSU, 1), 11.4);
  EXPECT_DOUBLE_EQ(verification_delay(Scheme::Ours, Side::OBU, 1), 12.6);
  EXPECT_DOUBLE_EQ(verification_delay(Scheme::Ours, Side::RSU, 100), 1140.0);
}

TEST(Cost, HandEvaluatedRows) {
  const double par = 4.5, mul = 0.6, mp = 0.6;
  for (double n : {1.0, 10.0, 100.0}) {
    const auto k = static_cast<std::uint64_t>(n);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::IBV, Side::OBU, k), 5 * n * mul + 2 * n * mp);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::IBV, Side::RSU, k), (n + 1) * mul + 3 * par + n * mp);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::ECPP, Side::OBU, k), 4 * n * mul + n * par);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::ECPP, Side::RSU, k), 2 * n * mul + 3 * n * par);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::RMAKA, Side::OBU, k), 4 * n * mul);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::RMAKA, Side::RSU, k), 4 * n * mul);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::ACP, Side::OBU, k), n * mul);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::ACP, Side::RSU, k), 3 * par + (2 * n + 1) * mul);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::Ours, Side::OBU, k), n * mp + 5 * n * mul + 2 * n * par);
    EXPECT_DOUBLE_EQ(verification_delay(Scheme::Ours, Side::RSU, k), 4 * n * mul + 2 * n * par);
  }
}

TEST(Cost, EmptyBatchCostsNothing) {
  for (auto s : kDelaySchemes)
    for (auto side : {Side::OBU, Side::RSU}) EXPECT_EQ(verification_delay(s, side, 0), 0.0);
  for (auto s : kOverheadSchemes) EXPECT_EQ(transmission_overhead(s, 0), 0u);
}

TEST(Cost, PerMessageTermIsAdditive) {
  PrimitiveTimings t;
  for (auto s : kDelaySchemes)
    for (auto side : {Side::OBU, Side::RSU}) {
      const double c = delay_form(s, side).constant(t);
      for (std::uint64_t a = 1; a < 20; a += 3)
        for (std::uint64_t b = 1; b < 20; b += 5)
          EXPECT_NEAR(verification_delay(s, side, a + b) - c,
                      (verification_delay(s, side, a) - c) + (verification_delay(s, side, b) - c), 1e-9);
    }
}

TEST(Cost, UnknownSchemes) {
  EXPECT_THROW(verification_delay(Scheme::ABAKA, Side::RSU, 1), Error);
  EXPECT_THROW(transmission_overhead(Scheme::ECPP, 1), Error);
  EXPECT_THROW(parse_scheme("nope"), Error);
  EXPECT_EQ(parse_scheme("ACP"), Scheme::ACP);
}

TEST(Cost, OverheadVectors) {
  EXPECT_EQ(transmission_overhead(Scheme::Ours, 10), 580u);
  EXPECT_EQ(transmission_overhead(Scheme::ARGBV, 1), 63u);
  EXPECT_EQ(transmission_overhead(Scheme::ABAKA, 2), 168u);
  EXPECT_EQ(transmission_overhead(Scheme::RMAKA, 3), 501u);
}

TEST(Cost, EffectiveRsuDelayVectors) {
  for (std::uint64_t n : {1u, 10u, 100u})
    EXPECT_DOUBLE_EQ(effective_rsu_delay(n, 0, 1), verification_delay(Scheme::Ours, Side::RSU, n));
  EXPECT_NEAR(effective_rsu_delay(100, 0.05, 0), 5 * 11.4 + 95 * fastpath_cost(), 1e-9);
  PrimitiveTimings free;
  free.t_hmac = 0;
  free.t_sym = 0;
  EXPECT_EQ(effective_rsu_delay(100, 0, 0, free), 0.0);
  EXPECT_THROW(effective_rsu_delay(1, 0.6, 0.6), Error);
  EXPECT_THROW(effective_rsu_delay(1, -0.1, 0), Error);
}

TEST(Cost, FastPathBeatsBaselinesAndGrowsWithReauth) {
  for (std::uint64_t n = 10; n <= 200; n += 10) {
    double prev = 0;
    for (double reauth = 0; reauth <= 0.05 + 1e-12; reauth += 0.01) {
      const double ours = effective_rsu_delay(n, 0.05, reauth);
      EXPECT_LT(ours / verification_delay(Scheme::ACP, Side::RSU, n), 1.0);
      EXPECT_LT(ours / verification_delay(Scheme::IBV, Side::RSU, n), 1.0);
      EXPECT_GT(ours, prev);
      prev = ours;
    }
  }
}

TEST(Cost, AverageDelayVectors) {
  const std::vector<DelaySample> one{{0, 0, 0, 1, 2, 3}};
  EXPECT_DOUBLE_EQ(average_delay(one), 6.0);
  const std::vector<DelaySample> two{{1, 0, 0, 6, 0, 0}, {1, 1, 0, 10, 0, 0}, {2, 0, 0, 4, 0, 0}};
  EXPECT_DOUBLE_EQ(average_delay(two), 6.0);
  const std::vector<DelaySample> zeros{{0, 0, 0, 0, 0, 0}, {1, 0, 0, 0, 0, 0}};
  EXPECT_EQ(average_delay(zeros), 0.0);
}

TEST(Cost, AverageDelayErrors) {
  EXPECT_THROW(average_delay({}), Error);
  const std::vector<DelaySample> s{{0, 0, 0, 1, 1, 1}};
  const std::vector<std::uint64_t> creators{0, 7};
  EXPECT_THROW(average_delay(s, creators), Error);
  const std::vector<DelaySample> neg{{0, 0, 0, -1, 0, 0}};
  EXPECT_THROW(average_delay(neg), Error);
}

TEST(Cost, AverageDelayIgnoresOrder) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ms(0, 5);
  std::vector<DelaySample> s;
  for (std::uint64_t c = 0; c < 8; ++c)
    for (std::uint64_t m = 0; m <= c; ++m)
      for (std::uint64_t r = 0; r < 3; ++r) s.push_back({c, m, r, ms(gen), ms(gen), ms(gen)});
  const double base = average_delay(s);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(s.begin(), s.end(), gen);
    EXPECT_NEAR(average_delay(s), base, 1e-12);
  }
}
