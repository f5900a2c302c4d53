#include <gtest/gtest.h>

#include <sstream>

#include "vgka/vgka.hpp"

using namespace vgka;
using sim::ScenarioConfig;

namespace {

ScenarioConfig small(std::uint32_t n, std::uint64_t seed) {
  ScenarioConfig c;
  c.profile = "test64";
  c.sim_time_s = 8;
  c.n_vehicles = n;
  c.rng_seed = seed;
  return c;
}

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

}  // namespace

TEST(Sim, SameSeedSameReport) {
  const auto a = sim::run_scenario(small(15, 3));
  const auto b = sim::run_scenario(small(15, 3));
  EXPECT_EQ(a, b);
  EXPECT_EQ(sim::to_json(a).dump(), sim::to_json(b).dump());
  EXPECT_NE(sim::run_scenario(small(15, 4)), a);
}

TEST(Sim, SameSeedSameTrace) {
  std::ostringstream t1, t2;
  sim::Simulator(small(6, 2), &t1).run();
  sim::Simulator(small(6, 2), &t2).run();
  EXPECT_FALSE(t1.str().empty());
  EXPECT_EQ(t1.str(), t2.str());
}

TEST(Sim, NoVehiclesMeansNoDelay) {
  const auto r = sim::run_scenario(small(0, 1));
  EXPECT_FALSE(r.average_delay_ms.has_value());
  EXPECT_EQ(r.data_messages, 0u);
  EXPECT_EQ(r.total_overhead_bytes, 0u);
  EXPECT_TRUE(sim::to_json(r)["average_delay_ms"].is_null());
}

TEST(Sim, OverheadNeverDecreasesWhenDoubling) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::uint64_t prev = 0;
    for (std::uint32_t n : {5u, 10u, 20u, 40u}) {
      const auto r = sim::run_scenario(small(n, seed));
      EXPECT_GE(r.total_overhead_bytes, prev) << "seed " << seed << " n " << n;
      prev = r.total_overhead_bytes;
    }
  }
}

TEST(Sim, OverheadIsFiftyEightPerUplinkMessage) {
  ScenarioConfig c;
  c.n_vehicles = 30;
  const auto r = sim::run_scenario(c);
  EXPECT_GT(r.obu_to_rsu_messages, 0u);
  EXPECT_EQ(r.overhead_mismatches, 0u);
  EXPECT_EQ(r.total_overhead_bytes, 58u * r.obu_to_rsu_messages);
}

TEST(Sim, EveryLegalVehicleIsAdmitted) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = small(20, seed);
    c.illegal_fraction = 0;
    const auto r = sim::run_scenario(c);
    EXPECT_GT(r.range_entries, 0u);
    EXPECT_EQ(r.admission_misses, 0u) << "seed " << seed;
    EXPECT_EQ(r.failed_auths, 0u);
    EXPECT_EQ(r.gk_desyncs, 0u);
  }
}

TEST(Sim, FastPathEngages) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = small(20, seed);
    c.sim_time_s = 20;
    const auto r = sim::run_scenario(c);
    EXPECT_GT(r.fastpath_count, 0u) << "seed " << seed;
    EXPECT_EQ(r.fastpath_violations, 0u);
    EXPECT_EQ(r.auth_count + r.fastpath_count, r.admissions);
  }
  auto c = small(20, 1);
  c.sim_time_s = 20;
  c.gk_transfer = false;
  EXPECT_EQ(sim::run_scenario(c).fastpath_count, 0u);
}

TEST(Sim, IllegalVehiclesAreRejected) {
  auto c = small(20, 6);
  c.illegal_fraction = 1;
  const auto r = sim::run_scenario(c);
  EXPECT_EQ(r.admissions, 0u);
  EXPECT_GT(r.failed_auths, 0u);
  EXPECT_EQ(r.data_messages, 0u);
}

TEST(Sim, DeliveriesAreConserved) {
  const auto r = sim::run_scenario(small(25, 7));
  EXPECT_EQ(r.deliveries_scheduled, r.deliveries_processed + r.deliveries_pending);
  EXPECT_LE(r.data_deliveries + r.stale_drops, r.deliveries_processed);
  EXPECT_GT(r.data_deliveries, 0u);
}

TEST(Sim, SamplesFeedTheDelayMetric) {
  sim::Simulator s(small(10, 8));
  const auto r = s.run();
  ASSERT_TRUE(r.average_delay_ms.has_value());
  EXPECT_DOUBLE_EQ(*r.average_delay_ms, cost::average_delay(s.samples()));
  for (const auto& d : s.samples()) {
    EXPECT_GT(d.t_create, 0);
    EXPECT_GT(d.t_transmit, 0);
    EXPECT_GT(d.t_verify, 0);
  }
}

TEST(Sim, SweepWritesOneRowPerDensity) {
  const auto rows = sim::sweep_density(small(0, 1), {10});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].n, 10u);
  std::ostringstream os;
  sim::write_sweep_csv(os, rows);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "n,delay_ms,overhead_bytes");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Sim, ConfigJsonIsStrict) {
  const auto c = sim::config_from_json(nlohmann::json::parse(R"({"n_vehicles": 12, "timings": {"t_par": 5}})"));
  EXPECT_EQ(c.n_vehicles, 12u);
  EXPECT_EQ(c.timings.t_par, 5.0);
  EXPECT_EQ(c.broadcast_interval_ms, 300.0);
  EXPECT_EQ(sim::config_from_json(sim::to_json(c)).timings.t_par, 5.0);
  for (const char* bad : {R"({"nVehicles": 3})", R"({"bandwidth_mbps": 0})", R"({"illegal_fraction": 1.5})",
                          R"({"n_vehicles": "many"})", R"({"profile": "huge"})", R"([1, 2])"})
    EXPECT_EQ(error_code([&] { sim::config_from_json(nlohmann::json::parse(bad)); }), Errc::Config) << bad;
  EXPECT_NO_THROW(sim::config_from_json(nlohmann::json::parse(R"({"n_list": [1]})"), {"n_list"}));
}

TEST(Sim, ScenarioDefaults) {
  const ScenarioConfig c;
  EXPECT_EQ(c.road_length_m, 1000.0);
  EXPECT_EQ(c.sim_time_s, 20.0);
  EXPECT_EQ(c.message_size_bytes, 200u);
  EXPECT_EQ(c.broadcast_interval_ms, 300.0);
  EXPECT_EQ(c.interval_variance_s, 0.05);
  EXPECT_EQ(c.rsu_range_m, 600.0);
  EXPECT_EQ(c.vehicle_range_m, 300.0);
  EXPECT_EQ(c.bandwidth_mbps, 6.0);
  EXPECT_EQ(c.illegal_fraction, 0.05);
}
