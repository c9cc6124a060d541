#include <gtest/gtest.h>

#include <cmath>

#include "anamac/bench.hpp"
#include "anamac/config.hpp"
#include "anamac/perf.hpp"
#include "test_util.hpp"

using namespace anamac;
using testutil::expect_code;

namespace {

const std::vector<Scenario> kScenarios{Scenario::v1_1gbe, Scenario::v2_1gbe, Scenario::sim_8g};

double rate_at(const ScenarioSpec& s, std::size_t size, std::size_t batch) {
  const std::size_t sizes[] = {size};
  const std::size_t batches[] = {batch};
  return size == 256 ? mac_rate_vs_batch(s, batches, 256).front().rate : mac_rate_vs_size(s, sizes, batch).front().rate;
}

/// Closed form of one full unsigned tile: pre + overhead + wire + post.
double full_tile_time(const LinkBudget& l, double config_bytes, double entry_bytes, double batch) {
  return l.host_pre + l.per_run_overhead + (config_bytes + entry_bytes * batch) * 8.0 /
                                               (l.bandwidth * l.protocol_efficiency) + l.host_post;
}

}  // namespace

TEST(LinkBudget, ShippedConfigs) {
  const auto l1 = LinkBudget::load(default_config_dir() / "link_1g.cfg");
  EXPECT_DOUBLE_EQ(l1.bandwidth, 1e9);
  const auto l8 = LinkBudget::load(default_config_dir() / "link_8g.cfg");
  EXPECT_DOUBLE_EQ(l8.bandwidth, 8e9);
  EXPECT_GT(l8.protocol_efficiency, 0.0);
  EXPECT_LE(l8.protocol_efficiency, 1.0);
}

TEST(LinkBudget, Validation) {
  LinkBudget l;
  l.bandwidth = 0;
  expect_code(ErrorCode::InvalidParams, [&] { l.validate(); });
  l = LinkBudget{};
  l.protocol_efficiency = 1.5;
  expect_code(ErrorCode::InvalidParams, [&] { l.validate(); });
  l.protocol_efficiency = 0;
  expect_code(ErrorCode::InvalidParams, [&] { l.validate(); });
  expect_code(ErrorCode::ParseError, [] { LinkBudget::from_config(KeyValueConfig::parse("bandwidth = fast")); });
}

TEST(CostModel, ByteVolumes) {
  CostModel v2;
  EXPECT_EQ(v2.bytes_config(256, 256), 65536u);
  EXPECT_EQ(v2.bytes_in(256, 10, 3), 256u * 30);
  EXPECT_EQ(v2.bytes_out(256, 10), 2560u);
  EXPECT_EQ(v2.config_repeats(10), 1u);
  CostModel v1{HwVersion::V1};
  EXPECT_EQ(v1.config_repeats(10), 10u);
  EXPECT_EQ(v1.config_repeats(0), 1u);
  EXPECT_DOUBLE_EQ(v2.event_time(256, 2, HwParams{3, 5}, 1e-9), 2 * 3 * 256 * 5 * 1e-9);
}

TEST(TimePerRun, BatchZeroIsOverheadPlusConfig) {
  for (auto id : kScenarios) {
    const auto s = scenario(id);
    const double t = time_per_run(TileShape{}, 0, s.params, s.link, s.cost);
    const double config = 65536.0 * 8 / (s.link.bandwidth * s.link.protocol_efficiency);
    EXPECT_NEAR(t, s.link.per_run_overhead + config, 1e-15) << to_string(id);
  }
}

TEST(TimePerRun, DoublingBandwidthHalvesWireBoundTime) {
  LinkBudget l;
  l.bandwidth = 1e8;
  l.clock_period = 1e-12;
  const double t1 = time_per_run(TileShape{}, 100, HwParams{}, l, CostModel{});
  l.bandwidth *= 2;
  const double t2 = time_per_run(TileShape{}, 100, HwParams{}, l, CostModel{});
  EXPECT_NEAR(t1 / t2, 2.0, 1e-12);
}

TEST(TimePerRun, EventBoundRegime) {
  LinkBudget l;
  l.bandwidth = 1e15;
  const double t = time_per_run(TileShape{100, 10, true}, 7, HwParams{2, 3}, l, CostModel{});
  EXPECT_NEAR(t, 7.0 * 2 * 200 * 3 * 8e-9, 1e-12);
}

TEST(PerfAnchors, SingleAcceleratorRate) {
  const auto s = scenario(Scenario::sim_8g);
  const double rate = rate_at(s, 256, 2000);
  // Frozen closed form of the shipped constants.
  const double oracle = 2000.0 * 65536 / full_tile_time(s.link, 65536, 512, 2000);
  EXPECT_NEAR(rate, oracle, oracle * 1e-9);
  EXPECT_NEAR(rate / 14.7e9, 1.0, 0.10);
}

TEST(PerfAnchors, HalfRateBatch) {
  const auto s = scenario(Scenario::v2_1gbe);
  const auto b50 = half_rate_batch(s);
  EXPECT_GE(b50, 150u);
  EXPECT_LE(b50, 250u);
  // Static volume c over per-entry volume v, with fixed times expressed in bytes.
  const auto& l = s.link;
  const double fixed_bytes = (l.per_run_overhead + l.host_pre + l.host_post) * l.bandwidth * l.protocol_efficiency / 8;
  EXPECT_EQ(b50, static_cast<std::size_t>(std::ceil((65536 + fixed_bytes) / 512)));
}

TEST(PerfAnchors, SimulatedLinkSpeedup) {
  const double ratio = asymptotic_rate(scenario(Scenario::sim_8g)) / asymptotic_rate(scenario(Scenario::v2_1gbe));
  EXPECT_GE(ratio, 4.0);
  EXPECT_LE(ratio, 6.0);
  EXPECT_NEAR(ratio, 5.0, 1e-6);
}

TEST(PerfModel, RateFollowsSaturationCurve) {
  // R(b) = R_max * b v / (c + b v): fit R_max and c/v on two points, predict a third.
  const auto s = scenario(Scenario::v2_1gbe);
  const std::size_t batches[] = {10, 1000, 57};
  const auto r = mac_rate_vs_batch(s, batches);
  const double inv1 = 1 / r[0].rate, inv2 = 1 / r[1].rate;
  const double k = (inv1 - inv2) / (1.0 / 10 - 1.0 / 1000);  // (c/v) / R_max
  const double inv_rmax = inv2 - k / 1000;
  EXPECT_NEAR(1 / r[2].rate, inv_rmax + k / 57, 1e-12 * (inv_rmax + k / 57) * 1e3);
  const double half = k / inv_rmax;
  EXPECT_NEAR(rate_at(s, 256, static_cast<std::size_t>(std::round(half))) * inv_rmax, 0.5, 0.01);
}

TEST(PerfModel, RateMonotoneInBatch) {
  for (auto id : kScenarios) {
    const auto s = scenario(id);
    const auto rows = mac_rate_vs_batch(s, default_batches());
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].rate, rows[i - 1].rate) << to_string(id);
  }
}

TEST(PerfModel, LinearInElementCountBelowOneArray) {
  for (auto id : kScenarios) {
    const auto s = scenario(id);
    const std::vector<std::size_t> sizes{1, 2, 4, 8, 16, 32, 64, 128, 256};
    const auto rows = mac_rate_vs_size(s, sizes);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NEAR(rows[i].rate / rows[i - 1].rate, 4.0, 1e-9);
  }
}

TEST(PerfModel, ConfigRewriteVolumeFactor) {
  const auto v1 = scenario(Scenario::v1_1gbe);
  const auto v2 = scenario(Scenario::v2_1gbe);
  const TileShape tile;
  auto per_entry = [&](const ScenarioSpec& s) {
    const auto a = tile_stage_costs(tile, 1000, s.params, s.link, s.cost);
    const auto b = tile_stage_costs(tile, 2000, s.params, s.link, s.cost);
    return double(b.bytes_config + b.bytes_in + b.bytes_out - a.bytes_config - a.bytes_in - a.bytes_out) / 1000;
  };
  EXPECT_GE(per_entry(v1) / per_entry(v2), 64.0);
  EXPECT_GE(per_entry(v1) / per_entry(v2), 100.0);
}

TEST(Breakdown, ExecFractionGrowsPastOneChip) {
  const auto s = scenario(Scenario::sim_8g);
  const std::vector<std::size_t> sizes{256, 512, 1024, 2048, 4096, 8192, 16384};
  const auto rows = utilization_breakdown(s, sizes);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].exec_fraction(), rows[i - 1].exec_fraction());
  for (const auto& r : rows) EXPECT_NEAR(r.t_pre + r.t_exec + r.t_post, simulate_matmul(s, r.size, r.size, 2000).makespan(),
                                         1e-9 * r.t_exec + 1e-12);
}

TEST(Breakdown, SmallSizesShareThePaddedTileCost) {
  // Transfers always cover the full array, so a 1x1 matmul costs a full tile.
  const auto s = scenario(Scenario::sim_8g);
  const std::vector<std::size_t> sizes{1, 256};
  const auto rows = utilization_breakdown(s, sizes);
  EXPECT_NEAR(rows[0].exec_fraction(), rows[1].exec_fraction(), 1e-12);
}

TEST(Breakdown, PipelineBeatsSerialPastOneChip) {
  const auto s = scenario(Scenario::sim_8g);
  for (std::size_t size : {512, 1024, 4096}) {
    const auto piped = simulate_matmul(s, size, size, 2000);
    ScheduleOptions serial;
    serial.serial = true;
    const auto ser = simulate_matmul(s, size, size, 2000, serial);
    EXPECT_LT(piped.makespan(), ser.makespan());
    EXPECT_NEAR(ser.makespan(), piped.stage_sum(), 1e-9 * ser.makespan());
  }
}

TEST(BenchCsv, Headers) {
  const auto rate = rate_csv({RatePoint{256, 1.5e10}}, "sim_8g");
  EXPECT_EQ(rate.substr(0, rate.find('\n')), "x,rate_mac_per_s,scenario");
  EXPECT_NE(rate.find(",sim_8g"), std::string::npos);
  const auto br = breakdown_csv({BreakdownRow{256, 1, 2, 3}});
  EXPECT_EQ(br.substr(0, br.find('\n')), "size,t_pre,t_exec,t_post");
}

TEST(Scenarios, NamesRoundTrip) {
  for (auto id : kScenarios) EXPECT_EQ(scenario_from_string(to_string(id)), id);
  expect_code(ErrorCode::InvalidParams, [] { scenario_from_string("v3"); });
  EXPECT_EQ(default_sizes().back(), 16384u);
}
