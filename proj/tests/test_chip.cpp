#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "anamac/chip.hpp"
#include "anamac/config.hpp"
#include "test_util.hpp"

using namespace anamac;
using testutil::expect_code;

namespace {

std::vector<std::uint8_t> zeros_in() { return std::vector<std::uint8_t>(kArrayRows, 0); }

std::array<std::int8_t, kArrayCols> mac(const SynapseArray& a, const std::vector<std::uint8_t>& x,
                                        const ChipConfig& cfg, std::uint64_t seed = 1, HwParams p = {}) {
  NormalStream rng(seed);
  return analog_mac(a, x, p, cfg, rng);
}

}  // namespace

TEST(ChipConfig, ShippedDefaults) {
  const auto c = ChipConfig::defaults();
  EXPECT_FLOAT_EQ(c.sigma_fixed, 0.02f);
  EXPECT_FLOAT_EQ(c.sigma_offset, 1.0f);
  EXPECT_FLOAT_EQ(c.sigma_temporal, 2.0f);
  EXPECT_FLOAT_EQ(c.gain, 1.0f / 64);
  EXPECT_EQ(c.hw_version, HwVersion::V2);
}

TEST(ChipConfig, ParseAndReject) {
  auto c = ChipConfig::from_config(KeyValueConfig::parse("chip_seed = 9\nsigma_temporal=0.5 # comment\nhw_version=v1\n"));
  EXPECT_EQ(c.chip_seed, 9u);
  EXPECT_FLOAT_EQ(c.sigma_temporal, 0.5f);
  EXPECT_EQ(c.hw_version, HwVersion::V1);
  expect_code(ErrorCode::InvalidParams, [] { ChipConfig::from_config(KeyValueConfig::parse("sigma_fixed=-1")); });
  expect_code(ErrorCode::ParseError, [] { ChipConfig::from_config(KeyValueConfig::parse("hw_version=v3")); });
  expect_code(ErrorCode::ParseError, [] { KeyValueConfig::parse("no equals sign"); });
}

TEST(HwParams, Validation) {
  expect_code(ErrorCode::InvalidParams, [] { HwParams{0, 1}.validate(); });
  expect_code(ErrorCode::InvalidParams, [] { HwParams{1, 0}.validate(); });
  HwParams{6, 25}.validate();
}

TEST(SynapseArray, ZeroWeightsGiveOffsetOnly) {
  ChipConfig cfg = ChipConfig::noiseless();
  cfg.sigma_offset = 3.0f;
  SynapseArray a(cfg, 0);
  std::vector<std::uint8_t> x(kArrayRows, 31);
  const auto y = mac(a, x, cfg);
  for (std::size_t j = 0; j < kArrayCols; ++j) {
    EXPECT_EQ(y[j], std::clamp(std::round(a.neuron_offset()[j]), -128.0f, 127.0f));
  }
}

TEST(SynapseArray, WeightRangeEdge) {
  SynapseArray a(ChipConfig::noiseless(), 0);
  std::vector<std::int8_t> w(kArrayRows * kArrayCols, 0);
  w[1234] = 64;
  expect_code(ErrorCode::WeightOutOfRange, [&] { a.configure(w); });
  w[1234] = -64;
  expect_code(ErrorCode::WeightOutOfRange, [&] { a.configure(w); });
}

TEST(SynapseArray, CheckerboardReadback) {
  SynapseArray a(ChipConfig::noiseless(), 1);
  std::vector<std::int8_t> w(kArrayRows * kArrayCols);
  for (std::size_t i = 0; i < kArrayRows; ++i)
    for (std::size_t j = 0; j < kArrayCols; ++j) w[i * kArrayCols + j] = (i + j) % 2 == 0 ? 63 : -63;
  a.configure(w);
  EXPECT_TRUE(std::equal(w.begin(), w.end(), a.weights().begin()));
}

TEST(AnalogMac, ZeroInputNoiseless) {
  SynapseArray a(ChipConfig::noiseless(), 0);
  std::vector<std::int8_t> w(kArrayRows * kArrayCols, 17);
  a.configure(w);
  for (auto v : mac(a, zeros_in(), ChipConfig::noiseless())) EXPECT_EQ(v, 0);
}

TEST(AnalogMac, UnitCase) {
  SynapseArray a(ChipConfig::noiseless(), 0);
  std::vector<std::int8_t> w(kArrayRows * kArrayCols, 0);
  w[0] = 1;
  a.configure(w);
  auto x = zeros_in();
  x[0] = 1;
  const auto y = mac(a, x, ChipConfig::noiseless());
  EXPECT_EQ(y[0], 1);
  EXPECT_EQ(y[1], 0);
}

TEST(AnalogMac, SaturatesAtFullScale) {
  SynapseArray a(ChipConfig::noiseless(), 0);
  std::vector<std::int8_t> w(kArrayRows * kArrayCols, 0);
  for (std::size_t i = 0; i < kArrayRows; ++i) w[i * kArrayCols + 5] = 63;
  a.configure(w);
  std::vector<std::uint8_t> x(kArrayRows, 31);
  // 256 * 31 * 63 = 499968 -> clamp
  EXPECT_EQ(mac(a, x, ChipConfig::noiseless())[5], 127);
}

TEST(AnalogMac, InputRange) {
  SynapseArray a(ChipConfig::noiseless(), 0);
  auto x = zeros_in();
  x[3] = 32;
  expect_code(ErrorCode::InputOutOfRange, [&] { mac(a, x, ChipConfig::noiseless()); });
}

TEST(AnalogMac, DefaultGainScalesProducts) {
  const auto cfg = ChipConfig::noiseless(1.0f / 64);
  SynapseArray a(cfg, 0);
  std::vector<std::int8_t> w(kArrayRows * kArrayCols, 0);
  w[0] = 63;
  w[kArrayCols] = 63;
  a.configure(w);
  auto x = zeros_in();
  x[0] = 31;
  x[1] = 10;
  // (31 + 10) * 63 / 64 = 40.36
  EXPECT_EQ(mac(a, x, cfg)[0], 40);
}

TEST(SignedRowPairs, PositiveAndNegative) {
  std::vector<std::int8_t> w{5, -5};
  const auto p = signed_row_pairs(w, 1, 2);
  EXPECT_EQ(p.weights[0], 5);
  EXPECT_EQ(p.weights[kArrayCols], 0);
  EXPECT_EQ(p.weights[1], 0);
  EXPECT_EQ(p.weights[kArrayCols + 1], 5);
  EXPECT_EQ(p.modes[0], RowMode::excitatory);
  EXPECT_EQ(p.modes[1], RowMode::inhibitory);

  SynapseArray a(ChipConfig::noiseless(), 0);
  a.configure(p);
  std::vector<std::uint8_t> logical{7}, x(kArrayRows);
  place_inputs(logical, true, x);
  const auto y = mac(a, x, ChipConfig::noiseless());
  EXPECT_EQ(y[0], 35);
  EXPECT_EQ(y[1], -35);
}

TEST(SignedRowPairs, RejectsOutOfRange) {
  std::vector<std::int8_t> w{64};
  expect_code(ErrorCode::WeightOutOfRange, [&] { signed_row_pairs(w, 1, 1); });
  std::vector<std::int8_t> u{-1};
  expect_code(ErrorCode::WeightOutOfRange, [&] { unsigned_block(u, 1, 1); });
}

TEST(SignedRowPairs, RandomMatchesIntegerOracle) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 20; ++iter) {
    const auto w = testutil::random_weights(rng, 128, 256, true);
    const auto x = testutil::random_inputs(rng, 1, 128, 3);  // small inputs keep sums unsaturated
    const auto oracle = testutil::int_matmul(x, w);
    SynapseArray a(ChipConfig::noiseless(), 0);
    a.configure(signed_row_pairs(w.values<std::int8_t>(), 128, 256));
    std::vector<std::uint8_t> phys(kArrayRows);
    place_inputs(x.values<std::uint8_t>(), true, phys);
    const auto y = mac(a, phys, ChipConfig::noiseless());
    for (std::size_t j = 0; j < 256; ++j) EXPECT_EQ(y[j], testutil::clamp8(oracle[j]));
  }
}

TEST(AnalogMacProperty, NoiselessEqualsClampedProduct) {
  std::mt19937_64 rng(6);
  const auto cfg = ChipConfig::noiseless(1.0f);
  SynapseArray a(cfg, 0);
  for (int iter = 0; iter < 50; ++iter) {
    const auto w = testutil::random_weights(rng, 256, 256, true);
    const auto x = testutil::random_inputs(rng, 1, 256, iter % 2 == 0 ? 1 : 31);
    std::vector<RowMode> modes(kArrayRows, RowMode::excitatory);
    a.configure(w.values<std::int8_t>(), modes);
    const auto y = mac(a, std::vector<std::uint8_t>(x.values<std::uint8_t>().begin(), x.values<std::uint8_t>().end()), cfg);
    const auto oracle = testutil::int_matmul(x, w);
    for (std::size_t j = 0; j < 256; ++j) ASSERT_EQ(y[j], testutil::clamp8(oracle[j]));
  }
}

TEST(AnalogMacProperty, DeterministicForSeeds) {
  const auto cfg = ChipConfig::defaults();
  SynapseArray a(cfg, 1), b(cfg, 1);
  EXPECT_TRUE(std::equal(a.fixed_gain().begin(), a.fixed_gain().end(), b.fixed_gain().begin()));
  EXPECT_TRUE(std::equal(a.neuron_offset().begin(), a.neuron_offset().end(), b.neuron_offset().begin()));
  SynapseArray other(cfg, 0);
  EXPECT_FALSE(std::equal(a.fixed_gain().begin(), a.fixed_gain().end(), other.fixed_gain().begin()));

  std::mt19937_64 rng(8);
  const auto w = testutil::random_weights(rng, 256, 256, false);
  a.configure(w.values<std::int8_t>());
  b.configure(w.values<std::int8_t>());
  std::vector<std::uint8_t> x(kArrayRows);
  for (auto& v : x) v = static_cast<std::uint8_t>(rng() % 32);
  EXPECT_EQ(mac(a, x, cfg, 42), mac(b, x, cfg, 42));
}

TEST(AnalogMacProperty, FixedPatternStatistics) {
  ChipConfig cfg;
  cfg.sigma_fixed = 0.1f;
  cfg.sigma_offset = 2.0f;
  SynapseArray a(cfg, 0);
  double s = 0, s2 = 0;
  for (float g : a.fixed_gain()) {
    s += g;
    s2 += g * g;
  }
  const double n = static_cast<double>(a.fixed_gain().size());
  EXPECT_NEAR(s / n, 1.0, 0.002);
  EXPECT_NEAR(std::sqrt(s2 / n - (s / n) * (s / n)), 0.1, 0.002);
}

TEST(AnalogMacProperty, MonotoneSaturation) {
  std::mt19937_64 rng(9);
  const auto cfg = ChipConfig::noiseless(1.0f / 64);
  SynapseArray a(cfg, 0);
  const auto w = testutil::random_weights(rng, 256, 256, false);
  a.configure(w.values<std::int8_t>());
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<std::uint8_t> x(kArrayRows);
    for (auto& v : x) v = static_cast<std::uint8_t>(rng() % 32);
    auto x2 = x;
    const std::size_t i = rng() % kArrayRows;
    x2[i] = static_cast<std::uint8_t>(std::min<int>(31, x2[i] + 1 + int(rng() % 5)));
    const auto y1 = mac(a, x, cfg), y2 = mac(a, x2, cfg);
    for (std::size_t j = 0; j < kArrayCols; ++j) ASSERT_LE(y1[j], y2[j]);
  }
}

TEST(AnalogMacProperty, TemporalNoiseScaling) {
  // Large sigma so the 1-LSB digitization barely changes the spread.
  ChipConfig cfg = ChipConfig::noiseless(1.0f);
  cfg.sigma_temporal = 8.0f;
  SynapseArray a(cfg, 0);
  const auto x = zeros_in();
  for (std::uint32_t ns : {1u, 4u}) {
    double s = 0, s2 = 0;
    std::size_t count = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
      const auto y = mac(a, x, cfg, 1000 + run, HwParams{ns, 1});
      for (auto v : y) {
        s += v;
        s2 += double(v) * v;
        ++count;
      }
    }
    const double sd = std::sqrt(s2 / count - (s / count) * (s / count));
    const double expect = std::sqrt(64.0 / ns + 1.0 / 12.0);
    EXPECT_NEAR(sd / expect, 1.0, 0.05) << "num_sends " << ns;
  }
}

TEST(AnalogMac, MembraneExposesPreDigitization) {
  ChipConfig cfg = ChipConfig::noiseless(0.5f);
  SynapseArray a(cfg, 0);
  std::vector<std::int8_t> w(kArrayRows * kArrayCols, 0);
  w[0] = 3;
  a.configure(w);
  auto x = zeros_in();
  x[0] = 1;
  NormalStream rng(1);
  std::vector<std::int8_t> y(kArrayCols);
  std::vector<float> membrane(kArrayCols);
  analog_mac(a, x, HwParams{}, cfg, rng, y, 4, membrane);
  EXPECT_FLOAT_EQ(membrane[0], 1.5f);
  EXPECT_EQ(y[0], 2);
}
