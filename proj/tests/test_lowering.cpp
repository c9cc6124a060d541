#include <gtest/gtest.h>

#include <random>

#include "anamac/lowering.hpp"
#include "anamac/matmul.hpp"
#include "test_util.hpp"

using namespace anamac;
using testutil::expect_code;

namespace {

Tensor i8(Shape s, std::vector<std::int8_t> v) { return Tensor(std::move(s), std::move(v)); }
Tensor u8(Shape s, std::vector<std::uint8_t> v) { return Tensor(std::move(s), std::move(v)); }

/// Exact integer product as an i32 tensor.
Tensor exact_matmul(const Tensor& x, const Tensor& w) {
  const auto y = testutil::int_matmul(x, w);
  return Tensor(Shape{x.dim(0), w.dim(1)}, std::vector<std::int32_t>(y.begin(), y.end()));
}

std::vector<std::int32_t> lowered_result(const ConvSpec& spec, const Tensor& kernel, const Tensor& input) {
  const auto low = lower_conv(spec, kernel, input);
  const auto out = low.output.to_output(exact_matmul(low.inputs, low.weights));
  const auto v = out.values<std::int32_t>();
  return {v.begin(), v.end()};
}

std::vector<std::int32_t> direct(const ConvSpec& spec, const Tensor& kernel, const Tensor& input) {
  const auto t = direct_conv(spec, kernel, input);
  const auto v = t.values<std::int32_t>();
  return {v.begin(), v.end()};
}

}  // namespace

TEST(LowerConv, Pointwise) {
  const auto spec = ConvSpec::conv1d(1, 1, 1, 1, 3);
  const auto low = lower_conv(spec, i8({1, 1, 1}, {2}), u8({1, 3}, {1, 2, 3}));
  EXPECT_EQ(low.weights.shape(), (Shape{1, 1}));
  EXPECT_EQ(lowered_result(spec, i8({1, 1, 1}, {2}), u8({1, 3}, {1, 2, 3})), (std::vector<std::int32_t>{2, 4, 6}));
}

TEST(LowerConv, OverlappingWindows) {
  const auto spec = ConvSpec::conv1d(1, 1, 2, 1, 4);
  const auto kernel = i8({1, 1, 2}, {1, -1});
  const auto input = u8({1, 4}, {3, 1, 4, 1});
  const auto low = lower_conv(spec, kernel, input);
  const auto iv = low.inputs.values<std::uint8_t>();
  EXPECT_EQ(std::vector<std::uint8_t>(iv.begin(), iv.end()), (std::vector<std::uint8_t>{3, 1, 1, 4, 4, 1}));
  EXPECT_EQ(lowered_result(spec, kernel, input), (std::vector<std::int32_t>{2, -3, 3}));
  EXPECT_EQ(direct(spec, kernel, input), (std::vector<std::int32_t>{2, -3, 3}));
}

TEST(LowerConv, TwoDimensional) {
  std::mt19937_64 rng(1);
  const auto spec = ConvSpec::conv2d(3, 1, {2, 2}, {1, 1}, {3, 3});
  const auto kernel = testutil::random_kernel(rng, spec);
  const auto input = testutil::random_input(rng, spec);
  const auto low = lower_conv(spec, kernel, input);
  EXPECT_EQ(low.weights.shape(), (Shape{12, 1}));
  EXPECT_EQ(low.inputs.dim(0), 4u);
  EXPECT_EQ(lowered_result(spec, kernel, input), direct(spec, kernel, input));
}

TEST(LowerConv, Errors) {
  expect_code(ErrorCode::EmptyOutput, [] { ConvSpec::conv1d(1, 1, 5, 1, 4).validate(); });
  const auto spec = ConvSpec::conv1d(1, 1, 2, 1, 4);
  expect_code(ErrorCode::ShapeMismatch, [&] { lower_conv(spec, i8({1, 1, 3}, {1, 2, 3}), u8({1, 4}, {0, 0, 0, 0})); });
  expect_code(ErrorCode::ShapeMismatch, [&] { lower_conv(spec, i8({1, 1, 2}, {1, 2}), u8({1, 5}, {0, 0, 0, 0, 0})); });
}

TEST(LowerConv, WeightMatrixIndependentOfInput) {
  std::mt19937_64 rng(2);
  const auto spec = ConvSpec::conv1d(2, 3, 3, 2, 11);
  const auto kernel = testutil::random_kernel(rng, spec);
  const auto a = lower_conv(spec, kernel, testutil::random_input(rng, spec));
  const auto b = lower_conv(spec, kernel, testutil::random_input(rng, spec));
  EXPECT_TRUE(std::ranges::equal(a.weights.values<std::int8_t>(), b.weights.values<std::int8_t>()));
  const auto rolled = roll_kernel(spec, a.weights);
  EXPECT_TRUE(std::ranges::equal(rolled.values<std::int8_t>(), kernel.values<std::int8_t>()));
}

TEST(LoweringProperty, MatchesDirectConvolution) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 300; ++iter) {
    const std::size_t cin = 1 + rng() % 8, cout = 1 + rng() % 8;
    ConvSpec spec;
    if (iter % 2 == 0) {
      const std::size_t k = 1 + rng() % 5, s = 1 + rng() % 4;
      spec = ConvSpec::conv1d(cin, cout, k, s, k + rng() % 12);
    } else {
      const std::array<std::size_t, 2> k{1 + rng() % 3, 1 + rng() % 3}, s{1 + rng() % 4, 1 + rng() % 4};
      spec = ConvSpec::conv2d(cin, cout, k, s, {k[0] + rng() % 6, k[1] + rng() % 6});
    }
    const auto kernel = testutil::random_kernel(rng, spec, 63);
    const auto input = testutil::random_input(rng, spec);
    ASSERT_EQ(lowered_result(spec, kernel, input), direct(spec, kernel, input)) << iter;
  }
}

TEST(PlanExpansion, Examples) {
  expect_code(ErrorCode::KernelTooLarge, [] { plan_expansion(ConvSpec::conv1d(9, 16, 32, 6, 128), 256); });
  const auto p = plan_expansion(ConvSpec::conv1d(1, 16, 32, 6, 128), 256);
  EXPECT_EQ(p.copies, 16u);
  EXPECT_EQ(p.row_offset_per_copy, 6u);
  EXPECT_EQ(p.col_offset_per_copy, 16u);
  EXPECT_EQ(plan_expansion(ConvSpec::conv1d(1, 1, 256, 1, 256), 256).copies, 1u);
  expect_code(ErrorCode::KernelTooLarge, [] { plan_expansion(ConvSpec::conv1d(1, 257, 1, 1, 4), 256); });
  expect_code(ErrorCode::InvalidParams,
              [] { plan_expansion(ConvSpec::conv2d(1, 1, {1, 1}, {1, 1}, {2, 2}), 256); });
}

TEST(PlanExpansion, OutputExtentOfReferenceLayer) {
  // floor((128 - 32) / 6) + 1 positions.
  EXPECT_EQ(ConvSpec::conv1d(9, 16, 32, 6, 128).output_extent(0), 17u);
}

TEST(ExpansionProperty, PlacementsDisjointAndInBounds) {
  std::mt19937_64 rng(4);
  for (int iter = 0; iter < 200; ++iter) {
    const bool is_signed = iter % 2 == 0;
    const std::size_t cap = row_capacity(is_signed);
    const std::size_t cin = 1 + rng() % 4, k = 1 + rng() % (cap / cin), s = 1 + rng() % 8;
    const std::size_t cout = 1 + rng() % 64;
    const auto spec = ConvSpec::conv1d(cin, cout, k, s, k + rng() % 50);
    const auto plan = plan_expansion(spec, cap);
    ASSERT_LE(plan.packed_rows, cap);
    ASSERT_LE(plan.packed_cols, kArrayCols);
    ASSERT_EQ(plan.copies,
              std::min((cap - k * cin) / (s * cin) + 1, kArrayCols / cout));
    // Distinct marker per copy; every cell must hold at most one copy's value.
    std::vector<Tensor> blocks;
    for (std::size_t c = 0; c < plan.copies; ++c)
      blocks.push_back(Tensor(Shape{k * cin, cout},
                              std::vector<std::int32_t>(k * cin * cout, static_cast<std::int32_t>(c + 1))));
    const auto packed = pack_expanded(plan, blocks);
    const auto pv = packed.values<std::int32_t>();
    std::size_t filled = 0;
    for (std::size_t r = 0; r < plan.packed_rows; ++r)
      for (std::size_t col = 0; col < plan.packed_cols; ++col) {
        const auto v = pv[r * plan.packed_cols + col];
        if (v == 0) continue;
        ++filled;
        const std::size_t c = static_cast<std::size_t>(v - 1);
        ASSERT_EQ(col / cout, c);
        ASSERT_GE(r, c * s * cin);
        ASSERT_LT(r, c * s * cin + k * cin);
      }
    EXPECT_EQ(filled, plan.copies * k * cin * cout);
  }
}

TEST(ExecuteExpanded, MatchesSequentialPositions) {
  std::mt19937_64 rng(5);
  for (std::size_t want : {1u, 3u}) {
    const auto spec = ConvSpec::conv1d(2, 4, 5, 2, 40);
    auto plan = plan_expansion(spec, 256);
    ASSERT_GE(plan.copies, want);
    // Force the requested copy count through the cap on rows.
    plan = plan_expansion(spec, (want - 1) * 2 * 2 + 5 * 2);
    ASSERT_EQ(plan.copies, want);
    const auto kernel = testutil::random_kernel(rng, spec);
    const auto input = testutil::random_input(rng, spec);
    const auto low = lower_conv(spec, kernel, input);
    const Tensor block = low.weights;
    std::size_t calls = 0, rows = 0;
    const MatmulFn fn = [&](const Tensor& x, const Tensor& w) {
      ++calls;
      rows += x.dim(0);
      return exact_matmul(x, w);
    };
    const auto y = execute_expanded(plan, spec, std::span(&block, 1), input, fn);
    EXPECT_EQ(y.shape(), (Shape{spec.positions(), 4}));
    const auto ref = exact_matmul(low.inputs, low.weights);
    EXPECT_TRUE(std::ranges::equal(y.values<std::int32_t>(), ref.values<std::int32_t>()));
    EXPECT_EQ(rows, plan.runs(spec.positions()));
    EXPECT_EQ(calls, 1u);
  }
}

TEST(ExecuteExpanded, ZeroedCopyGivesZeroPositions) {
  std::mt19937_64 rng(6);
  const auto spec = ConvSpec::conv1d(1, 2, 4, 2, 20);
  const auto plan = plan_expansion(spec, 4 + 2);
  ASSERT_EQ(plan.copies, 2u);
  const auto kernel = testutil::random_kernel(rng, spec);
  const auto input = testutil::random_input(rng, spec);
  const std::vector<Tensor> blocks{unroll_kernel(spec, kernel), Tensor::zeros<std::int8_t>(Shape{4, 2})};
  const auto y = execute_expanded(plan, spec, blocks, input, exact_matmul);
  const auto v = y.values<std::int32_t>();
  const auto ref = direct(spec, kernel, input);  // [C_out, positions]
  for (std::size_t p = 0; p < spec.positions(); ++p)
    for (std::size_t o = 0; o < 2; ++o) EXPECT_EQ(v[p * 2 + o], p % 2 == 1 ? 0 : ref[o * spec.positions() + p]);
}

TEST(ExecuteExpanded, NoiselessChipRunEqualsLoweredPath) {
  ResourceManager rm(ChipConfig::noiseless(1.0f), 1);
  auto lease = rm.acquire_chips(1);
  std::mt19937_64 rng(7);
  const auto spec = ConvSpec::conv1d(1, 16, 32, 6, 128);
  const auto plan = plan_expansion(spec, 256);
  const auto kernel = testutil::random_kernel(rng, spec, 1);
  const auto input = testutil::random_input(rng, spec, 1);
  const MatmulFn chip = [&](const Tensor& x, const Tensor& w) {
    return chip_matmul(x, w, false, HwParams{}, lease);
  };
  // Unsigned packing: shift the kernel into [0, 2] so it fits unsigned weights.
  std::vector<std::int8_t> kv(kernel.values<std::int8_t>().begin(), kernel.values<std::int8_t>().end());
  for (auto& v : kv) v = static_cast<std::int8_t>(v + 1);
  const Tensor k2(spec.kernel_shape(), kv);
  const auto block = unroll_kernel(spec, k2);
  const auto y = execute_expanded(plan, spec, std::span(&block, 1), input, chip);
  const auto low = lower_conv(spec, k2, input);
  const auto ref = exact_matmul(low.inputs, low.weights);
  EXPECT_TRUE(std::ranges::equal(y.values<std::int32_t>(), ref.values<std::int32_t>()));
  EXPECT_EQ(plan.runs(spec.positions()), 2u);
}

TEST(LoweringJson, DescribesExpansion) {
  const auto spec = ConvSpec::conv1d(1, 16, 32, 6, 128);
  const auto plan = plan_expansion(spec, 256);
  const auto text = lowering_to_json(spec, &plan);
  EXPECT_NE(text.find("\"copies\": 16"), std::string::npos);
}
