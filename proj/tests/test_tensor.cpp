#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "anamac/tensor.hpp"
#include "anamac/tensor_io.hpp"

using namespace anamac;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("anamac_test_" + name);
}

template <class T>
void expect_code(ErrorCode code, T&& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Tensor, ReshapeKeepsFlatOrder) {
  Tensor t(Shape{2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  Tensor r = t.reshape(Shape{3, 2});
  EXPECT_EQ(r.shape(), (Shape{3, 2}));
  auto v = r.values<float>();
  EXPECT_EQ(std::vector<float>(v.begin(), v.end()), (std::vector<float>{1, 2, 3, 4, 5, 6}));
}

TEST(Tensor, ReshapeRoundTripIsIdentity) {
  Tensor t(Shape{6}, std::vector<std::int32_t>{1, -2, 3, -4, 5, -6});
  EXPECT_EQ(t.reshape(Shape{1, 6}).reshape(Shape{6}), t);
}

TEST(Tensor, FlattenBatchForLowering) {
  auto t = Tensor::zeros<float>(Shape{4, 9, 128});
  auto f = t.reshape(Shape{4, 1152});
  EXPECT_EQ(f.dim(1), 9u * 128u);
  EXPECT_EQ(f.size(), 4u * 1152u);
}

TEST(Tensor, ReshapeProductMismatch) {
  auto t = Tensor::zeros<float>(Shape{2, 3});
  expect_code(ErrorCode::ShapeMismatch, [&] { t.reshape(Shape{4, 2}); });
}

TEST(Tensor, RankZeroHoldsOneValue) {
  Tensor t(Shape{}, std::vector<std::int8_t>{-7});
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.values<std::int8_t>()[0], -7);
}

TEST(Tensor, LengthAndRankChecked) {
  expect_code(ErrorCode::ShapeMismatch, [] { Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}); });
  expect_code(ErrorCode::RankTooLarge, [] { Tensor(Shape(9, 1), std::vector<float>{1}); });
}

TEST(Tensor, WrongDtypeAccess) {
  auto t = Tensor::zeros<float>(Shape{2});
  expect_code(ErrorCode::DTypeMismatch, [&] { t.values<std::int8_t>(); });
}

TEST(Tensor, PropertyReshapeInverse) {
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t a = 1 + rng() % 6, b = 1 + rng() % 6, c = 1 + rng() % 6;
    std::vector<std::int32_t> data(a * b * c);
    for (auto& v : data) v = static_cast<std::int32_t>(rng());
    Tensor t(Shape{a, b, c}, data);
    const Shape s = (iter % 2 == 0) ? Shape{a * b, c} : Shape{a, b * c};
    EXPECT_EQ(t.reshape(s).reshape(t.shape()), t);
  }
}

TEST(TensorFile, HeaderLayout) {
  Tensor t(Shape{2, 3}, std::vector<std::int8_t>{0, 1, 2, 3, 4, -63});
  auto bytes = encode_tensor(t);
  ASSERT_EQ(bytes.size(), 4u + 2 + 1 + 1 + 2 * 4 + 6);
  EXPECT_EQ(static_cast<char>(bytes[0]), 'A');
  EXPECT_EQ(static_cast<char>(bytes[3]), 'S');
  EXPECT_EQ(std::to_integer<int>(bytes[4]), 1);  // version, little endian
  EXPECT_EQ(std::to_integer<int>(bytes[5]), 0);
  EXPECT_EQ(std::to_integer<int>(bytes[6]), 3);  // i8
  EXPECT_EQ(std::to_integer<int>(bytes[7]), 2);  // rank
  EXPECT_EQ(std::to_integer<int>(bytes[8]), 2);
  EXPECT_EQ(std::to_integer<int>(bytes[12]), 3);
  // -63 in two's complement
  EXPECT_EQ(std::to_integer<int>(bytes.back()), 0xC1);
}

TEST(TensorFile, LittleEndianPayload) {
  Tensor t(Shape{1}, std::vector<std::int32_t>{0x01020304});
  auto bytes = encode_tensor(t);
  EXPECT_EQ(std::to_integer<int>(bytes[12]), 0x04);
  EXPECT_EQ(std::to_integer<int>(bytes[15]), 0x01);
}

TEST(TensorFile, WriteReadRoundTrip) {
  Tensor t(Shape{2, 2}, std::vector<float>{1.5f, -2.25f, 0.0f, 1e-30f});
  const auto path = temp_path("rt.atns");
  write_tensor(t, path);
  EXPECT_EQ(read_tensor(path), t);
  std::filesystem::remove(path);
}

TEST(TensorFile, RoundTripAllDtypesAndNanBits) {
  std::mt19937 rng(3);
  std::vector<float> f(17);
  for (auto& v : f) v = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
  f[0] = std::bit_cast<float>(0x7fc00123u);  // NaN with payload
  f[1] = std::bit_cast<float>(0xffa00001u);
  std::vector<std::int32_t> i(5);
  for (auto& v : i) v = static_cast<std::int32_t>(rng());
  const Tensor ts[] = {Tensor(Shape{17}, f), Tensor(Shape{5, 1}, i),
                       Tensor(Shape{2, 2}, std::vector<std::uint8_t>{0, 31, 200, 255}),
                       Tensor(Shape{3}, std::vector<std::int8_t>{-128, 0, 127}), Tensor(Shape{}, std::vector<float>{2})};
  for (const auto& t : ts) {
    auto back = decode_tensor(encode_tensor(t));
    EXPECT_EQ(back, t);
  }
}

TEST(TensorFile, BadMagic) {
  auto bytes = encode_tensor(Tensor::zeros<float>(Shape{1}));
  bytes[0] = std::byte{'X'};
  bytes[1] = std::byte{'X'};
  bytes[2] = std::byte{'X'};
  bytes[3] = std::byte{'X'};
  expect_code(ErrorCode::BadMagic, [&] { decode_tensor(bytes); });
}

TEST(TensorFile, UnsupportedVersion) {
  auto bytes = encode_tensor(Tensor::zeros<float>(Shape{1}));
  bytes[4] = std::byte{2};
  expect_code(ErrorCode::UnsupportedVersion, [&] { decode_tensor(bytes); });
}

TEST(TensorFile, TruncatedPayload) {
  auto bytes = encode_tensor(Tensor::zeros<float>(Shape{4}));
  bytes.pop_back();
  expect_code(ErrorCode::TruncatedPayload, [&] { decode_tensor(bytes); });
  bytes.resize(6);
  expect_code(ErrorCode::TruncatedPayload, [&] { decode_tensor(bytes); });
}

TEST(TensorFile, MissingFile) {
  expect_code(ErrorCode::MissingFile, [] { read_tensor(temp_path("does_not_exist.atns")); });
}

TEST(TensorCsv, RoundTripFloats) {
  Tensor t(Shape{2, 3}, std::vector<float>{0.1f, -2.0f, 3.25f, 1e-7f, 5.0f, -0.0f});
  const auto path = temp_path("t.csv");
  write_csv(t, path);
  EXPECT_EQ(read_csv(path), t);
  std::filesystem::remove(path);
}

TEST(TensorCsv, RaggedRow) {
  const auto path = temp_path("ragged.csv");
  std::ofstream(path) << "1,2,3\n4,5\n";
  expect_code(ErrorCode::RaggedRow, [&] { read_csv(path); });
  std::filesystem::remove(path);
}
