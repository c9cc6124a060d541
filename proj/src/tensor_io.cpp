#include "anamac/tensor_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace anamac {
namespace {

constexpr std::array<char, 4> kMagic{'A', 'T', 'N', 'S'};

template <class U>
void put_le(std::vector<std::byte>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
  }
}

template <class U>
U get_le(std::span<const std::byte> in, std::size_t offset) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(std::to_integer<U>(in[offset + i]) << (8 * i));
  }
  return value;
}

template <class T>
void put_payload(std::vector<std::byte>& out, std::span<const T> values) {
  for (T v : values) {
    if constexpr (std::is_same_v<T, float>) {
      put_le(out, std::bit_cast<std::uint32_t>(v));
    } else if constexpr (sizeof(T) == 4) {
      put_le(out, std::bit_cast<std::uint32_t>(v));
    } else {
      out.push_back(static_cast<std::byte>(std::bit_cast<std::uint8_t>(v)));
    }
  }
}

template <class T>
Tensor take_payload(Shape shape, std::span<const std::byte> in, std::size_t offset) {
  const std::size_t n = element_count(shape);
  std::vector<T> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    if constexpr (sizeof(T) == 4) {
      values[i] = std::bit_cast<T>(get_le<std::uint32_t>(in, offset + 4 * i));
    } else {
      values[i] = std::bit_cast<T>(std::to_integer<std::uint8_t>(in[offset + i]));
    }
  }
  return Tensor(std::move(shape), std::move(values));
}

std::string format_value(float v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

std::vector<std::byte> encode_tensor(const Tensor& t) {
  std::vector<std::byte> out;
  out.reserve(8 + 4 * t.rank() + t.bytes().size());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint16_t>(out, kTensorFileVersion);
  out.push_back(static_cast<std::byte>(t.dtype()));
  out.push_back(static_cast<std::byte>(t.rank()));
  for (auto extent : t.shape()) put_le(out, static_cast<std::uint32_t>(extent));
  switch (t.dtype()) {
    case DType::f32: put_payload(out, t.values<float>()); break;
    case DType::i32: put_payload(out, t.values<std::int32_t>()); break;
    case DType::u8: put_payload(out, t.values<std::uint8_t>()); break;
    case DType::i8: put_payload(out, t.values<std::int8_t>()); break;
  }
  return out;
}

Tensor decode_tensor(std::span<const std::byte> in) {
  if (in.size() < 4 || std::memcmp(in.data(), kMagic.data(), 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a tensor file");
  }
  if (in.size() < 8) throw Error(ErrorCode::TruncatedPayload, "header truncated");
  const auto version = get_le<std::uint16_t>(in, 4);
  if (version != kTensorFileVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  }
  const auto code = std::to_integer<std::uint8_t>(in[6]);
  if (code > 3) throw Error(ErrorCode::ParseError, "dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = std::to_integer<std::uint8_t>(in[7]);
  if (rank > kMaxRank) throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(rank));
  if (in.size() < 8 + 4 * rank) throw Error(ErrorCode::TruncatedPayload, "dims truncated");
  Shape shape(rank);
  for (std::size_t i = 0; i < rank; ++i) shape[i] = get_le<std::uint32_t>(in, 8 + 4 * i);
  const std::size_t offset = 8 + 4 * rank;
  const std::size_t need = element_count(shape) * dtype_size(dtype);
  if (in.size() - offset < need) {
    throw Error(ErrorCode::TruncatedPayload, "payload has " + std::to_string(in.size() - offset) +
                                                 " bytes, expected " + std::to_string(need));
  }
  switch (dtype) {
    case DType::f32: return take_payload<float>(std::move(shape), in, offset);
    case DType::i32: return take_payload<std::int32_t>(std::move(shape), in, offset);
    case DType::u8: return take_payload<std::uint8_t>(std::move(shape), in, offset);
    case DType::i8: return take_payload<std::int8_t>(std::move(shape), in, offset);
  }
  throw Error(ErrorCode::ParseError, "unreachable dtype");
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(t);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_tensor(std::as_bytes(std::span(raw.data(), raw.size())));
}

void write_csv(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  const auto values = t.to_float();
  std::size_t rows = 1;
  if (t.rank() >= 2) rows = t.shape()[0];
  const std::size_t cols = rows == 0 ? 0 : values.size() / rows;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c != 0) os << ',';
      os << format_value(values[r * cols + c]);
    }
    os << '\n';
  }
}

Tensor read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<float> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::size_t n = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stof(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad CSV cell '" + cell + "' in " + path.string());
      }
      ++n;
    }
    if (rows == 0) cols = n;
    if (n != cols) {
      throw Error(ErrorCode::RaggedRow, "row " + std::to_string(rows) + " has " +
                                            std::to_string(n) + " cells, expected " +
                                            std::to_string(cols));
    }
    ++rows;
  }
  return Tensor(Shape{rows, cols}, std::move(values));
}

}  // namespace anamac
