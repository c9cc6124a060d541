#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "anamac/tensor.hpp"

namespace anamac {

// Binary container layout (all integers little-endian):
//   "ATNS" | u16 version=1 | u8 dtype | u8 rank | rank x u32 dims | payload
inline constexpr std::uint16_t kTensorFileVersion = 1;

std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> bytes);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

/// One row per line. Rank-2 tensors map directly; rank-1 become a single
/// row; higher ranks are written as [shape[0], rest].
void write_csv(const Tensor& t, const std::filesystem::path& path);
/// Reads a rectangular CSV of decimals into a rank-2 f32 tensor.
Tensor read_csv(const std::filesystem::path& path);

}  // namespace anamac
