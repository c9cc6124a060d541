#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "anamac/tensor.hpp"

namespace anamac {

/// Plain strided valid convolution (no padding, dilation or groups).
/// For dims == 1 only index 0 of kernel/stride/extent is used.
struct ConvSpec {
  std::size_t dims = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::array<std::size_t, 2> kernel{1, 1};
  std::array<std::size_t, 2> stride{1, 1};
  std::array<std::size_t, 2> extent{1, 1};

  /// Throws InvalidParams for zero sizes and EmptyOutput if a kernel does not fit.
  void validate() const;
  std::size_t output_extent(std::size_t axis) const;
  std::size_t positions() const;
  std::size_t taps() const;
  /// Rows of the unrolled weight matrix, C_in * prod(kernel).
  std::size_t matrix_rows() const { return in_channels * taps(); }

  Shape kernel_shape() const;  // [C_out, C_in, k1(, k2)]
  Shape input_shape() const;   // [C_in, L1(, L2)]
  Shape output_shape() const;  // [C_out, out1(, out2)]

  static ConvSpec conv1d(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t s, std::size_t length);
  static ConvSpec conv2d(std::size_t c_in, std::size_t c_out, std::array<std::size_t, 2> k,
                         std::array<std::size_t, 2> s, std::array<std::size_t, 2> extent);
};

/// Maps rows of the position-major matmul result back to (channel, position).
struct OutputDescriptor {
  std::size_t out_channels = 0;
  std::vector<std::size_t> spatial;

  std::size_t positions() const;
  /// [positions, C_out] -> [C_out, spatial...], any dtype.
  Tensor to_output(const Tensor& matmul_result) const;
};

/// Row index of the unrolled matrix is tap * C_in + channel, where tap
/// enumerates kernel offsets in row-major order.
struct LoweredConv {
  Tensor weights;  // [C_in * prod(k), C_out], dtype of the kernel
  Tensor inputs;   // [positions, C_in * prod(k)], dtype of the input
  OutputDescriptor output;
};

LoweredConv lower_conv(const ConvSpec& spec, const Tensor& kernel, const Tensor& input);
/// Only the weight matrix (no input gathering).
Tensor unroll_kernel(const ConvSpec& spec, const Tensor& kernel);
/// Only the receptive fields, [positions, rows].
Tensor gather_inputs(const ConvSpec& spec, const Tensor& input);
/// Inverse of unroll_kernel for gradients and checkpoints.
Tensor roll_kernel(const ConvSpec& spec, const Tensor& matrix);

/// Direct convolution on integers, exact i32 result [C_out, spatial...].
Tensor direct_conv(const ConvSpec& spec, const Tensor& kernel, const Tensor& input);

/// Diagonal packing of P copies of a 1-d conv kernel into one array.
struct ExpansionPlan {
  std::size_t copies = 1;
  std::size_t row_offset_per_copy = 0;  // s * C_in
  std::size_t col_offset_per_copy = 0;  // C_out
  std::size_t block_rows = 0;           // k * C_in
  std::size_t block_cols = 0;           // C_out
  std::size_t packed_rows = 0;          // (P-1) s C_in + k C_in
  std::size_t packed_cols = 0;          // P C_out

  /// Chip runs needed for `positions` outputs.
  std::size_t runs(std::size_t positions) const { return (positions + copies - 1) / copies; }
};

ExpansionPlan plan_expansion(const ConvSpec& spec, std::size_t cap_rows, std::size_t cap_cols = 256);

/// Packed [packed_rows, packed_cols] matrix from one unrolled block per copy
/// (each [k C_in, C_out]); a single block is shared by all copies.
Tensor pack_expanded(const ExpansionPlan& plan, std::span<const Tensor> copy_blocks);
/// One window per run, [runs, packed_rows]; positions past the end read zeros.
Tensor expanded_windows(const ExpansionPlan& plan, const ConvSpec& spec, const Tensor& input);
/// [runs, packed_cols] -> [positions, C_out], dropping unused copies of the last run.
Tensor unpack_expanded(const ExpansionPlan& plan, const ConvSpec& spec, const Tensor& run_outputs);

/// x [B, rows] (u8), w [rows, cols] (i8) -> [B, cols].
using MatmulFn = std::function<Tensor(const Tensor&, const Tensor&)>;

/// One matmul per group of P positions; returns [positions, C_out] like the
/// matmul result of the lower_conv path.
Tensor execute_expanded(const ExpansionPlan& plan, const ConvSpec& spec, std::span<const Tensor> copy_blocks,
                        const Tensor& input, const MatmulFn& matmul);

std::string lowering_to_json(const ConvSpec& spec, const ExpansionPlan* plan, int indent = 2);

}  // namespace anamac
