#pragma once

#include <cstdint>

#include "anamac/executor.hpp"
#include "anamac/partition.hpp"
#include "anamac/quantize.hpp"
#include "anamac/tensor.hpp"

namespace anamac {

/// Integer-domain matmuls on x: u8 [B, N] and w: i8 [N, M], returning i32 [B, M].

/// clamp(round(gain * x w), -128, 127) as if the whole matrix fit one array.
Tensor reference_matmul(const Tensor& x, const Tensor& w, float gain);

struct SoftwareMatmulOptions {
  bool signed_weights = true;
  float gain = 1.0f / 64.0f;
  std::int32_t digital_min = kOutputMin;
  std::int32_t digital_max = kOutputMax;
  double noise_sigma = 0.0;         // Gaussian noise per tile output, output LSB
  NormalStream* rng = nullptr;      // required when noise_sigma > 0
};

/// Noise-free model of the partitioned hardware path: every tile rounds and
/// clamps its own 8-bit output, row tiles are summed and clamped digitally.
Tensor software_matmul(const Tensor& x, const Tensor& w, const SoftwareMatmulOptions& options = {});

/// quantized operands -> partition -> graph -> executor.
Tensor chip_matmul(const Tensor& x, const Tensor& w, bool signed_weights, const HwParams& params, ChipLease& lease,
                   const ExecutorOptions& exec = {}, const GraphOptions& graph = {});

enum class Backend { software, chip };

std::string_view to_string(Backend b);
Backend backend_from_string(std::string_view name);

/// Float layer computing y = x W through the integer chip domain.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<float> weights;  // master weights, [in, out] row-major
  float input_scale = 1.0f / kInputMax;
  bool signed_weights = true;
  HwParams params;
};

/// Weight scale from the current master weights, output scale matched to the
/// gain. A positive `input_scale` replaces the layer's own.
QuantSpec layer_quant(const DenseLayer& layer, float gain, float input_scale = 0.0f);

struct ForwardContext {
  Backend backend = Backend::software;
  float gain = 1.0f / 64.0f;
  double software_noise = 0.0;  // output LSB at num_sends = 1, software backend only
  NormalStream* rng = nullptr;  // software noise source
  ChipLease* lease = nullptr;   // chip backend
  ExecutorOptions exec;         // exec.run_seed advances after every chip call
};

struct SavedState {
  Tensor x;  // float input [B, in]
  Tensor y;  // dequantized output [B, out]
  QuantSpec quant;
  bool valid = false;
};

struct ForwardResult {
  Tensor y;
  SavedState state;
};

ForwardResult matmul_forward(const Tensor& x, const DenseLayer& layer, ForwardContext& ctx,
                             float input_scale = 0.0f);

struct Gradients {
  Tensor grad_x;  // [B, in]
  Tensor grad_w;  // [in, out]
};

/// Gradients of the float model y = x W, using the saved float input and
/// the master weights (quantization is passed straight through).
Gradients matmul_backward(const Tensor& grad_y, const SavedState& state, const DenseLayer& layer);

}  // namespace anamac
