#pragma once

#include "anamac/tensor.hpp"

namespace anamac {

/// Per-layer conversion between float values and the chip's integer domains.
/// Scales are float units per LSB.
struct QuantSpec {
  float input_scale = 1.0f;
  float weight_scale = 1.0f;
  float output_scale = 1.0f;
  bool signed_weights = true;

  /// Throws InvalidScale unless every scale is finite and > 0.
  void validate() const;
};

/// clamp(round(x / input_scale), 0, 31), round half away from zero.
Tensor quantize_inputs(const Tensor& x, const QuantSpec& spec);
/// clamp(round(w / weight_scale), -63, 63), or [0, 63] for unsigned weights.
Tensor quantize_weights(const Tensor& w, const QuantSpec& spec);
/// y * output_scale. Accepts i8 codes or wider i32 digital sums.
Tensor dequantize_outputs(const Tensor& y, const QuantSpec& spec);

std::uint8_t quantize_input_value(float x, float scale);
std::int8_t quantize_weight_value(float w, float scale, bool signed_weights);

/// max(|x|) / levels, falling back to 1 for an all-zero tensor.
float scale_for_max_abs(const Tensor& x, int levels);

/// Output scale under which dequantized codes approximate x * w in float,
/// given the analog gain that maps integer products to output LSB.
float matched_output_scale(float input_scale, float weight_scale, float gain);

}  // namespace anamac
