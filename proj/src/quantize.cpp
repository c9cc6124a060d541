#include "anamac/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "anamac/limits.hpp"

namespace anamac {
namespace {

void require_finite(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, std::string(what) + " contains non-finite value");
  }
}

bool valid_scale(float s) { return std::isfinite(s) && s > 0.0f; }

}  // namespace

void QuantSpec::validate() const {
  if (!valid_scale(input_scale) || !valid_scale(weight_scale) || !valid_scale(output_scale)) {
    throw Error(ErrorCode::InvalidScale, "scales must be finite and strictly positive");
  }
}

std::uint8_t quantize_input_value(float x, float scale) {
  const float q = std::round(x / scale);
  return static_cast<std::uint8_t>(std::clamp(q, float(kInputMin), float(kInputMax)));
}

std::int8_t quantize_weight_value(float w, float scale, bool signed_weights) {
  const float q = std::round(w / scale);
  const float lo = signed_weights ? -float(kWeightMax) : 0.0f;
  return static_cast<std::int8_t>(std::clamp(q, lo, float(kWeightMax)));
}

Tensor quantize_inputs(const Tensor& x, const QuantSpec& spec) {
  spec.validate();
  const auto values = x.values<float>();
  require_finite(values, "input");
  std::vector<std::uint8_t> q(values.size());
  std::transform(values.begin(), values.end(), q.begin(),
                 [&](float v) { return quantize_input_value(v, spec.input_scale); });
  return Tensor(x.shape(), std::move(q));
}

Tensor quantize_weights(const Tensor& w, const QuantSpec& spec) {
  spec.validate();
  const auto values = w.values<float>();
  require_finite(values, "weight");
  std::vector<std::int8_t> q(values.size());
  std::transform(values.begin(), values.end(), q.begin(), [&](float v) {
    return quantize_weight_value(v, spec.weight_scale, spec.signed_weights);
  });
  return Tensor(w.shape(), std::move(q));
}

Tensor dequantize_outputs(const Tensor& y, const QuantSpec& spec) {
  spec.validate();
  if (y.dtype() != DType::i8 && y.dtype() != DType::i32) {
    throw Error(ErrorCode::DTypeMismatch, "dequantize expects i8 or i32 codes");
  }
  auto values = y.to_float();
  for (auto& v : values) v *= spec.output_scale;
  return Tensor(y.shape(), std::move(values));
}

float scale_for_max_abs(const Tensor& x, int levels) {
  float m = 0.0f;
  for (float v : x.to_float()) m = std::max(m, std::abs(v));
  return m > 0.0f ? m / static_cast<float>(levels) : 1.0f;
}

float matched_output_scale(float input_scale, float weight_scale, float gain) {
  return input_scale * weight_scale / gain;
}

}  // namespace anamac
