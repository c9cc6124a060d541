#include "anamac/matmul.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anamac {
namespace {

void check_operands(const Tensor& x, const Tensor& w) {
  if (x.dtype() != DType::u8 || w.dtype() != DType::i8) {
    throw Error(ErrorCode::DTypeMismatch, "matmul expects u8 inputs and i8 weights");
  }
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
    throw Error(ErrorCode::ShapeMismatch, "cannot multiply " + shape_string(x.shape()) + " by " +
                                              shape_string(w.shape()));
  }
}

std::int32_t to_code(double v) {
  return static_cast<std::int32_t>(std::clamp(std::round(v), double(kOutputMin), double(kOutputMax)));
}

}  // namespace

Tensor reference_matmul(const Tensor& x, const Tensor& w, float gain) {
  check_operands(x, w);
  const std::size_t batch = x.dim(0), n = x.dim(1), m = w.dim(1);
  const auto xv = x.values<std::uint8_t>();
  const auto wv = w.values<std::int8_t>();
  std::vector<std::int32_t> y(batch * m);
  std::vector<std::int64_t> acc(m);
  for (std::size_t b = 0; b < batch; ++b) {
    std::fill(acc.begin(), acc.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) acc[j] += std::int64_t{xv[b * n + i]} * wv[i * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) y[b * m + j] = to_code(double(gain) * double(acc[j]));
  }
  return Tensor(Shape{batch, m}, std::move(y));
}

Tensor software_matmul(const Tensor& x, const Tensor& w, const SoftwareMatmulOptions& options) {
  check_operands(x, w);
  if (options.noise_sigma > 0 && options.rng == nullptr) {
    throw Error(ErrorCode::InvalidParams, "software noise needs a random stream");
  }
  const std::size_t batch = x.dim(0), n = x.dim(1), m = w.dim(1);
  const auto xv = x.values<std::uint8_t>();
  const auto wv = w.values<std::int8_t>();
  for (auto v : xv) {
    if (v > kInputMax) throw Error(ErrorCode::InputOutOfRange, "input " + std::to_string(v) + " > 31");
  }
  for (auto v : wv) {
    if (v > kWeightMax || v < (options.signed_weights ? -kWeightMax : 0)) {
      throw Error(ErrorCode::WeightOutOfRange, "weight " + std::to_string(int(v)));
    }
  }
  const std::size_t cap = row_capacity(options.signed_weights);
  const std::size_t ranges = (n + cap - 1) / cap;
  const double gain = options.gain;
  std::vector<std::int32_t> y(batch * m);
  std::vector<std::int64_t> total(m);
  std::vector<std::int32_t> acc(m);
  for (std::size_t b = 0; b < batch; ++b) {
    std::fill(total.begin(), total.end(), 0);
    for (std::size_t r = 0; r < ranges; ++r) {
      std::fill(acc.begin(), acc.end(), 0);
      for (std::size_t i = r * cap; i < std::min(n, (r + 1) * cap); ++i) {
        const int xi = xv[b * n + i];
        if (xi == 0) continue;
        const std::int8_t* row = wv.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) acc[j] += xi * row[j];
      }
      for (std::size_t j = 0; j < m; ++j) {
        double v = gain * acc[j];
        if (options.noise_sigma > 0) v += options.noise_sigma * options.rng->next();
        total[j] = std::clamp<std::int64_t>(total[j] + to_code(v), std::numeric_limits<std::int32_t>::min(),
                                            std::numeric_limits<std::int32_t>::max());
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      y[b * m + j] = static_cast<std::int32_t>(
          ranges > 1 ? std::clamp<std::int64_t>(total[j], options.digital_min, options.digital_max) : total[j]);
    }
  }
  return Tensor(Shape{batch, m}, std::move(y));
}

Tensor chip_matmul(const Tensor& x, const Tensor& w, bool signed_weights, const HwParams& params, ChipLease& lease,
                   const ExecutorOptions& exec, const GraphOptions& graph) {
  check_operands(x, w);
  const auto arrays = all_arrays(lease.size());
  const auto plan = partition_matmul(x.dim(1), w.dim(1), signed_weights, arrays);
  GraphOptions options = graph;
  options.params = params;
  const auto g = build_graph(plan, w, options);
  return Executor(exec).run(g, x, lease).output();
}

std::string_view to_string(Backend b) { return b == Backend::chip ? "chip" : "software"; }

Backend backend_from_string(std::string_view name) {
  if (name == "software") return Backend::software;
  if (name == "chip") return Backend::chip;
  throw Error(ErrorCode::InvalidParams, "unknown backend " + std::string(name));
}

QuantSpec layer_quant(const DenseLayer& layer, float gain, float input_scale) {
  QuantSpec q;
  q.signed_weights = layer.signed_weights;
  q.input_scale = input_scale > 0.0f ? input_scale : layer.input_scale;
  q.weight_scale = scale_for_max_abs(Tensor(Shape{layer.weights.size()}, layer.weights), kWeightMax);
  q.output_scale = matched_output_scale(q.input_scale, q.weight_scale, gain);
  q.validate();
  return q;
}

ForwardResult matmul_forward(const Tensor& x, const DenseLayer& layer, ForwardContext& ctx, float input_scale) {
  if (x.dtype() != DType::f32 || x.rank() != 2 || x.dim(1) != layer.in) {
    throw Error(ErrorCode::ShapeMismatch, "layer expects f32 [B, " + std::to_string(layer.in) + "], got " +
                                              shape_string(x.shape()));
  }
  if (layer.weights.size() != layer.in * layer.out) {
    throw Error(ErrorCode::ShapeMismatch, "master weights do not match layer size");
  }
  const QuantSpec q = layer_quant(layer, ctx.gain, input_scale);
  const Tensor xq = quantize_inputs(x, q);
  const Tensor wq = quantize_weights(Tensor(Shape{layer.in, layer.out}, layer.weights), q);
  Tensor codes;
  if (ctx.backend == Backend::software) {
    SoftwareMatmulOptions opt;
    opt.signed_weights = layer.signed_weights;
    opt.gain = ctx.gain;
    opt.noise_sigma = ctx.software_noise / std::sqrt(static_cast<double>(layer.params.num_sends));
    opt.rng = ctx.rng;
    codes = software_matmul(xq, wq, opt);
  } else {
    if (ctx.lease == nullptr) throw Error(ErrorCode::Unavailable, "chip backend needs leased chips");
    codes = chip_matmul(xq, wq, layer.signed_weights, layer.params, *ctx.lease, ctx.exec);
    ++ctx.exec.run_seed;
  }
  ForwardResult r;
  r.y = dequantize_outputs(codes, q);
  r.state = SavedState{x, r.y, q, true};
  return r;
}

Gradients matmul_backward(const Tensor& grad_y, const SavedState& state, const DenseLayer& layer) {
  if (!state.valid) throw Error(ErrorCode::MissingState, "backward called without a forward state");
  const std::size_t batch = state.x.dim(0), n = layer.in, m = layer.out;
  if (grad_y.shape() != Shape{batch, m}) {
    throw Error(ErrorCode::ShapeMismatch, "grad_y " + shape_string(grad_y.shape()) + " does not match output");
  }
  const auto g = grad_y.values<float>();
  const auto x = state.x.values<float>();
  const auto& w = layer.weights;
  std::vector<float> gx(batch * n, 0.0f), gw(n * m, 0.0f);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      const float xi = x[b * n + i];
      float acc = 0.0f;
      for (std::size_t j = 0; j < m; ++j) {
        const float gj = g[b * m + j];
        acc += gj * w[i * m + j];
        gw[i * m + j] += xi * gj;
      }
      gx[b * n + i] = acc;
    }
  }
  return {Tensor(Shape{batch, n}, std::move(gx)), Tensor(Shape{n, m}, std::move(gw))};
}

}  // namespace anamac
