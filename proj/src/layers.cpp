#include "anamac/layers.hpp"

#include <cmath>
#include <random>

namespace anamac {
namespace {

std::vector<float> he_uniform(std::size_t fan_in, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  std::uniform_real_distribution<float> dist(-bound, bound);
  std::vector<float> w(count);
  for (auto& v : w) v = dist(engine);
  return w;
}

std::size_t kept(const LayerParams& l) {
  const std::size_t all = l.conv.positions();
  return l.keep_positions == 0 ? all : std::min(all, l.keep_positions);
}

/// Receptive fields of the kept positions for every sample, [B * keep, rows].
Tensor conv_rows(const LayerParams& l, const Tensor& x) {
  const std::size_t batch = x.dim(0), keep = kept(l), rows = l.conv.matrix_rows();
  const std::size_t sample = element_count(l.conv.input_shape());
  if (x.size() != batch * sample) throw Error(ErrorCode::ShapeMismatch, "conv input " + shape_string(x.shape()));
  const auto xv = x.values<float>();
  std::vector<float> out(batch * keep * rows);
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor one(l.conv.input_shape(), std::vector<float>(xv.begin() + b * sample, xv.begin() + (b + 1) * sample));
    const Tensor gathered = gather_inputs(l.conv, one);
    const auto g = gathered.values<float>();
    std::copy_n(g.begin(), keep * rows, out.begin() + static_cast<std::ptrdiff_t>(b * keep * rows));
  }
  return Tensor(Shape{batch * keep, rows}, std::move(out));
}

/// Packed expansion windows for every sample, [B * runs, packed_rows].
Tensor expanded_rows(const LayerParams& l, const Tensor& x) {
  const auto& plan = *l.expansion;
  const std::size_t batch = x.dim(0), sample = element_count(l.conv.input_shape());
  const std::size_t runs = plan.runs(l.conv.positions());
  const auto xv = x.values<float>();
  std::vector<float> out;
  out.reserve(batch * runs * plan.packed_rows);
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor one(l.conv.input_shape(), std::vector<float>(xv.begin() + b * sample, xv.begin() + (b + 1) * sample));
    const Tensor windows = expanded_windows(plan, l.conv, one);
    const auto w = windows.values<float>();
    out.insert(out.end(), w.begin(), w.end());
  }
  return Tensor(Shape{batch * runs, plan.packed_rows}, std::move(out));
}

DenseLayer packed_layer(const LayerParams& l) {
  const auto& plan = *l.expansion;
  std::vector<Tensor> blocks;
  for (const auto& c : l.copies) blocks.emplace_back(Shape{plan.block_rows, plan.block_cols}, c);
  DenseLayer d = l.matmul;
  d.in = plan.packed_rows;
  d.out = plan.packed_cols;
  const Tensor packed_tensor = pack_expanded(plan, blocks);
  const auto packed = packed_tensor.values<float>();
  d.weights.assign(packed.begin(), packed.end());
  return d;
}

Tensor relu(const Tensor& y) {
  const auto v = y.values<float>();
  std::vector<float> out(v.begin(), v.end());
  for (auto& f : out) f = std::max(f, 0.0f);
  return Tensor(y.shape(), std::move(out));
}

}  // namespace

std::string_view to_string(LayerKind kind) { return kind == LayerKind::Conv1d ? "conv1d" : "dense"; }

LayerKind layer_kind_from_string(std::string_view name) {
  if (name == "dense") return LayerKind::Dense;
  if (name == "conv1d") return LayerKind::Conv1d;
  throw Error(ErrorCode::ParseError, "unknown layer kind " + std::string(name));
}

std::size_t LayerParams::positions() const { return kind == LayerKind::Conv1d ? kept(*this) : 1; }

std::size_t LayerParams::output_width() const {
  return kind == LayerKind::Conv1d ? conv.out_channels * kept(*this) : matmul.out;
}

LayerParams conv_layer(const ConvSpec& spec, std::size_t keep_positions, bool relu_on, std::uint64_t seed) {
  spec.validate();
  LayerParams l;
  l.kind = LayerKind::Conv1d;
  l.conv = spec;
  l.keep_positions = keep_positions;
  l.relu = relu_on;
  l.matmul.in = spec.matrix_rows();
  l.matmul.out = spec.out_channels;
  l.matmul.weights = he_uniform(spec.matrix_rows(), spec.matrix_rows() * spec.out_channels, seed);
  return l;
}

Model dense_model(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  Model m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    LayerParams l;
    l.matmul.in = widths[i];
    l.matmul.out = widths[i + 1];
    l.matmul.weights = he_uniform(widths[i], widths[i] * widths[i + 1], mix_seed({seed, i}));
    l.relu = i + 2 < widths.size();
    m.layers.push_back(std::move(l));
  }
  return m;
}

Model har_model(std::uint64_t seed) {
  Model m;
  m.layers.push_back(conv_layer(ConvSpec::conv1d(9, 16, 32, 6, 128), 16, true, mix_seed({seed, 0})));
  Model tail = dense_model({256, 125, 6}, mix_seed({seed, 1}));
  for (auto& l : tail.layers) m.layers.push_back(std::move(l));
  return m;
}

void expand_layer(LayerParams& layer, std::size_t cap_rows) {
  if (layer.kind != LayerKind::Conv1d) throw Error(ErrorCode::InvalidParams, "only conv layers expand");
  layer.expansion = plan_expansion(layer.conv, cap_rows);
  layer.copies.assign(layer.expansion->copies, layer.matmul.weights);
}

ModelForward model_forward(const Model& model, const Tensor& x, ForwardContext& ctx) {
  ModelForward out;
  Tensor h = x;
  float prev_output_scale = 0.0f;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const auto& l = model.layers[li];
    const float in_scale = li == 0 ? 0.0f : 4.0f * prev_output_scale;
    const std::size_t batch = h.dim(0);
    Tensor y;
    ForwardResult r;
    if (l.kind == LayerKind::Dense) {
      if (li == 0 && h.size() != batch * l.matmul.in) throw Error(ErrorCode::ShapeMismatch, "dense input");
      r = matmul_forward(h.reshape(Shape{batch, h.size() / batch}), l.matmul, ctx, in_scale);
      y = r.y;
    } else {
      const std::size_t keep = kept(l), cout = l.conv.out_channels;
      std::vector<float> flat(batch * cout * keep);
      if (!l.expansion) {
        r = matmul_forward(conv_rows(l, h), l.matmul, ctx, in_scale);
        const auto v = r.y.values<float>();
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t p = 0; p < keep; ++p) {
            for (std::size_t o = 0; o < cout; ++o) flat[(b * cout + o) * keep + p] = v[(b * keep + p) * cout + o];
          }
        }
      } else {
        const auto& plan = *l.expansion;
        const std::size_t runs = plan.runs(l.conv.positions());
        r = matmul_forward(expanded_rows(l, h), packed_layer(l), ctx, in_scale);
        const auto v = r.y.values<float>();
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t p = 0; p < keep; ++p) {
            const std::size_t run = b * runs + p / plan.copies, c = p % plan.copies;
            for (std::size_t o = 0; o < cout; ++o) {
              flat[(b * cout + o) * keep + p] = v[run * plan.packed_cols + c * cout + o];
            }
          }
        }
      }
      y = Tensor(Shape{batch, cout * keep}, std::move(flat));
    }
    prev_output_scale = r.state.quant.output_scale;
    out.caches.push_back(LayerCache{r.state, batch});
    h = l.relu ? relu(y) : y;
  }
  out.logits = h;
  return out;
}

void model_backward_step(Model& model, const ModelForward& forward, const Tensor& grad_logits, float lr) {
  Tensor grad = grad_logits;
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    auto& l = model.layers[li];
    const auto& cache = forward.caches.at(li);
    const std::size_t batch = cache.batch;
    // Output of the layer before the activation, in the [B, width] layout.
    std::vector<float> g(grad.values<float>().begin(), grad.values<float>().end());
    Tensor grad_x;
    if (l.kind == LayerKind::Dense) {
      if (l.relu) {
        const auto y = cache.state.y.values<float>();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = y[k] > 0.0f ? g[k] : 0.0f;
      }
      const auto gr = matmul_backward(Tensor(Shape{batch, l.matmul.out}, std::move(g)), cache.state, l.matmul);
      grad_x = gr.grad_x;
      const auto gw = gr.grad_w.values<float>();
      for (std::size_t k = 0; k < gw.size(); ++k) l.matmul.weights[k] -= lr * gw[k];
    } else {
      const std::size_t keep = kept(l), cout = l.conv.out_channels;
      const auto y = cache.state.y.values<float>();
      if (!l.expansion) {
        std::vector<float> gy(batch * keep * cout);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t p = 0; p < keep; ++p) {
            for (std::size_t o = 0; o < cout; ++o) {
              const std::size_t row = (b * keep + p) * cout + o;
              const float v = g[(b * cout + o) * keep + p];
              gy[row] = (!l.relu || y[row] > 0.0f) ? v : 0.0f;
            }
          }
        }
        const auto gr = matmul_backward(Tensor(Shape{batch * keep, cout}, std::move(gy)), cache.state, l.matmul);
        const auto gw = gr.grad_w.values<float>();
        for (std::size_t k = 0; k < gw.size(); ++k) l.matmul.weights[k] -= lr * gw[k];
        // Scatter receptive-field gradients back onto the input signal.
        const std::size_t cin = l.conv.in_channels, len = l.conv.extent[0], rows = l.conv.matrix_rows();
        const auto gX = gr.grad_x.values<float>();
        std::vector<float> gx(batch * cin * len, 0.0f);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t p = 0; p < keep; ++p) {
            for (std::size_t r = 0; r < rows; ++r) {
              const std::size_t c = r % cin, t = p * l.conv.stride[0] + r / cin;
              gx[(b * cin + c) * len + t] += gX[(b * keep + p) * rows + r];
            }
          }
        }
        grad_x = Tensor(Shape{batch, cin, len}, std::move(gx));
      } else {
        const auto& plan = *l.expansion;
        const std::size_t runs = plan.runs(l.conv.positions());
        std::vector<float> gy(batch * runs * plan.packed_cols, 0.0f);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t p = 0; p < keep; ++p) {
            const std::size_t run = b * runs + p / plan.copies, c = p % plan.copies;
            for (std::size_t o = 0; o < cout; ++o) {
              const std::size_t idx = run * plan.packed_cols + c * cout + o;
              const float v = g[(b * cout + o) * keep + p];
              gy[idx] = (!l.relu || y[idx] > 0.0f) ? v : 0.0f;
            }
          }
        }
        const DenseLayer packed = packed_layer(l);
        const auto gr = matmul_backward(Tensor(Shape{batch * runs, plan.packed_cols}, std::move(gy)), cache.state,
                                        packed);
        const auto gw = gr.grad_w.values<float>();
        for (std::size_t c = 0; c < plan.copies; ++c) {
          for (std::size_t i = 0; i < plan.block_rows; ++i) {
            for (std::size_t o = 0; o < cout; ++o) {
              l.copies[c][i * cout + o] -=
                  lr * gw[(c * plan.row_offset_per_copy + i) * plan.packed_cols + c * plan.col_offset_per_copy + o];
            }
          }
        }
        // Expanded layers are input layers; nothing flows further back.
        if (li != 0) throw Error(ErrorCode::InvalidParams, "expanded conv must be the first layer");
      }
    }
    grad = grad_x;
  }
}

Tensor softmax(const Tensor& logits) {
  const std::size_t batch = logits.dim(0), n = logits.size() / batch;
  const auto v = logits.values<float>();
  std::vector<float> out(v.size());
  for (std::size_t b = 0; b < batch; ++b) {
    float mx = v[b * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, v[b * n + j]);
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += out[b * n + j] = std::exp(v[b * n + j] - mx);
    for (std::size_t j = 0; j < n; ++j) out[b * n + j] = static_cast<float>(out[b * n + j] / sum);
  }
  return Tensor(logits.shape(), std::move(out));
}

}  // namespace anamac
