#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "anamac/lowering.hpp"
#include "anamac/matmul.hpp"

namespace anamac {

enum class LayerKind { Dense, Conv1d };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

/// One trainable layer. A Conv1d layer keeps its unrolled kernel matrix
/// ([k C_in, C_out], row = tap * C_in + channel) in `matmul`; with an
/// expansion plan every copy has its own matrix in `copies` instead.
struct LayerParams {
  LayerKind kind = LayerKind::Dense;
  DenseLayer matmul;
  ConvSpec conv;
  std::size_t keep_positions = 0;  // Conv1d: leading output positions kept, 0 keeps all
  bool relu = true;
  std::optional<ExpansionPlan> expansion;
  std::vector<std::vector<float>> copies;

  std::size_t positions() const;
  std::size_t output_width() const;
};

struct Model {
  std::vector<LayerParams> layers;

  std::size_t classes() const { return layers.back().output_width(); }
};

/// Conv1d 9->16 (k 32, s 6, 16 of 17 positions kept) + ReLU, Linear 256->125
/// + ReLU, Linear 125->6, no biases.
Model har_model(std::uint64_t seed);
/// Fully connected stack; ReLU on every layer but the last.
Model dense_model(const std::vector<std::size_t>& widths, std::uint64_t seed);
/// Conv1d layer with uniform He-style initialization.
LayerParams conv_layer(const ConvSpec& spec, std::size_t keep_positions, bool relu, std::uint64_t seed);
/// Turns a Conv1d layer into P independent copies of its current kernel.
void expand_layer(LayerParams& layer, std::size_t cap_rows);

struct LayerCache {
  SavedState state;
  std::size_t batch = 0;
};

struct ModelForward {
  Tensor logits;  // [B, classes]
  std::vector<LayerCache> caches;
};

/// Runs every layer through the chosen backend. Inputs of layer l > 0 are
/// quantized with scale 4 * output_scale(l - 1).
ModelForward model_forward(const Model& model, const Tensor& x, ForwardContext& ctx);

/// Backward pass from dLoss/dlogits followed by one SGD step.
void model_backward_step(Model& model, const ModelForward& forward, const Tensor& grad_logits, float lr);

/// Softmax over the last axis.
Tensor softmax(const Tensor& logits);

}  // namespace anamac
