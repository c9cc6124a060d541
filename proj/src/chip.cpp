#include "anamac/chip.hpp"

#include <algorithm>
#include <cmath>

#include "anamac/config.hpp"
#include "anamac/error.hpp"

namespace anamac {
namespace {

constexpr std::uint64_t kFixedGainTag = 0x6761696e;
constexpr std::uint64_t kOffsetTag = 0x6f666673;

void check_weight_range(std::span<const std::int8_t> weights) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > kWeightMax || weights[i] < -kWeightMax) {
      throw Error(ErrorCode::WeightOutOfRange,
                  "weight " + std::to_string(int(weights[i])) + " at index " + std::to_string(i));
    }
  }
}

}  // namespace

void HwParams::validate() const {
  if (num_sends < 1 || wait_between_events < 1) {
    throw Error(ErrorCode::InvalidParams, "num_sends and wait_between_events must be >= 1");
  }
}

void ChipConfig::validate() const {
  if (!(sigma_fixed >= 0) || !(sigma_offset >= 0) || !(sigma_temporal >= 0)) {
    throw Error(ErrorCode::InvalidParams, "noise sigmas must be >= 0");
  }
  if (!(gain > 0) || !std::isfinite(gain)) {
    throw Error(ErrorCode::InvalidParams, "gain must be finite and > 0");
  }
}

ChipConfig ChipConfig::from_config(const KeyValueConfig& kv) {
  ChipConfig c;
  c.chip_seed = kv.get_u64("chip_seed", c.chip_seed);
  c.sigma_fixed = static_cast<float>(kv.get_double("sigma_fixed", c.sigma_fixed));
  c.sigma_offset = static_cast<float>(kv.get_double("sigma_offset", c.sigma_offset));
  c.sigma_temporal = static_cast<float>(kv.get_double("sigma_temporal", c.sigma_temporal));
  c.gain = static_cast<float>(kv.get_double("gain", c.gain));
  const auto version = kv.get_string("hw_version", "v2");
  if (version == "v1") {
    c.hw_version = HwVersion::V1;
  } else if (version == "v2") {
    c.hw_version = HwVersion::V2;
  } else {
    throw Error(ErrorCode::ParseError, "hw_version must be v1 or v2, got " + version);
  }
  c.validate();
  return c;
}

ChipConfig ChipConfig::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path));
}

ChipConfig ChipConfig::defaults() {
  return load(default_config_dir() / "chip_default.cfg");
}

ChipConfig ChipConfig::noiseless(float gain) {
  ChipConfig c;
  c.sigma_fixed = 0.0f;
  c.sigma_offset = 0.0f;
  c.sigma_temporal = 0.0f;
  c.gain = gain;
  return c;
}

SynapseArray::SynapseArray(const ChipConfig& cfg, std::size_t array_index)
    : index_(array_index),
      gain_(cfg.gain),
      unit_gain_(cfg.sigma_fixed == 0.0f),
      weights_(kArrayRows * kArrayCols, 0),
      fixed_gain_(kArrayRows * kArrayCols, 1.0f),
      neuron_offset_(kArrayCols, 0.0f) {
  cfg.validate();
  modes_.fill(RowMode::excitatory);
  if (cfg.sigma_fixed > 0.0f) {
    NormalStream rng(mix_seed({cfg.chip_seed, array_index, kFixedGainTag}));
    for (auto& g : fixed_gain_) g = static_cast<float>(1.0 + cfg.sigma_fixed * rng.next());
  }
  if (cfg.sigma_offset > 0.0f) {
    NormalStream rng(mix_seed({cfg.chip_seed, array_index, kOffsetTag}));
    for (auto& o : neuron_offset_) o = static_cast<float>(cfg.sigma_offset * rng.next());
  }
}

void SynapseArray::configure(std::span<const std::int8_t> weights, std::span<const RowMode> modes) {
  if (weights.size() != kArrayRows * kArrayCols) {
    throw Error(ErrorCode::ShapeMismatch, "array configuration needs 256x256 weights");
  }
  if (!modes.empty() && modes.size() != kArrayRows) {
    throw Error(ErrorCode::ShapeMismatch, "row modes need 256 entries");
  }
  check_weight_range(weights);
  std::copy(weights.begin(), weights.end(), weights_.begin());
  if (modes.empty()) {
    modes_.fill(RowMode::excitatory);
  } else {
    std::copy(modes.begin(), modes.end(), modes_.begin());
  }
}

void analog_mac(const SynapseArray& array, std::span<const std::uint8_t> x, const HwParams& params,
                const ChipConfig& cfg, NormalStream& rng, std::span<std::int8_t> out,
                std::size_t active_cols, std::span<float> membrane) {
  if (x.size() != kArrayRows) throw Error(ErrorCode::ShapeMismatch, "MAC input needs 256 entries");
  if (out.size() != kArrayCols) throw Error(ErrorCode::ShapeMismatch, "MAC output needs 256 entries");
  if (active_cols > kArrayCols) throw Error(ErrorCode::ShapeMismatch, "active columns > 256");
  if (!membrane.empty() && membrane.size() != kArrayCols) {
    throw Error(ErrorCode::ShapeMismatch, "membrane buffer needs 256 entries");
  }
  params.validate();
  for (auto v : x) {
    if (v > kInputMax) throw Error(ErrorCode::InputOutOfRange, "input " + std::to_string(v) + " > 31");
  }

  std::array<double, kArrayCols> acc{};
  if (array.unit_gain_) {
    std::array<std::int32_t, kArrayCols> iacc{};
    for (std::size_t i = 0; i < kArrayRows; ++i) {
      if (x[i] == 0) continue;
      const int s = array.modes_[i] == RowMode::inhibitory ? -int(x[i]) : int(x[i]);
      const std::int8_t* row = array.weights_.data() + i * kArrayCols;
      for (std::size_t j = 0; j < active_cols; ++j) iacc[j] += s * row[j];
    }
    for (std::size_t j = 0; j < active_cols; ++j) acc[j] = iacc[j];
  } else {
    for (std::size_t i = 0; i < kArrayRows; ++i) {
      if (x[i] == 0) continue;
      const double s = array.modes_[i] == RowMode::inhibitory ? -double(x[i]) : double(x[i]);
      const std::int8_t* row = array.weights_.data() + i * kArrayCols;
      const float* g = array.fixed_gain_.data() + i * kArrayCols;
      for (std::size_t j = 0; j < active_cols; ++j) acc[j] += s * row[j] * g[j];
    }
  }

  const double sigma = cfg.sigma_temporal / std::sqrt(static_cast<double>(params.num_sends));
  const double gain = array.gain_;
  for (std::size_t j = 0; j < active_cols; ++j) {
    double v = gain * acc[j] + array.neuron_offset_[j];
    if (sigma > 0.0) v += sigma * rng.next();
    if (!membrane.empty()) membrane[j] = static_cast<float>(v);
    out[j] = static_cast<std::int8_t>(std::clamp(std::round(v), double(kOutputMin), double(kOutputMax)));
  }
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(active_cols), out.end(), std::int8_t{0});
  if (!membrane.empty()) {
    std::fill(membrane.begin() + static_cast<std::ptrdiff_t>(active_cols), membrane.end(), 0.0f);
  }
}

std::array<std::int8_t, kArrayCols> analog_mac(const SynapseArray& array,
                                               std::span<const std::uint8_t> x,
                                               const HwParams& params, const ChipConfig& cfg,
                                               NormalStream& rng) {
  std::array<std::int8_t, kArrayCols> out{};
  analog_mac(array, x, params, cfg, rng, out);
  return out;
}

PhysicalWeights signed_row_pairs(std::span<const std::int8_t> weights, std::size_t rows,
                                 std::size_t cols) {
  if (rows > kArrayRows / 2 || cols > kArrayCols || weights.size() != rows * cols) {
    throw Error(ErrorCode::ShapeMismatch, "signed block must be at most 128x256");
  }
  check_weight_range(weights);
  PhysicalWeights out;
  for (std::size_t p = 0; p < kArrayRows; ++p) {
    out.modes[p] = (p % 2 == 0) ? RowMode::excitatory : RowMode::inhibitory;
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::int8_t w = weights[i * cols + j];
      out.weights[(2 * i) * kArrayCols + j] = w > 0 ? w : std::int8_t{0};
      out.weights[(2 * i + 1) * kArrayCols + j] = w < 0 ? static_cast<std::int8_t>(-w) : std::int8_t{0};
    }
  }
  return out;
}

PhysicalWeights unsigned_block(std::span<const std::int8_t> weights, std::size_t rows,
                               std::size_t cols) {
  if (rows > kArrayRows || cols > kArrayCols || weights.size() != rows * cols) {
    throw Error(ErrorCode::ShapeMismatch, "unsigned block must be at most 256x256");
  }
  PhysicalWeights out;
  out.modes.fill(RowMode::excitatory);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::int8_t w = weights[i * cols + j];
      if (w < 0 || w > kWeightMax) {
        throw Error(ErrorCode::WeightOutOfRange, "unsigned weight " + std::to_string(int(w)));
      }
      out.weights[i * kArrayCols + j] = w;
    }
  }
  return out;
}

void place_inputs(std::span<const std::uint8_t> logical, bool paired, std::span<std::uint8_t> physical) {
  const std::size_t need = paired ? 2 * logical.size() : logical.size();
  if (physical.size() != kArrayRows || need > kArrayRows) {
    throw Error(ErrorCode::ShapeMismatch, "input slice does not fit the array");
  }
  std::fill(physical.begin(), physical.end(), std::uint8_t{0});
  for (std::size_t i = 0; i < logical.size(); ++i) {
    if (paired) {
      physical[2 * i] = logical[i];
      physical[2 * i + 1] = logical[i];
    } else {
      physical[i] = logical[i];
    }
  }
}

}  // namespace anamac
