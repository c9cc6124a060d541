#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "anamac/limits.hpp"
#include "anamac/rng.hpp"

namespace anamac {

class KeyValueConfig;

enum class HwVersion { V1, V2 };

/// Per-layer hardware hyperparameters. num_sends repeats every input event
/// (noise averages as 1/sqrt(n)); wait_between_events only affects timing.
struct HwParams {
  std::uint32_t num_sends = 1;
  std::uint32_t wait_between_events = 1;

  void validate() const;
  bool operator==(const HwParams&) const = default;
};

/// Noise and gain parameters of one simulated chip. With every sigma at zero
/// the MAC reduces to clamp(round(gain * sum x_i w_ij), -128, 127).
struct ChipConfig {
  std::uint64_t chip_seed = 1;
  float sigma_fixed = 0.02f;     // std of the per-synapse multiplicative gain around 1
  float sigma_offset = 1.0f;     // std of the per-neuron additive offset, output LSB
  float sigma_temporal = 2.0f;   // std of per-run noise at num_sends = 1, output LSB
  float gain = 1.0f / 64.0f;     // integer product -> output LSB
  HwVersion hw_version = HwVersion::V2;

  void validate() const;

  static ChipConfig from_config(const KeyValueConfig& kv);
  static ChipConfig load(const std::filesystem::path& path);
  /// chip_default.cfg from the shipped config directory.
  static ChipConfig defaults();
  /// All noise disabled; gain as given.
  static ChipConfig noiseless(float gain = 1.0f);
};

enum class RowMode : std::uint8_t { excitatory, inhibitory };

/// Weight block laid out for a physical array: 256x256 magnitudes (row-major)
/// plus the sign mode of each physical row.
struct PhysicalWeights {
  std::vector<std::int8_t> weights = std::vector<std::int8_t>(kArrayRows * kArrayCols, 0);
  std::array<RowMode, kArrayRows> modes{};
};

/// One 256x256 synapse array with its fixed-pattern deviations. The
/// deviations are a pure function of (chip_seed, array_index).
class SynapseArray {
 public:
  SynapseArray(const ChipConfig& cfg, std::size_t array_index);

  /// Replaces the whole array content. Unused synapses must be zero.
  void configure(std::span<const std::int8_t> weights, std::span<const RowMode> modes = {});
  void configure(const PhysicalWeights& block) { configure(block.weights, block.modes); }

  std::span<const std::int8_t> weights() const { return weights_; }
  std::span<const RowMode> row_modes() const { return modes_; }
  std::span<const float> fixed_gain() const { return fixed_gain_; }
  std::span<const float> neuron_offset() const { return neuron_offset_; }
  std::size_t index() const { return index_; }

  float gain() const { return gain_; }
  void set_gain(float gain) { gain_ = gain; }

 private:
  std::size_t index_;
  float gain_;
  bool unit_gain_;
  std::vector<std::int8_t> weights_;
  std::array<RowMode, kArrayRows> modes_{};
  std::vector<float> fixed_gain_;
  std::vector<float> neuron_offset_;

  friend void analog_mac(const SynapseArray&, std::span<const std::uint8_t>, const HwParams&,
                         const ChipConfig&, NormalStream&, std::span<std::int8_t>,
                         std::size_t, std::span<float>);
};

/// One analog vector-matrix multiplication. Writes the first `active_cols`
/// digitized outputs (the rest are zeroed); temporal noise is drawn only for
/// active columns. `membrane`, if non-empty, receives the pre-digitization
/// values.
void analog_mac(const SynapseArray& array, std::span<const std::uint8_t> x,
                const HwParams& params, const ChipConfig& cfg, NormalStream& rng,
                std::span<std::int8_t> out, std::size_t active_cols = kArrayCols,
                std::span<float> membrane = {});

std::array<std::int8_t, kArrayCols> analog_mac(const SynapseArray& array,
                                               std::span<const std::uint8_t> x,
                                               const HwParams& params, const ChipConfig& cfg,
                                               NormalStream& rng);

/// Maps a signed block (rows <= 128, cols <= 256, row-major) onto physical
/// row pairs: row 2i holds max(w,0) excitatory, row 2i+1 holds max(-w,0)
/// inhibitory. Unused area stays zero.
PhysicalWeights signed_row_pairs(std::span<const std::int8_t> weights, std::size_t rows,
                                 std::size_t cols);

/// Places an unsigned block (rows <= 256) into the top-left of the array.
PhysicalWeights unsigned_block(std::span<const std::int8_t> weights, std::size_t rows,
                               std::size_t cols);

/// Physical input vector for a logical slice; duplicated per row pair when
/// `paired` is set.
void place_inputs(std::span<const std::uint8_t> logical, bool paired,
                  std::span<std::uint8_t> physical);

}  // namespace anamac
