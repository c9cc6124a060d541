#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "anamac/tensor.hpp"

namespace anamac {

/// Samples with integer class labels in [0, classes).
struct Dataset {
  Tensor x;  // f32 [samples, ...]
  std::vector<int> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  /// Rows `idx` of x and labels.
  Dataset subset(const std::vector<std::size_t>& idx) const;
};

inline constexpr std::size_t kHarChannels = 9;
inline constexpr std::size_t kHarLength = 128;
inline constexpr std::size_t kHarClasses = 6;

/// Signal files of the "Inertial Signals" directories, in channel order.
const std::array<const char*, kHarChannels>& har_signal_names();

struct HarDataset {
  Dataset train;  // x: [samples, 9, 128]
  Dataset test;
};

/// Reads `{train,test}/Inertial Signals/<signal>_{split}.txt` and
/// `{split}/y_{split}.txt`. File labels 1..6 become 0..5.
HarDataset load_har(const std::filesystem::path& dir);

/// Per-channel affine map of mean +- 3 std (taken from `reference`) onto
/// [0, 1], clamped; applied to both datasets in place.
void normalize_channels(Dataset& reference, Dataset& other);

/// Appends a copy of every sample shifted left by `shift` steps (zero fill),
/// so expanded conv copies see each stride phase.
Dataset augment_stride_shift(const Dataset& data, std::size_t shift);

}  // namespace anamac
