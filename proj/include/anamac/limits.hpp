#pragma once

#include <cstddef>
#include <cstdint>

namespace anamac {

// Value ranges of the analog multiply-accumulate path.
inline constexpr int kInputMin = 0;
inline constexpr int kInputMax = 31;      // 5-bit unsigned inputs
inline constexpr int kWeightMax = 63;     // 6-bit magnitude, optional sign
inline constexpr int kOutputMin = -128;   // 8-bit signed readout
inline constexpr int kOutputMax = 127;

// Physical geometry of one synapse array.
inline constexpr std::size_t kArrayRows = 256;
inline constexpr std::size_t kArrayCols = 256;
inline constexpr std::size_t kArraysPerChip = 2;

/// Logical rows usable per array: signed weights occupy an
/// excitatory/inhibitory row pair each.
constexpr std::size_t row_capacity(bool signed_weights) {
  return signed_weights ? kArrayRows / 2 : kArrayRows;
}

}  // namespace anamac
