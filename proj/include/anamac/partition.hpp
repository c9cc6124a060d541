#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anamac/graph.hpp"
#include "anamac/tensor.hpp"

namespace anamac {

/// Rectangular piece of an N x M weight matrix placed on one array.
struct TileSpec {
  std::size_t row_begin = 0;
  std::size_t row_end = 0;
  std::size_t col_begin = 0;
  std::size_t col_end = 0;
  ArrayBinding binding;
  std::size_t sequence_index = 0;  // earlier tiles on the same array

  std::size_t rows() const { return row_end - row_begin; }
  std::size_t cols() const { return col_end - col_begin; }
  bool operator==(const TileSpec&) const = default;
};

struct PartitionPlan {
  std::size_t n = 0;
  std::size_t m = 0;
  bool signed_weights = false;
  std::vector<TileSpec> tiles;                       // row-major over (row range, column stripe)
  std::vector<std::vector<std::size_t>> row_groups;  // per stripe: tile indices summed digitally
  std::vector<std::size_t> col_order;                // stripe concatenation order

  std::size_t row_ranges() const;
  std::size_t col_stripes() const { return row_groups.size(); }
};

/// Every array of `chips` chips in (chip, array) order.
std::vector<ArrayBinding> all_arrays(std::size_t chips);

/// Cuts rows into ceil(N / cap) maximal ranges (cap 128 signed, 256 unsigned)
/// and columns into ceil(M / 256); tiles are bound to `arrays` round-robin.
PartitionPlan partition_matmul(std::size_t n, std::size_t m, bool signed_weights,
                               std::span<const ArrayBinding> arrays);

/// (tiles filling an array exactly, tiles that do not)
std::pair<std::size_t, std::size_t> allocation_counts(const PartitionPlan& plan);

struct GraphOptions {
  std::int32_t digital_min = kOutputMin;
  std::int32_t digital_max = kOutputMax;
  HwParams params;
};

/// One execution instance per tile, digital Add over each stripe's row
/// group, Concat over stripes, and a final ExternalStore. `weights` is the
/// quantized i8 [N, M] matrix; the batch is supplied at execution time.
DependencyGraph build_graph(const PartitionPlan& plan, const Tensor& weights,
                            const GraphOptions& options = {});

std::string plan_to_json(const PartitionPlan& plan, int indent = 2);

}  // namespace anamac
