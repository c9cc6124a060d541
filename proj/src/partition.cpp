#include "anamac/partition.hpp"

#include <json.hpp>

#include "anamac/limits.hpp"

namespace anamac {
namespace {

std::vector<std::pair<std::size_t, std::size_t>> cut(std::size_t extent, std::size_t cap) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t b = 0; b < extent; b += cap) ranges.emplace_back(b, std::min(extent, b + cap));
  return ranges;
}

}  // namespace

std::size_t PartitionPlan::row_ranges() const {
  return row_groups.empty() ? 0 : row_groups.front().size();
}

std::vector<ArrayBinding> all_arrays(std::size_t chips) {
  std::vector<ArrayBinding> out;
  for (std::size_t c = 0; c < chips; ++c) {
    for (std::size_t a = 0; a < kArraysPerChip; ++a) out.push_back({c, a});
  }
  return out;
}

PartitionPlan partition_matmul(std::size_t n, std::size_t m, bool signed_weights,
                               std::span<const ArrayBinding> arrays) {
  if (arrays.empty()) throw Error(ErrorCode::NoArrays, "no synapse arrays available");
  if (n == 0 || m == 0) throw Error(ErrorCode::ShapeMismatch, "matmul dimensions must be >= 1");
  PartitionPlan plan;
  plan.n = n;
  plan.m = m;
  plan.signed_weights = signed_weights;
  const auto row_cuts = cut(n, row_capacity(signed_weights));
  const auto col_cuts = cut(m, kArrayCols);
  plan.row_groups.resize(col_cuts.size());
  std::vector<std::size_t> uses(arrays.size(), 0);
  for (const auto& [r0, r1] : row_cuts) {
    for (std::size_t s = 0; s < col_cuts.size(); ++s) {
      const auto slot = plan.tiles.size() % arrays.size();
      plan.row_groups[s].push_back(plan.tiles.size());
      plan.tiles.push_back(TileSpec{r0, r1, col_cuts[s].first, col_cuts[s].second, arrays[slot], uses[slot]++});
    }
  }
  for (std::size_t s = 0; s < col_cuts.size(); ++s) plan.col_order.push_back(s);
  return plan;
}

std::pair<std::size_t, std::size_t> allocation_counts(const PartitionPlan& plan) {
  const auto cap = row_capacity(plan.signed_weights);
  std::size_t full = 0;
  for (const auto& t : plan.tiles) {
    if (t.rows() == cap && t.cols() == kArrayCols) ++full;
  }
  return {full, plan.tiles.size() - full};
}

DependencyGraph build_graph(const PartitionPlan& plan, const Tensor& weights, const GraphOptions& options) {
  if (weights.dtype() != DType::i8) throw Error(ErrorCode::DTypeMismatch, "weights must be i8");
  if (weights.rank() != 2 || weights.dim(0) != plan.n || weights.dim(1) != plan.m) {
    throw Error(ErrorCode::ShapeMismatch, "weights " + shape_string(weights.shape()) + " do not match plan " +
                                              std::to_string(plan.n) + "x" + std::to_string(plan.m));
  }
  const auto w = weights.values<std::int8_t>();
  GraphBuilder builder;
  std::vector<VertexId> stores;
  for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
    const auto& tile = plan.tiles[t];
    std::vector<std::int8_t> block(tile.rows() * tile.cols());
    for (std::size_t i = 0; i < tile.rows(); ++i) {
      for (std::size_t j = 0; j < tile.cols(); ++j) {
        block[i * tile.cols() + j] = w[(tile.row_begin + i) * plan.m + tile.col_begin + j];
      }
    }
    MatrixPayload matrix;
    matrix.rows = tile.rows();
    matrix.cols = tile.cols();
    matrix.signed_weights = plan.signed_weights;
    matrix.weights = std::make_shared<const std::vector<std::int8_t>>(std::move(block));
    matrix.params = options.params;
    LoadPayload load{true, tile.row_begin, tile.row_end, plan.signed_weights};
    stores.push_back(builder.add_mac_instance(tile.binding, load, {}, std::move(matrix), t + 1));
  }

  std::vector<VertexId> stripes;
  for (auto s : plan.col_order) {
    const auto& group = plan.row_groups[s];
    if (group.size() == 1) {
      stripes.push_back(stores[group.front()]);
      continue;
    }
    std::vector<VertexId> summands;
    for (auto t : group) summands.push_back(stores[t]);
    stripes.push_back(builder.add_vertex(VertexKind::Add, AddPayload{options.digital_min, options.digital_max},
                                         std::move(summands)));
  }
  VertexId result = stripes.front();
  if (stripes.size() > 1) result = builder.add_vertex(VertexKind::Concat, ConcatPayload{1}, stripes);
  builder.add_vertex(VertexKind::ExternalStore, std::monostate{}, {result});
  return builder.finish();
}

std::string plan_to_json(const PartitionPlan& plan, int indent) {
  using nlohmann::json;
  json tiles = json::array();
  for (const auto& t : plan.tiles) {
    tiles.push_back({{"rows", {t.row_begin, t.row_end}},
                     {"cols", {t.col_begin, t.col_end}},
                     {"chip", t.binding.chip},
                     {"array", t.binding.array},
                     {"sequence_index", t.sequence_index}});
  }
  const auto [full, partial] = allocation_counts(plan);
  json root{{"n", plan.n},
            {"m", plan.m},
            {"signed", plan.signed_weights},
            {"tiles", std::move(tiles)},
            {"row_groups", plan.row_groups},
            {"col_order", plan.col_order},
            {"full_tiles", full},
            {"partial_tiles", partial}};
  return root.dump(indent);
}

}  // namespace anamac
