#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "anamac/chip.hpp"
#include "anamac/error.hpp"

namespace anamac {

using VertexId = std::uint64_t;
using InstanceId = std::uint64_t;

enum class VertexKind {
  ExternalLoad,
  SynapseMatrix,
  Neurons,
  Digitize,
  Store,
  ExternalStore,
  Add,
  Concat,
};

std::string_view to_string(VertexKind kind);
VertexKind vertex_kind_from_string(std::string_view name);

/// On-chip kinds live inside an execution instance; Add, Concat and
/// ExternalStore run on the host.
bool is_on_chip(VertexKind kind);

/// Input of an instance: either a column slice of the graph input matrix or
/// the concatenation of upstream host values (clamped into the input range).
struct LoadPayload {
  bool from_graph_input = true;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool paired = false;  // duplicate every value onto an excitatory/inhibitory row pair

  bool operator==(const LoadPayload&) const = default;
};

/// Logical weight block (rows x cols, row-major) bound to one array.
struct MatrixPayload {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool signed_weights = true;
  std::shared_ptr<const std::vector<std::int8_t>> weights;
  HwParams params;

  /// Layout on the physical 256x256 array.
  PhysicalWeights physical() const;
  bool operator==(const MatrixPayload& other) const;
};

/// Saturating i32 sum, clamped to [clamp_min, clamp_max].
struct AddPayload {
  std::int32_t clamp_min = kOutputMin;
  std::int32_t clamp_max = kOutputMax;
  bool operator==(const AddPayload&) const = default;
};

/// Concatenation along the feature axis of [batch, width] values.
struct ConcatPayload {
  std::size_t axis = 1;
  bool operator==(const ConcatPayload&) const = default;
};

using Payload = std::variant<std::monostate, LoadPayload, MatrixPayload, AddPayload, ConcatPayload>;

struct Vertex {
  VertexId id = 0;
  VertexKind kind = VertexKind::ExternalLoad;
  Payload payload;
  std::vector<VertexId> inputs;
  std::optional<InstanceId> instance;

  bool operator==(const Vertex&) const = default;
};

struct ArrayBinding {
  std::size_t chip = 0;
  std::size_t array = 0;
  auto operator<=>(const ArrayBinding&) const = default;
};

/// One statically configured chip run.
struct ExecutionInstance {
  InstanceId id = 0;
  std::vector<VertexId> vertices;  // in insertion order
  ArrayBinding binding;

  bool operator==(const ExecutionInstance&) const = default;
};

enum class EdgeKind { analog, digital };

/// Execution instances plus host-side recombination vertices.
class DependencyGraph {
 public:
  /// Unchecked insertion, used by deserialization; run validate() afterwards.
  void insert_vertex(Vertex v);
  void insert_instance(ExecutionInstance inst);

  const std::map<VertexId, Vertex>& vertices() const { return vertices_; }
  const std::map<InstanceId, ExecutionInstance>& instances() const { return instances_; }
  const Vertex& vertex(VertexId id) const;
  const ExecutionInstance& instance(InstanceId id) const;
  bool empty() const { return vertices_.empty(); }

  /// Vertex of the given kind inside an instance, if present exactly once.
  std::optional<VertexId> find_in_instance(InstanceId id, VertexKind kind) const;
  std::vector<VertexId> external_stores() const;

  /// Producer -> consumer pairs between instances, traced through host vertices.
  std::vector<std::pair<InstanceId, InstanceId>> instance_edges() const;

  EdgeKind edge_kind(VertexId from, VertexId to) const;

  bool operator==(const DependencyGraph&) const = default;

 private:
  friend class GraphBuilder;

  std::map<VertexId, Vertex> vertices_;
  std::map<InstanceId, ExecutionInstance> instances_;
};

struct Violation {
  ErrorCode code;
  std::string message;
};

/// Full list of structural problems; empty for a valid graph.
std::vector<Violation> validate(const DependencyGraph& graph);
/// Throws the first violation as an Error.
void require_valid(const DependencyGraph& graph);

/// Kahn's algorithm, ties broken by ascending id. Throws CycleDetected.
std::vector<InstanceId> topo_order(const std::vector<InstanceId>& nodes,
                                   const std::vector<std::pair<InstanceId, InstanceId>>& edges);
std::vector<InstanceId> topo_schedule(const DependencyGraph& graph);
/// Vertex-level topological order, ties by id.
std::vector<VertexId> vertex_order(const DependencyGraph& graph);

/// Output width of every vertex, where it can be inferred.
std::map<VertexId, std::size_t> infer_widths(const DependencyGraph& graph,
                                             std::vector<Violation>* problems = nullptr);

/// Static-single-assignment builder: every vertex id is written once and
/// only previously defined vertices may be used as inputs.
class GraphBuilder {
 public:
  InstanceId begin_instance(ArrayBinding binding, std::optional<InstanceId> id = std::nullopt);
  void end_instance();

  VertexId add_vertex(VertexKind kind, Payload payload, std::vector<VertexId> inputs = {});
  VertexId add_vertex_with_id(VertexId id, VertexKind kind, Payload payload,
                              std::vector<VertexId> inputs = {});

  /// ExternalLoad -> SynapseMatrix -> Neurons -> Digitize -> Store in a fresh
  /// instance; returns the Store vertex.
  VertexId add_mac_instance(ArrayBinding binding, LoadPayload load, std::vector<VertexId> load_inputs,
                            MatrixPayload matrix, std::optional<InstanceId> id = std::nullopt);

  const DependencyGraph& peek() const { return graph_; }
  /// Validates and hands out the graph.
  DependencyGraph finish();

 private:
  DependencyGraph graph_;
  std::optional<InstanceId> open_;
  VertexId next_vertex_ = 1;
  InstanceId next_instance_ = 1;
};

std::string to_json(const DependencyGraph& graph, int indent = -1);
DependencyGraph graph_from_json(const std::string& text);

}  // namespace anamac
