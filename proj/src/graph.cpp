#include "anamac/graph.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

#include "anamac/limits.hpp"

namespace anamac {
namespace {

bool host_value_kind(VertexKind k) {
  return k == VertexKind::Store || k == VertexKind::Add || k == VertexKind::Concat;
}

/// Checks payload presence/type for a kind.
std::optional<std::string> payload_problem(VertexKind kind, const Payload& payload) {
  bool ok = false;
  switch (kind) {
    case VertexKind::ExternalLoad: ok = std::holds_alternative<LoadPayload>(payload); break;
    case VertexKind::SynapseMatrix: ok = std::holds_alternative<MatrixPayload>(payload); break;
    case VertexKind::Add: ok = std::holds_alternative<AddPayload>(payload); break;
    case VertexKind::Concat: ok = std::holds_alternative<ConcatPayload>(payload); break;
    default: ok = std::holds_alternative<std::monostate>(payload); break;
  }
  if (ok) return std::nullopt;
  return std::string(to_string(kind)) + " vertex carries the wrong payload";
}

/// Checks the kinds of a vertex's inputs.
std::optional<std::string> input_problem(VertexKind kind, const Payload& payload,
                                         const std::vector<VertexKind>& inputs) {
  const auto name = std::string(to_string(kind));
  auto exactly_one = [&](VertexKind expected) -> std::optional<std::string> {
    if (inputs.size() == 1 && inputs[0] == expected) return std::nullopt;
    return name + " must be fed by exactly one " + std::string(to_string(expected));
  };
  auto all_host_values = [&](std::size_t min_count) -> std::optional<std::string> {
    if (inputs.size() < min_count) {
      return name + " needs at least " + std::to_string(min_count) + " inputs";
    }
    for (auto k : inputs) {
      if (!host_value_kind(k)) return name + " cannot consume " + std::string(to_string(k));
    }
    return std::nullopt;
  };
  switch (kind) {
    case VertexKind::ExternalLoad: {
      const auto* load = std::get_if<LoadPayload>(&payload);
      if (load != nullptr && load->from_graph_input) {
        if (!inputs.empty()) return name + " reading the graph input takes no vertex inputs";
        return std::nullopt;
      }
      return all_host_values(1);
    }
    case VertexKind::SynapseMatrix: return exactly_one(VertexKind::ExternalLoad);
    case VertexKind::Neurons: return exactly_one(VertexKind::SynapseMatrix);
    case VertexKind::Digitize: return exactly_one(VertexKind::Neurons);
    case VertexKind::Store: return exactly_one(VertexKind::Digitize);
    case VertexKind::ExternalStore:
      if (inputs.size() != 1) return name + " takes exactly one input";
      return all_host_values(1);
    case VertexKind::Add: return all_host_values(2);
    case VertexKind::Concat: return all_host_values(1);
  }
  return std::nullopt;
}

constexpr std::array<VertexKind, 5> kInstanceChain{VertexKind::ExternalLoad, VertexKind::SynapseMatrix,
                                                   VertexKind::Neurons, VertexKind::Digitize,
                                                   VertexKind::Store};

}  // namespace

std::string_view to_string(VertexKind kind) {
  switch (kind) {
    case VertexKind::ExternalLoad: return "ExternalLoad";
    case VertexKind::SynapseMatrix: return "SynapseMatrix";
    case VertexKind::Neurons: return "Neurons";
    case VertexKind::Digitize: return "Digitize";
    case VertexKind::Store: return "Store";
    case VertexKind::ExternalStore: return "ExternalStore";
    case VertexKind::Add: return "Add";
    case VertexKind::Concat: return "Concat";
  }
  return "?";
}

VertexKind vertex_kind_from_string(std::string_view name) {
  for (auto k : {VertexKind::ExternalLoad, VertexKind::SynapseMatrix, VertexKind::Neurons,
                 VertexKind::Digitize, VertexKind::Store, VertexKind::ExternalStore, VertexKind::Add,
                 VertexKind::Concat}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::ParseError, "unknown vertex kind " + std::string(name));
}

bool is_on_chip(VertexKind kind) {
  return std::find(kInstanceChain.begin(), kInstanceChain.end(), kind) != kInstanceChain.end();
}

PhysicalWeights MatrixPayload::physical() const {
  if (!weights) throw Error(ErrorCode::ShapeMismatch, "matrix payload without weights");
  return signed_weights ? signed_row_pairs(*weights, rows, cols) : unsigned_block(*weights, rows, cols);
}

bool MatrixPayload::operator==(const MatrixPayload& other) const {
  const bool same_weights = (weights == other.weights) ||
                            (weights && other.weights && *weights == *other.weights);
  return rows == other.rows && cols == other.cols && signed_weights == other.signed_weights &&
         params == other.params && same_weights;
}

void DependencyGraph::insert_vertex(Vertex v) {
  const auto id = v.id;
  if (!vertices_.emplace(id, std::move(v)).second) {
    throw Error(ErrorCode::DoubleAssignment, "vertex " + std::to_string(id) + " assigned twice");
  }
}

void DependencyGraph::insert_instance(ExecutionInstance inst) {
  const auto id = inst.id;
  if (!instances_.emplace(id, std::move(inst)).second) {
    throw Error(ErrorCode::DoubleAssignment, "instance " + std::to_string(id) + " assigned twice");
  }
}

const Vertex& DependencyGraph::vertex(VertexId id) const {
  auto it = vertices_.find(id);
  if (it == vertices_.end()) throw Error(ErrorCode::UseBeforeDef, "vertex " + std::to_string(id));
  return it->second;
}

const ExecutionInstance& DependencyGraph::instance(InstanceId id) const {
  auto it = instances_.find(id);
  if (it == instances_.end()) throw Error(ErrorCode::UseBeforeDef, "instance " + std::to_string(id));
  return it->second;
}

std::optional<VertexId> DependencyGraph::find_in_instance(InstanceId id, VertexKind kind) const {
  std::optional<VertexId> found;
  for (auto vid : instance(id).vertices) {
    auto it = vertices_.find(vid);
    if (it != vertices_.end() && it->second.kind == kind) {
      if (found) return std::nullopt;
      found = vid;
    }
  }
  return found;
}

std::vector<VertexId> DependencyGraph::external_stores() const {
  std::vector<VertexId> out;
  for (const auto& [id, v] : vertices_) {
    if (v.kind == VertexKind::ExternalStore) out.push_back(id);
  }
  return out;
}

std::vector<std::pair<InstanceId, InstanceId>> DependencyGraph::instance_edges() const {
  std::set<std::pair<InstanceId, InstanceId>> edges;
  for (const auto& [iid, inst] : instances_) {
    for (auto vid : inst.vertices) {
      auto it = vertices_.find(vid);
      if (it == vertices_.end() || it->second.kind != VertexKind::ExternalLoad) continue;
      std::vector<VertexId> stack(it->second.inputs.begin(), it->second.inputs.end());
      std::set<VertexId> seen;
      while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        if (!seen.insert(u).second) continue;
        auto ut = vertices_.find(u);
        if (ut == vertices_.end()) continue;
        if (ut->second.instance) {
          edges.emplace(*ut->second.instance, iid);
        } else {
          stack.insert(stack.end(), ut->second.inputs.begin(), ut->second.inputs.end());
        }
      }
    }
  }
  return {edges.begin(), edges.end()};
}

EdgeKind DependencyGraph::edge_kind(VertexId from, VertexId to) const {
  const auto& a = vertex(from);
  const auto& b = vertex(to);
  if (a.instance && b.instance && *a.instance == *b.instance) return EdgeKind::analog;
  return EdgeKind::digital;
}

std::vector<InstanceId> topo_order(const std::vector<InstanceId>& nodes,
                                   const std::vector<std::pair<InstanceId, InstanceId>>& edges) {
  std::map<InstanceId, std::size_t> indegree;
  std::map<InstanceId, std::vector<InstanceId>> succ;
  for (auto n : nodes) indegree.emplace(n, 0);
  for (const auto& [a, b] : edges) {
    if (!indegree.contains(a) || !indegree.contains(b)) {
      throw Error(ErrorCode::UseBeforeDef, "edge references unknown node");
    }
    succ[a].push_back(b);
    ++indegree[b];
  }
  std::priority_queue<InstanceId, std::vector<InstanceId>, std::greater<>> ready;
  for (const auto& [n, d] : indegree) {
    if (d == 0) ready.push(n);
  }
  std::vector<InstanceId> order;
  order.reserve(indegree.size());
  while (!ready.empty()) {
    const auto n = ready.top();
    ready.pop();
    order.push_back(n);
    for (auto s : succ[n]) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
  if (order.size() != indegree.size()) {
    throw Error(ErrorCode::CycleDetected, "dependency graph contains a cycle");
  }
  return order;
}

std::vector<InstanceId> topo_schedule(const DependencyGraph& graph) {
  std::vector<InstanceId> nodes;
  for (const auto& [id, inst] : graph.instances()) nodes.push_back(id);
  return topo_order(nodes, graph.instance_edges());
}

std::vector<VertexId> vertex_order(const DependencyGraph& graph) {
  std::vector<VertexId> nodes;
  std::vector<std::pair<VertexId, VertexId>> edges;
  for (const auto& [id, v] : graph.vertices()) {
    nodes.push_back(id);
    for (auto in : v.inputs) {
      if (graph.vertices().contains(in)) edges.emplace_back(in, id);
    }
  }
  return topo_order(nodes, edges);
}

std::map<VertexId, std::size_t> infer_widths(const DependencyGraph& graph,
                                             std::vector<Violation>* problems) {
  std::map<VertexId, std::size_t> width;
  auto report = [&](const std::string& msg) {
    if (problems != nullptr) problems->push_back({ErrorCode::WidthMismatch, msg});
  };
  std::vector<VertexId> order;
  try {
    order = vertex_order(graph);
  } catch (const Error&) {
    return width;
  }
  for (auto id : order) {
    const auto& v = graph.vertex(id);
    auto input_width = [&](std::size_t i) -> std::optional<std::size_t> {
      auto it = width.find(v.inputs[i]);
      if (it == width.end()) return std::nullopt;
      return it->second;
    };
    const auto tag = std::string(to_string(v.kind)) + " " + std::to_string(id);
    switch (v.kind) {
      case VertexKind::ExternalLoad: {
        const auto* load = std::get_if<LoadPayload>(&v.payload);
        if (load == nullptr) break;
        std::size_t w = 0;
        if (load->from_graph_input) {
          if (load->end <= load->begin) {
            report(tag + ": empty input slice");
            break;
          }
          w = load->end - load->begin;
        } else {
          bool known = true;
          for (std::size_t i = 0; i < v.inputs.size(); ++i) {
            auto iw = input_width(i);
            if (!iw) known = false;
            else w += *iw;
          }
          if (!known) break;
        }
        if (w > row_capacity(load->paired)) report(tag + ": load wider than the array");
        width[id] = w;
        break;
      }
      case VertexKind::SynapseMatrix: {
        const auto* m = std::get_if<MatrixPayload>(&v.payload);
        if (m == nullptr) break;
        if (m->rows > row_capacity(m->signed_weights) || m->cols > kArrayCols || m->cols == 0) {
          report(tag + ": block exceeds array capacity");
        }
        if (!m->weights || m->weights->size() != m->rows * m->cols) {
          report(tag + ": weight count does not match rows x cols");
        }
        if (!v.inputs.empty()) {
          if (auto iw = input_width(0); iw && *iw != m->rows) {
            report(tag + ": " + std::to_string(m->rows) + " rows fed by a load of width " +
                   std::to_string(*iw));
          }
          const auto& load = graph.vertex(v.inputs[0]);
          if (const auto* lp = std::get_if<LoadPayload>(&load.payload);
              lp != nullptr && lp->paired != m->signed_weights) {
            report(tag + ": row pairing of load and matrix disagree");
          }
        }
        width[id] = m->cols;
        break;
      }
      case VertexKind::Neurons:
      case VertexKind::Digitize:
      case VertexKind::Store:
      case VertexKind::ExternalStore:
        if (v.inputs.size() == 1) {
          if (auto iw = input_width(0)) width[id] = *iw;
        }
        break;
      case VertexKind::Add: {
        std::optional<std::size_t> w;
        bool ok = true;
        for (std::size_t i = 0; i < v.inputs.size(); ++i) {
          auto iw = input_width(i);
          if (!iw) {
            ok = false;
            continue;
          }
          if (w && *w != *iw) {
            report(tag + ": summands differ in width");
            ok = false;
          }
          w = iw;
        }
        if (ok && w) width[id] = *w;
        break;
      }
      case VertexKind::Concat: {
        std::size_t w = 0;
        bool ok = true;
        for (std::size_t i = 0; i < v.inputs.size(); ++i) {
          auto iw = input_width(i);
          if (!iw) ok = false;
          else w += *iw;
        }
        if (ok) width[id] = w;
        break;
      }
    }
  }
  return width;
}

std::vector<Violation> validate(const DependencyGraph& graph) {
  std::vector<Violation> out;
  const auto& vertices = graph.vertices();
  const auto& instances = graph.instances();

  for (const auto& [id, v] : vertices) {
    const auto tag = std::string(to_string(v.kind)) + " " + std::to_string(id);
    if (v.id != id) out.push_back({ErrorCode::MalformedInstance, tag + ": id mismatch"});
    if (auto p = payload_problem(v.kind, v.payload)) out.push_back({ErrorCode::KindMismatch, *p});
    std::vector<VertexKind> kinds;
    bool all_defined = true;
    for (auto in : v.inputs) {
      auto it = vertices.find(in);
      if (it == vertices.end()) {
        out.push_back({ErrorCode::UseBeforeDef, tag + " uses undefined vertex " + std::to_string(in)});
        all_defined = false;
      } else {
        kinds.push_back(it->second.kind);
      }
    }
    if (all_defined) {
      if (auto p = input_problem(v.kind, v.payload, kinds)) {
        out.push_back({ErrorCode::KindMismatch, tag + ": " + *p});
      }
    }
    if (is_on_chip(v.kind)) {
      if (!v.instance || !instances.contains(*v.instance)) {
        out.push_back({ErrorCode::MalformedInstance, tag + " is not part of an execution instance"});
      } else if (v.kind != VertexKind::ExternalLoad && all_defined) {
        for (auto in : v.inputs) {
          if (vertices.at(in).instance != v.instance) {
            out.push_back({ErrorCode::MalformedInstance, tag + " has an analog edge leaving its instance"});
          }
        }
      } else if (v.kind == VertexKind::ExternalLoad && all_defined) {
        for (auto in : v.inputs) {
          if (vertices.at(in).instance == v.instance) {
            out.push_back({ErrorCode::MalformedInstance, tag + " loads from its own instance"});
          }
        }
      }
    } else if (v.instance) {
      out.push_back({ErrorCode::MalformedInstance, tag + " is a host vertex inside an instance"});
    }
  }

  for (const auto& [iid, inst] : instances) {
    const auto tag = "instance " + std::to_string(iid);
    if (inst.binding.array >= kArraysPerChip) {
      out.push_back({ErrorCode::MalformedInstance, tag + " bound to nonexistent array"});
    }
    std::map<VertexKind, int> counts;
    for (auto vid : inst.vertices) {
      auto it = vertices.find(vid);
      if (it == vertices.end()) {
        out.push_back({ErrorCode::UseBeforeDef, tag + " lists undefined vertex " + std::to_string(vid)});
        continue;
      }
      if (it->second.instance != iid) {
        out.push_back({ErrorCode::MalformedInstance, tag + " lists vertex " + std::to_string(vid) +
                                                         " owned elsewhere"});
      }
      ++counts[it->second.kind];
    }
    for (auto k : kInstanceChain) {
      if (counts[k] != 1) {
        out.push_back({ErrorCode::MalformedInstance, tag + " has " + std::to_string(counts[k]) + " " +
                                                         std::string(to_string(k)) + " vertices"});
      }
    }
  }
  for (const auto& [id, v] : vertices) {
    if (v.instance && instances.contains(*v.instance)) {
      const auto& listed = instances.at(*v.instance).vertices;
      if (std::find(listed.begin(), listed.end(), id) == listed.end()) {
        out.push_back({ErrorCode::MalformedInstance,
                       "vertex " + std::to_string(id) + " missing from its instance list"});
      }
    }
  }

  bool acyclic = true;
  try {
    vertex_order(graph);
  } catch (const Error&) {
    acyclic = false;
    out.push_back({ErrorCode::CycleDetected, "vertex graph contains a cycle"});
  }
  if (acyclic) infer_widths(graph, &out);
  return out;
}

void require_valid(const DependencyGraph& graph) {
  auto problems = validate(graph);
  if (!problems.empty()) throw Error(problems.front().code, problems.front().message);
}

InstanceId GraphBuilder::begin_instance(ArrayBinding binding, std::optional<InstanceId> id) {
  if (open_) throw Error(ErrorCode::MalformedInstance, "instances cannot nest");
  if (binding.array >= kArraysPerChip) {
    throw Error(ErrorCode::MalformedInstance, "array index " + std::to_string(binding.array));
  }
  const InstanceId iid = id.value_or(next_instance_);
  if (graph_.instances().contains(iid)) {
    throw Error(ErrorCode::DoubleAssignment, "instance " + std::to_string(iid) + " assigned twice");
  }
  graph_.insert_instance(ExecutionInstance{iid, {}, binding});
  next_instance_ = std::max(next_instance_, iid + 1);
  open_ = iid;
  return iid;
}

void GraphBuilder::end_instance() {
  if (!open_) throw Error(ErrorCode::MalformedInstance, "no open instance");
  open_.reset();
}

VertexId GraphBuilder::add_vertex(VertexKind kind, Payload payload, std::vector<VertexId> inputs) {
  while (graph_.vertices().contains(next_vertex_)) ++next_vertex_;
  return add_vertex_with_id(next_vertex_, kind, std::move(payload), std::move(inputs));
}

VertexId GraphBuilder::add_vertex_with_id(VertexId id, VertexKind kind, Payload payload,
                                          std::vector<VertexId> inputs) {
  if (graph_.vertices().contains(id)) {
    throw Error(ErrorCode::DoubleAssignment, "vertex " + std::to_string(id) + " assigned twice");
  }
  std::vector<VertexKind> kinds;
  for (auto in : inputs) {
    auto it = graph_.vertices().find(in);
    if (it == graph_.vertices().end()) {
      throw Error(ErrorCode::UseBeforeDef, std::string(to_string(kind)) + " uses vertex " +
                                               std::to_string(in) + " before its definition");
    }
    kinds.push_back(it->second.kind);
  }
  if (auto p = payload_problem(kind, payload)) throw Error(ErrorCode::KindMismatch, *p);
  if (auto p = input_problem(kind, payload, kinds)) throw Error(ErrorCode::KindMismatch, *p);

  std::optional<InstanceId> owner;
  if (is_on_chip(kind)) {
    if (!open_) {
      throw Error(ErrorCode::MalformedInstance,
                  std::string(to_string(kind)) + " must be added inside an execution instance");
    }
    owner = open_;
    if (graph_.find_in_instance(*open_, kind).has_value()) {
      throw Error(ErrorCode::MalformedInstance, "instance " + std::to_string(*open_) + " already has a " +
                                                    std::string(to_string(kind)));
    }
    for (auto in : inputs) {
      const bool same = graph_.vertex(in).instance == open_;
      if (kind == VertexKind::ExternalLoad ? same : !same) {
        throw Error(ErrorCode::MalformedInstance,
                    std::string(to_string(kind)) + " crosses the instance boundary incorrectly");
      }
    }
  } else if (open_) {
    throw Error(ErrorCode::MalformedInstance,
                std::string(to_string(kind)) + " is host-side and cannot live in an instance");
  }

  graph_.insert_vertex(Vertex{id, kind, std::move(payload), std::move(inputs), owner});
  if (owner) graph_.instances_.at(*owner).vertices.push_back(id);
  next_vertex_ = std::max(next_vertex_, id + 1);
  return id;
}

VertexId GraphBuilder::add_mac_instance(ArrayBinding binding, LoadPayload load,
                                        std::vector<VertexId> load_inputs, MatrixPayload matrix,
                                        std::optional<InstanceId> id) {
  begin_instance(binding, id);
  const auto l = add_vertex(VertexKind::ExternalLoad, load, std::move(load_inputs));
  const auto m = add_vertex(VertexKind::SynapseMatrix, std::move(matrix), {l});
  const auto n = add_vertex(VertexKind::Neurons, std::monostate{}, {m});
  const auto d = add_vertex(VertexKind::Digitize, std::monostate{}, {n});
  const auto s = add_vertex(VertexKind::Store, std::monostate{}, {d});
  end_instance();
  return s;
}

DependencyGraph GraphBuilder::finish() {
  if (open_) end_instance();
  require_valid(graph_);
  return std::move(graph_);
}

}  // namespace anamac
