#include <json.hpp>

#include "anamac/graph.hpp"

namespace anamac {
namespace {

using nlohmann::json;

json payload_json(const Payload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<P, LoadPayload>) {
          return {{"from_graph_input", p.from_graph_input},
                  {"begin", p.begin},
                  {"end", p.end},
                  {"paired", p.paired}};
        } else if constexpr (std::is_same_v<P, MatrixPayload>) {
          json w = json::array();
          if (p.weights) {
            for (auto v : *p.weights) w.push_back(int(v));
          }
          return {{"rows", p.rows},
                  {"cols", p.cols},
                  {"signed", p.signed_weights},
                  {"num_sends", p.params.num_sends},
                  {"wait_between_events", p.params.wait_between_events},
                  {"weights", std::move(w)}};
        } else if constexpr (std::is_same_v<P, AddPayload>) {
          return {{"clamp_min", p.clamp_min}, {"clamp_max", p.clamp_max}};
        } else {
          return {{"axis", p.axis}};
        }
      },
      payload);
}

Payload payload_from_json(VertexKind kind, const json& j) {
  switch (kind) {
    case VertexKind::ExternalLoad:
      return LoadPayload{j.at("from_graph_input").get<bool>(), j.at("begin").get<std::size_t>(),
                         j.at("end").get<std::size_t>(), j.at("paired").get<bool>()};
    case VertexKind::SynapseMatrix: {
      MatrixPayload m;
      m.rows = j.at("rows").get<std::size_t>();
      m.cols = j.at("cols").get<std::size_t>();
      m.signed_weights = j.at("signed").get<bool>();
      m.params.num_sends = j.at("num_sends").get<std::uint32_t>();
      m.params.wait_between_events = j.at("wait_between_events").get<std::uint32_t>();
      std::vector<std::int8_t> w;
      for (const auto& v : j.at("weights")) w.push_back(static_cast<std::int8_t>(v.get<int>()));
      m.weights = std::make_shared<const std::vector<std::int8_t>>(std::move(w));
      return m;
    }
    case VertexKind::Add:
      return AddPayload{j.at("clamp_min").get<std::int32_t>(), j.at("clamp_max").get<std::int32_t>()};
    case VertexKind::Concat:
      return ConcatPayload{j.at("axis").get<std::size_t>()};
    default:
      return std::monostate{};
  }
}

}  // namespace

std::string to_json(const DependencyGraph& graph, int indent) {
  json vertices = json::array();
  for (const auto& [id, v] : graph.vertices()) {
    json e{{"id", id}, {"kind", std::string(to_string(v.kind))}, {"inputs", v.inputs}};
    e["instance"] = v.instance ? json(*v.instance) : json(nullptr);
    e["payload"] = payload_json(v.payload);
    vertices.push_back(std::move(e));
  }
  json instances = json::array();
  for (const auto& [id, inst] : graph.instances()) {
    instances.push_back({{"id", id},
                         {"chip", inst.binding.chip},
                         {"array", inst.binding.array},
                         {"vertices", inst.vertices}});
  }
  json edges = json::array();
  for (const auto& [id, v] : graph.vertices()) {
    for (auto in : v.inputs) {
      if (!graph.vertices().contains(in)) continue;
      edges.push_back({{"from", in},
                       {"to", id},
                       {"kind", graph.edge_kind(in, id) == EdgeKind::analog ? "analog" : "digital"}});
    }
  }
  json root{{"vertices", std::move(vertices)}, {"instances", std::move(instances)}, {"edges", std::move(edges)}};
  return root.dump(indent);
}

DependencyGraph graph_from_json(const std::string& text) {
  DependencyGraph graph;
  try {
    const auto root = json::parse(text);
    for (const auto& e : root.at("instances")) {
      ExecutionInstance inst;
      inst.id = e.at("id").get<InstanceId>();
      inst.binding = {e.at("chip").get<std::size_t>(), e.at("array").get<std::size_t>()};
      inst.vertices = e.at("vertices").get<std::vector<VertexId>>();
      graph.insert_instance(std::move(inst));
    }
    for (const auto& e : root.at("vertices")) {
      Vertex v;
      v.id = e.at("id").get<VertexId>();
      v.kind = vertex_kind_from_string(e.at("kind").get<std::string>());
      v.inputs = e.at("inputs").get<std::vector<VertexId>>();
      if (!e.at("instance").is_null()) v.instance = e.at("instance").get<InstanceId>();
      v.payload = payload_from_json(v.kind, e.at("payload"));
      graph.insert_vertex(std::move(v));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("graph JSON: ") + ex.what());
  }
  return graph;
}

}  // namespace anamac
