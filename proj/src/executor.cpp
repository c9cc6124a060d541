#include "anamac/executor.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <thread>

namespace anamac {
namespace {

using Values = std::vector<std::int32_t>;  // row-major [batch, width]

struct HostValue {
  Values data;
  std::size_t width = 0;
};

std::size_t batch_of(const Tensor& inputs) {
  if (inputs.dtype() != DType::u8) throw Error(ErrorCode::DTypeMismatch, "graph input must be u8");
  if (inputs.rank() != 2) throw Error(ErrorCode::ShapeMismatch, "graph input must be [batch, N]");
  if (inputs.dim(0) == 0) throw Error(ErrorCode::InvalidParams, "batch must be >= 1");
  return inputs.dim(0);
}

HostValue slice_input(const Tensor& inputs, const LoadPayload& load) {
  const std::size_t batch = inputs.dim(0), n = inputs.dim(1);
  if (load.end > n || load.end <= load.begin) {
    throw Error(ErrorCode::ShapeMismatch, "input slice [" + std::to_string(load.begin) + ", " +
                                              std::to_string(load.end) + ") outside width " + std::to_string(n));
  }
  const auto x = inputs.values<std::uint8_t>();
  HostValue v;
  v.width = load.end - load.begin;
  v.data.resize(batch * v.width);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < v.width; ++i) v.data[b * v.width + i] = x[b * n + load.begin + i];
  }
  return v;
}

HostValue concat(const std::vector<const HostValue*>& parts, std::size_t batch) {
  HostValue v;
  for (const auto* p : parts) v.width += p->width;
  v.data.resize(batch * v.width);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t off = 0;
    for (const auto* p : parts) {
      std::copy_n(p->data.begin() + static_cast<std::ptrdiff_t>(b * p->width), p->width,
                  v.data.begin() + static_cast<std::ptrdiff_t>(b * v.width + off));
      off += p->width;
    }
  }
  return v;
}

HostValue add(const std::vector<const HostValue*>& parts, const AddPayload& payload) {
  HostValue v;
  v.width = parts.front()->width;
  v.data.assign(parts.front()->data.size(), 0);
  for (std::size_t k = 0; k < v.data.size(); ++k) {
    std::int64_t acc = 0;
    for (const auto* p : parts) {
      if (p->data.size() != v.data.size()) throw Error(ErrorCode::WidthMismatch, "Add operands differ in size");
      acc = std::clamp<std::int64_t>(acc + p->data[k], std::numeric_limits<std::int32_t>::min(),
                                     std::numeric_limits<std::int32_t>::max());
    }
    v.data[k] = static_cast<std::int32_t>(std::clamp<std::int64_t>(acc, payload.clamp_min, payload.clamp_max));
  }
  return v;
}

/// Evaluates a host-side vertex from already computed inputs.
HostValue host_op(const Vertex& v, const std::vector<const HostValue*>& in, std::size_t batch) {
  switch (v.kind) {
    case VertexKind::Add: return add(in, std::get<AddPayload>(v.payload));
    case VertexKind::Concat: return concat(in, batch);
    case VertexKind::ExternalStore: return *in.front();
    default: break;
  }
  throw Error(ErrorCode::KindMismatch, "vertex " + std::to_string(v.id) + " is not a host operation");
}

HostValue load_value(const Vertex& load_vertex, const Tensor& inputs, const std::vector<const HostValue*>& upstream) {
  const auto& load = std::get<LoadPayload>(load_vertex.payload);
  if (load.from_graph_input) return slice_input(inputs, load);
  HostValue v = concat(upstream, inputs.dim(0));
  for (auto& x : v.data) x = std::clamp(x, kInputMin, kInputMax);
  return v;
}

/// Configures the bound array and runs one MAC per batch entry. The caller
/// holds the chip's exec mutex.
HostValue execute_matrix(const MatrixPayload& matrix, const HostValue& loaded, std::size_t batch,
                         const ArrayBinding& binding, InstanceId id, ChipLease& lease, std::uint64_t run_seed) {
  if (loaded.width != matrix.rows) throw Error(ErrorCode::WidthMismatch, "load width differs from matrix rows");
  const PhysicalWeights physical = matrix.physical();
  const std::uint64_t base_seed = lease.config().chip_seed;
  Chip& chip = lease.chip(binding.chip);
  HostValue out;
  out.width = matrix.cols;
  out.data.resize(batch * matrix.cols);
  std::vector<std::uint8_t> logical(matrix.rows), x(kArrayRows);
  std::vector<std::int8_t> y(kArrayCols);
  SynapseArray& array = chip.array(binding.array);
  array.configure(physical);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < matrix.rows; ++i) {
      const auto v = loaded.data[b * matrix.rows + i];
      if (v < kInputMin || v > kInputMax) {
        throw Error(ErrorCode::InputOutOfRange, "input " + std::to_string(v) + " outside [0, 31]");
      }
      logical[i] = static_cast<std::uint8_t>(v);
    }
    place_inputs(logical, matrix.signed_weights, x);
    NormalStream rng(mix_seed({base_seed, run_seed, id, b}));
    analog_mac(array, x, matrix.params, chip.config(), rng, y, matrix.cols);
    std::copy_n(y.begin(), matrix.cols, out.data.begin() + static_cast<std::ptrdiff_t>(b * matrix.cols));
  }
  return out;
}

Tensor to_tensor(const HostValue& v, std::size_t batch) {
  return Tensor(Shape{batch, v.width}, std::vector<std::int32_t>(v.data));
}

}  // namespace

const Tensor& RunResult::output() const {
  if (outputs.empty()) throw Error(ErrorCode::UseBeforeDef, "graph has no ExternalStore");
  return outputs.front();
}

std::size_t chips_needed(const DependencyGraph& graph) {
  std::size_t n = 0;
  for (const auto& [id, inst] : graph.instances()) n = std::max(n, inst.binding.chip + 1);
  return n;
}

RunTrace Executor::simulate(const DependencyGraph& graph, std::size_t batch) const {
  std::vector<ScheduleNode> nodes;
  for (const auto& [id, inst] : graph.instances()) {
    const auto mid = graph.find_in_instance(id, VertexKind::SynapseMatrix);
    const auto& matrix = std::get<MatrixPayload>(graph.vertex(*mid).payload);
    ScheduleNode node =
        tile_stage_costs(TileShape{matrix.rows, matrix.cols, matrix.signed_weights}, batch, matrix.params,
                         options_.link, options_.cost);
    node.id = id;
    node.chip = inst.binding.chip;
    node.array = inst.binding.array;
    nodes.push_back(node);
  }
  return simulate_schedule(nodes, graph.instance_edges(), options_.schedule);
}

RunResult Executor::run(const DependencyGraph& graph, const Tensor& inputs, ResourceManager& resources) const {
  auto lease = resources.acquire_chips(std::max<std::size_t>(1, chips_needed(graph)));
  return run(graph, inputs, lease);
}

RunResult Executor::run(const DependencyGraph& graph, const Tensor& inputs, ChipLease& lease) const {
  require_valid(graph);
  const std::size_t batch = batch_of(inputs);
  if (chips_needed(graph) > lease.size()) {
    throw Error(ErrorCode::Unavailable, "graph needs " + std::to_string(chips_needed(graph)) + " chips, lease has " +
                                            std::to_string(lease.size()));
  }

  const auto order = topo_schedule(graph);
  const auto edges = graph.instance_edges();
  std::map<InstanceId, std::size_t> rank;
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  std::vector<std::vector<std::size_t>> successors(order.size());
  std::vector<std::size_t> missing(order.size(), 0);
  for (const auto& [from, to] : edges) {
    successors[rank[from]].push_back(rank[to]);
    ++missing[rank[to]];
  }

  std::map<VertexId, HostValue> values;
  std::mutex values_mutex;
  // Host vertices are evaluated on demand, memoized; callers hold values_mutex.
  std::function<const HostValue&(VertexId)> value_of = [&](VertexId id) -> const HostValue& {
    if (auto it = values.find(id); it != values.end()) return it->second;
    const auto& v = graph.vertex(id);
    if (v.kind == VertexKind::Store) throw Error(ErrorCode::UseBeforeDef, "store " + std::to_string(id) + " not ready");
    std::vector<const HostValue*> in;
    for (auto i : v.inputs) in.push_back(&value_of(i));
    return values.emplace(id, host_op(v, in, batch)).first->second;
  };

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };
  std::vector<InstanceTiming> timing(order.size());

  auto run_instance = [&](std::size_t r) {
    const InstanceId id = order[r];
    const auto& inst = graph.instance(id);
    auto& tm = timing[r];
    tm.id = id;
    tm.chip = inst.binding.chip;
    tm.array = inst.binding.array;
    tm.pre_start = seconds();
    const auto& load_vertex = graph.vertex(*graph.find_in_instance(id, VertexKind::ExternalLoad));
    HostValue loaded;
    {
      std::lock_guard lock(values_mutex);
      std::vector<const HostValue*> upstream;
      for (auto i : load_vertex.inputs) upstream.push_back(&value_of(i));
      loaded = load_value(load_vertex, inputs, upstream);
    }
    const auto& matrix = std::get<MatrixPayload>(graph.vertex(*graph.find_in_instance(id, VertexKind::SynapseMatrix)).payload);
    tm.pre_end = seconds();
    HostValue result;
    {
      std::lock_guard chip_lock(lease.chip(inst.binding.chip).exec_mutex());
      tm.exec_start = seconds();
      result = execute_matrix(matrix, loaded, batch, inst.binding, id, lease, options_.run_seed);
      tm.exec_end = seconds();
    }
    tm.post_start = seconds();
    {
      std::lock_guard lock(values_mutex);
      values[*graph.find_in_instance(id, VertexKind::Store)] = std::move(result);
    }
    tm.post_end = seconds();
  };

  std::size_t workers = options_.workers;
  if (workers == 0) workers = std::clamp<std::size_t>(order.size(), 1, 8);

  if (workers == 1) {
    for (std::size_t r = 0; r < order.size(); ++r) run_instance(r);
  } else {
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t r = 0; r < order.size(); ++r) {
      if (missing[r] == 0) ready.push(r);
    }
    std::mutex queue_mutex;
    std::condition_variable changed;
    std::size_t running = 0, finished = 0;
    std::exception_ptr failure;
    auto worker = [&] {
      std::unique_lock lock(queue_mutex);
      while (true) {
        changed.wait(lock, [&] { return failure || finished == order.size() || !ready.empty() || running == 0; });
        if (failure || finished == order.size()) return;
        if (ready.empty()) {
          failure = std::make_exception_ptr(Error(ErrorCode::DeadlockDetected, "no instance can make progress"));
          changed.notify_all();
          return;
        }
        const auto r = ready.top();
        ready.pop();
        ++running;
        lock.unlock();
        try {
          run_instance(r);
        } catch (...) {
          lock.lock();
          if (!failure) failure = std::current_exception();
          --running;
          changed.notify_all();
          return;
        }
        lock.lock();
        --running;
        ++finished;
        for (auto s : successors[r]) {
          if (--missing[s] == 0) ready.push(s);
        }
        changed.notify_all();
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, order.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  RunResult result;
  {
    std::lock_guard lock(values_mutex);
    for (auto id : graph.external_stores()) result.outputs.push_back(to_tensor(value_of(id), batch));
  }
  if (options_.mode == TimeMode::simulated_time) {
    result.trace = simulate(graph, batch);
  } else {
    std::sort(timing.begin(), timing.end(), [](auto& a, auto& b) { return a.id < b.id; });
    for (auto& tm : timing) {
      const auto& matrix =
          std::get<MatrixPayload>(graph.vertex(*graph.find_in_instance(tm.id, VertexKind::SynapseMatrix)).payload);
      const auto costs = tile_stage_costs(TileShape{matrix.rows, matrix.cols, matrix.signed_weights}, batch,
                                          matrix.params, options_.link, options_.cost);
      tm.bytes_config = costs.bytes_config;
      tm.bytes_in = costs.bytes_in;
      tm.bytes_out = costs.bytes_out;
    }
    result.trace.instances = std::move(timing);
  }
  return result;
}

std::vector<Tensor> run_sequential(const DependencyGraph& graph, const Tensor& inputs, ChipLease& lease,
                                   std::uint64_t run_seed) {
  require_valid(graph);
  const std::size_t batch = batch_of(inputs);
  std::map<VertexId, HostValue> values;
  for (auto id : vertex_order(graph)) {
    const auto& v = graph.vertex(id);
    std::vector<const HostValue*> in;
    for (auto i : v.inputs) in.push_back(&values.at(i));
    switch (v.kind) {
      case VertexKind::ExternalLoad:
        values[id] = load_value(v, inputs, in);
        break;
      case VertexKind::SynapseMatrix: {
        const auto& inst = graph.instance(*v.instance);
        std::lock_guard chip_lock(lease.chip(inst.binding.chip).exec_mutex());
        values[id] = execute_matrix(std::get<MatrixPayload>(v.payload), *in.front(), batch, inst.binding, inst.id,
                                    lease, run_seed);
        break;
      }
      case VertexKind::Neurons:
      case VertexKind::Digitize:
      case VertexKind::Store:
        values[id] = *in.front();
        break;
      default:
        values[id] = host_op(v, in, batch);
        break;
    }
  }
  std::vector<Tensor> outputs;
  for (auto id : graph.external_stores()) outputs.push_back(to_tensor(values.at(id), batch));
  return outputs;
}

}  // namespace anamac
