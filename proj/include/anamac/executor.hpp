#pragma once

#include <cstdint>
#include <vector>

#include "anamac/graph.hpp"
#include "anamac/perf.hpp"
#include "anamac/resources.hpp"
#include "anamac/schedule.hpp"
#include "anamac/tensor.hpp"

namespace anamac {

enum class TimeMode { simulated_time, measured_time };

struct ExecutorOptions {
  std::size_t workers = 0;     // threads running instances; 0: one per instance, at most 8
  std::uint64_t run_seed = 0;  // temporal noise is keyed by (chip seed, run seed, instance, batch index)
  TimeMode mode = TimeMode::simulated_time;
  LinkBudget link;             // cost constants for simulated_time
  CostModel cost;
  ScheduleOptions schedule;    // host workers of the simulated pipeline
};

struct RunResult {
  std::vector<Tensor> outputs;  // i32 [batch, width], one per ExternalStore in id order
  RunTrace trace;

  const Tensor& output() const;
};

/// Highest chip index referenced by the graph, plus one.
std::size_t chips_needed(const DependencyGraph& graph);

/// Just-in-time execution of a dependency graph on leased chips. Instances
/// start as soon as their producers are stored; execution is exclusive per
/// chip. `inputs` is the u8 [batch, N] graph input.
class Executor {
 public:
  explicit Executor(ExecutorOptions options = {}) : options_(options) {}

  RunResult run(const DependencyGraph& graph, const Tensor& inputs, ChipLease& lease) const;
  /// Leases chips_needed(graph) chips for the duration of the run.
  RunResult run(const DependencyGraph& graph, const Tensor& inputs, ResourceManager& resources) const;

  /// Trace the pipeline would produce under the options' cost model, without numerics.
  RunTrace simulate(const DependencyGraph& graph, std::size_t batch) const;

  const ExecutorOptions& options() const { return options_; }

 private:
  ExecutorOptions options_;
};

/// Single-threaded reference walking the vertices in topological order.
std::vector<Tensor> run_sequential(const DependencyGraph& graph, const Tensor& inputs, ChipLease& lease,
                                   std::uint64_t run_seed = 0);

}  // namespace anamac
