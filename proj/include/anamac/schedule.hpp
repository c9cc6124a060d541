#pragma once

#include <string>
#include <utility>
#include <vector>

#include "anamac/graph.hpp"

namespace anamac {

/// Stage timestamps of one execution instance, in seconds.
struct InstanceTiming {
  InstanceId id = 0;
  std::size_t chip = 0;
  std::size_t array = 0;
  double pre_start = 0, pre_end = 0;
  double exec_start = 0, exec_end = 0;
  double post_start = 0, post_end = 0;
  std::size_t bytes_config = 0;
  std::size_t bytes_in = 0;
  std::size_t bytes_out = 0;

  bool operator==(const InstanceTiming&) const = default;
};

struct RunTrace {
  std::vector<InstanceTiming> instances;  // ascending id

  double makespan() const;
  double exec_time() const;
  /// Sum of every stage duration, i.e. the makespan of a fully serial run.
  double stage_sum() const;
  std::size_t chips() const;
  /// Sum of exec time over (makespan * chips used).
  double utilization() const;
  const InstanceTiming& at(InstanceId id) const;
};

/// `instance,stage,t_start,t_end,bytes` with one line per stage.
std::string trace_to_csv(const RunTrace& trace);

/// Problems found in a trace: per-instance stage order, exec overlap on one
/// chip, and producers finishing after consumers start executing.
std::vector<std::string> check_trace(const RunTrace& trace,
                                     const std::vector<std::pair<InstanceId, InstanceId>>& edges);

struct ScheduleNode {
  InstanceId id = 0;
  std::size_t chip = 0;
  std::size_t array = 0;
  double pre = 0, exec = 0, post = 0;
  std::size_t bytes_config = 0, bytes_in = 0, bytes_out = 0;
};

struct ScheduleOptions {
  std::size_t host_workers = 0;  // 0: unlimited
  bool serial = false;           // one stage at a time, in topological order
};

/// Discrete-event simulation of the three-stage pipeline. Preprocessing of an
/// instance starts once all producers finished postprocessing; execution is
/// exclusive per chip; pre and post stages occupy one host worker each.
/// Ties go to the instance earlier in topological order.
RunTrace simulate_schedule(const std::vector<ScheduleNode>& nodes,
                           const std::vector<std::pair<InstanceId, InstanceId>>& edges,
                           const ScheduleOptions& options = {});

}  // namespace anamac
