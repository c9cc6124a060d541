#pragma once

#include <span>
#include <string>
#include <vector>

#include "anamac/perf.hpp"
#include "anamac/schedule.hpp"

namespace anamac {

struct RatePoint {
  double x = 0;
  double rate = 0;  // MAC/s
};

struct BreakdownRow {
  std::size_t size = 0;
  double t_pre = 0;   // chip idle before and between executions
  double t_exec = 0;  // chip busy
  double t_post = 0;  // tail after the last execution

  double exec_fraction() const { return t_exec / (t_pre + t_exec + t_post); }
};

/// Simulated trace of an unsigned n x m matmul, partitioned over the
/// scenario's chips, with independent tiles pipelined.
RunTrace simulate_matmul(const ScenarioSpec& s, std::size_t n, std::size_t m, std::size_t batch,
                         const ScheduleOptions& options = {});

/// batch * size^2 / makespan for square matrices.
std::vector<RatePoint> mac_rate_vs_size(const ScenarioSpec& s, std::span<const std::size_t> sizes,
                                        std::size_t batch = 2000);
std::vector<RatePoint> mac_rate_vs_batch(const ScenarioSpec& s, std::span<const std::size_t> batches,
                                         std::size_t size = 256);
std::vector<BreakdownRow> utilization_breakdown(const ScenarioSpec& s, std::span<const std::size_t> sizes,
                                                std::size_t batch = 2000);

/// Limit of the batch sweep for one size x size matrix as batch grows.
double asymptotic_rate(const ScenarioSpec& s, std::size_t size = 256);
/// Smallest batch whose rate reaches half the asymptote.
std::size_t half_rate_batch(const ScenarioSpec& s, std::size_t size = 256);

/// 1, 2, 4, ..., 2^14
std::vector<std::size_t> default_sizes();
/// 1 .. 10^5, roughly log-spaced
std::vector<std::size_t> default_batches();

/// `x,rate_mac_per_s,scenario`
std::string rate_csv(const std::vector<RatePoint>& rows, std::string_view scenario);
/// `size,t_pre,t_exec,t_post`
std::string breakdown_csv(const std::vector<BreakdownRow>& rows);

}  // namespace anamac
