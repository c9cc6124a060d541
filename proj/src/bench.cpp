#include "anamac/bench.hpp"

#include <algorithm>
#include <charconv>

#include "anamac/partition.hpp"

namespace anamac {
namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double rate_of(const ScenarioSpec& s, std::size_t n, std::size_t m, std::size_t batch) {
  const double macs = static_cast<double>(batch) * static_cast<double>(n) * static_cast<double>(m);
  return macs / simulate_matmul(s, n, m, batch).makespan();
}

}  // namespace

RunTrace simulate_matmul(const ScenarioSpec& s, std::size_t n, std::size_t m, std::size_t batch,
                         const ScheduleOptions& options) {
  const auto arrays = all_arrays(s.chips);
  const auto plan = partition_matmul(n, m, false, arrays);
  std::vector<ScheduleNode> nodes;
  for (std::size_t t = 0; t < plan.tiles.size(); ++t) {
    const auto& tile = plan.tiles[t];
    ScheduleNode node = tile_stage_costs(TileShape{tile.rows(), tile.cols(), false}, batch, s.params, s.link, s.cost);
    node.id = t + 1;
    node.chip = tile.binding.chip;
    node.array = tile.binding.array;
    nodes.push_back(node);
  }
  return simulate_schedule(nodes, {}, options);
}

std::vector<RatePoint> mac_rate_vs_size(const ScenarioSpec& s, std::span<const std::size_t> sizes,
                                        std::size_t batch) {
  std::vector<RatePoint> out;
  for (auto n : sizes) out.push_back({static_cast<double>(n), rate_of(s, n, n, batch)});
  return out;
}

std::vector<RatePoint> mac_rate_vs_batch(const ScenarioSpec& s, std::span<const std::size_t> batches,
                                         std::size_t size) {
  std::vector<RatePoint> out;
  for (auto b : batches) out.push_back({static_cast<double>(b), rate_of(s, size, size, b)});
  return out;
}

std::vector<BreakdownRow> utilization_breakdown(const ScenarioSpec& s, std::span<const std::size_t> sizes,
                                                std::size_t batch) {
  std::vector<BreakdownRow> out;
  for (auto n : sizes) {
    const auto trace = simulate_matmul(s, n, n, batch);
    BreakdownRow row;
    row.size = n;
    double last_exec_end = 0;
    for (const auto& t : trace.instances) last_exec_end = std::max(last_exec_end, t.exec_end);
    row.t_exec = trace.exec_time();
    row.t_post = trace.makespan() - last_exec_end;
    row.t_pre = last_exec_end - row.t_exec;
    out.push_back(row);
  }
  return out;
}

double asymptotic_rate(const ScenarioSpec& s, std::size_t size) {
  // The makespan is affine in the batch once it is large; its slope is the
  // per-entry cost.
  constexpr std::size_t big = 1'000'000;
  const double slope =
      (simulate_matmul(s, size, size, 2 * big).makespan() - simulate_matmul(s, size, size, big).makespan()) / big;
  return static_cast<double>(size) * static_cast<double>(size) / slope;
}

std::size_t half_rate_batch(const ScenarioSpec& s, std::size_t size) {
  const double half = asymptotic_rate(s, size) / 2;
  std::size_t lo = 1, hi = 1;
  while (rate_of(s, size, size, hi) < half) {
    lo = hi;
    hi *= 2;
  }
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (rate_of(s, size, size, mid) >= half) hi = mid;
    else lo = mid + 1;
  }
  return hi;
}

std::vector<std::size_t> default_sizes() {
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n <= (1u << 14); n *= 2) out.push_back(n);
  return out;
}

std::vector<std::size_t> default_batches() {
  std::vector<std::size_t> out;
  for (std::size_t decade = 1; decade <= 10000; decade *= 10) {
    for (std::size_t f : {1, 2, 5}) out.push_back(f * decade);
  }
  out.push_back(100000);
  return out;
}

std::string rate_csv(const std::vector<RatePoint>& rows, std::string_view scenario) {
  std::string out = "x,rate_mac_per_s,scenario\n";
  for (const auto& r : rows) out += num(r.x) + "," + num(r.rate) + "," + std::string(scenario) + "\n";
  return out;
}

std::string breakdown_csv(const std::vector<BreakdownRow>& rows) {
  std::string out = "size,t_pre,t_exec,t_post\n";
  for (const auto& r : rows) {
    out += std::to_string(r.size) + "," + num(r.t_pre) + "," + num(r.t_exec) + "," + num(r.t_post) + "\n";
  }
  return out;
}

}  // namespace anamac
