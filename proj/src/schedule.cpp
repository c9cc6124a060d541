#include "anamac/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <queue>
#include <set>

namespace anamac {
namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using RankQueue = std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>>;

enum class Stage { pre, exec, post };

struct Event {
  double time;
  std::size_t rank;
  Stage stage;
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (rank != o.rank) return rank > o.rank;
    return stage > o.stage;
  }
};

}  // namespace

double RunTrace::makespan() const {
  double end = 0;
  for (const auto& t : instances) end = std::max(end, t.post_end);
  return end;
}

double RunTrace::exec_time() const {
  double s = 0;
  for (const auto& t : instances) s += t.exec_end - t.exec_start;
  return s;
}

double RunTrace::stage_sum() const {
  double s = 0;
  for (const auto& t : instances) {
    s += (t.pre_end - t.pre_start) + (t.exec_end - t.exec_start) + (t.post_end - t.post_start);
  }
  return s;
}

std::size_t RunTrace::chips() const {
  std::set<std::size_t> used;
  for (const auto& t : instances) used.insert(t.chip);
  return used.size();
}

double RunTrace::utilization() const {
  const double span = makespan();
  if (span <= 0 || instances.empty()) return 0;
  return exec_time() / (span * static_cast<double>(chips()));
}

const InstanceTiming& RunTrace::at(InstanceId id) const {
  auto it = std::lower_bound(instances.begin(), instances.end(), id,
                             [](const InstanceTiming& t, InstanceId v) { return t.id < v; });
  if (it == instances.end() || it->id != id) {
    throw Error(ErrorCode::UseBeforeDef, "no timing for instance " + std::to_string(id));
  }
  return *it;
}

std::string trace_to_csv(const RunTrace& trace) {
  std::string out = "instance,stage,t_start,t_end,bytes\n";
  for (const auto& t : trace.instances) {
    const auto id = std::to_string(t.id);
    out += id + ",pre," + num(t.pre_start) + "," + num(t.pre_end) + "," +
           std::to_string(t.bytes_config + t.bytes_in) + "\n";
    out += id + ",exec," + num(t.exec_start) + "," + num(t.exec_end) + "," +
           std::to_string(t.bytes_config + t.bytes_in + t.bytes_out) + "\n";
    out += id + ",post," + num(t.post_start) + "," + num(t.post_end) + "," + std::to_string(t.bytes_out) + "\n";
  }
  return out;
}

std::vector<std::string> check_trace(const RunTrace& trace,
                                     const std::vector<std::pair<InstanceId, InstanceId>>& edges) {
  std::vector<std::string> problems;
  std::map<std::size_t, std::vector<const InstanceTiming*>> per_chip;
  for (const auto& t : trace.instances) {
    const bool ordered = t.pre_start <= t.pre_end && t.pre_end <= t.exec_start && t.exec_start <= t.exec_end &&
                         t.exec_end <= t.post_start && t.post_start <= t.post_end;
    if (!ordered) problems.push_back("instance " + std::to_string(t.id) + " stages out of order");
    per_chip[t.chip].push_back(&t);
  }
  for (auto& [chip, list] : per_chip) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->exec_start < b->exec_start; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i]->exec_start < list[i - 1]->exec_end) {
        problems.push_back("exec overlap on chip " + std::to_string(chip) + " between instances " +
                           std::to_string(list[i - 1]->id) + " and " + std::to_string(list[i]->id));
      }
    }
  }
  for (const auto& [from, to] : edges) {
    if (trace.at(from).post_end > trace.at(to).exec_start) {
      problems.push_back("instance " + std::to_string(to) + " executes before " + std::to_string(from) + " is stored");
    }
  }
  return problems;
}

RunTrace simulate_schedule(const std::vector<ScheduleNode>& nodes,
                           const std::vector<std::pair<InstanceId, InstanceId>>& edges,
                           const ScheduleOptions& options) {
  std::vector<InstanceId> ids;
  for (const auto& n : nodes) ids.push_back(n.id);
  const auto order = topo_order(ids, edges);

  std::map<InstanceId, const ScheduleNode*> by_id;
  for (const auto& n : nodes) by_id[n.id] = &n;
  std::map<InstanceId, std::size_t> rank_of;
  std::vector<const ScheduleNode*> ranked;
  for (auto id : order) {
    rank_of[id] = ranked.size();
    ranked.push_back(by_id.at(id));
  }
  const std::size_t n = ranked.size();
  std::vector<InstanceTiming> timing(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& node = *ranked[r];
    timing[r].id = node.id;
    timing[r].chip = node.chip;
    timing[r].array = node.array;
    timing[r].bytes_config = node.bytes_config;
    timing[r].bytes_in = node.bytes_in;
    timing[r].bytes_out = node.bytes_out;
  }

  auto finish = [&] {
    RunTrace trace;
    trace.instances = std::move(timing);
    std::sort(trace.instances.begin(), trace.instances.end(), [](auto& a, auto& b) { return a.id < b.id; });
    return trace;
  };

  if (options.serial) {
    double t = 0;
    for (std::size_t r = 0; r < n; ++r) {
      auto& tm = timing[r];
      tm.pre_start = t;
      tm.pre_end = t += ranked[r]->pre;
      tm.exec_start = t;
      tm.exec_end = t += ranked[r]->exec;
      tm.post_start = t;
      tm.post_end = t += ranked[r]->post;
    }
    return finish();
  }

  std::vector<std::vector<std::size_t>> successors(n);
  std::vector<std::size_t> missing(n, 0);
  for (const auto& [from, to] : edges) {
    successors[rank_of.at(from)].push_back(rank_of.at(to));
    ++missing[rank_of.at(to)];
  }

  RankQueue pre_ready, post_ready;
  std::map<std::size_t, RankQueue> exec_ready;
  std::map<std::size_t, bool> chip_busy;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  for (std::size_t r = 0; r < n; ++r) {
    if (missing[r] == 0) pre_ready.push(r);
  }
  const bool unlimited = options.host_workers == 0;
  std::size_t idle_workers = options.host_workers;
  std::size_t done = 0;
  double now = 0;

  auto dispatch = [&] {
    for (auto& [chip, queue] : exec_ready) {
      if (chip_busy[chip] || queue.empty()) continue;
      const auto r = queue.top();
      queue.pop();
      chip_busy[chip] = true;
      timing[r].exec_start = now;
      timing[r].exec_end = now + ranked[r]->exec;
      events.push({timing[r].exec_end, r, Stage::exec});
    }
    while ((unlimited || idle_workers > 0) && (!post_ready.empty() || !pre_ready.empty())) {
      const bool take_post =
          !post_ready.empty() && (pre_ready.empty() || post_ready.top() <= pre_ready.top());
      auto& queue = take_post ? post_ready : pre_ready;
      const auto r = queue.top();
      queue.pop();
      if (!unlimited) --idle_workers;
      if (take_post) {
        timing[r].post_start = now;
        timing[r].post_end = now + ranked[r]->post;
        events.push({timing[r].post_end, r, Stage::post});
      } else {
        timing[r].pre_start = now;
        timing[r].pre_end = now + ranked[r]->pre;
        events.push({timing[r].pre_end, r, Stage::pre});
      }
    }
  };

  dispatch();
  while (done < n) {
    if (events.empty()) throw Error(ErrorCode::DeadlockDetected, "schedule stalled with pending instances");
    now = events.top().time;
    while (!events.empty() && events.top().time == now) {
      const auto ev = events.top();
      events.pop();
      const auto r = ev.rank;
      switch (ev.stage) {
        case Stage::pre:
          if (!unlimited) ++idle_workers;
          exec_ready[ranked[r]->chip].push(r);
          break;
        case Stage::exec:
          chip_busy[ranked[r]->chip] = false;
          post_ready.push(r);
          break;
        case Stage::post:
          if (!unlimited) ++idle_workers;
          ++done;
          for (auto s : successors[r]) {
            if (--missing[s] == 0) pre_ready.push(s);
          }
          break;
      }
    }
    dispatch();
  }
  return finish();
}

}  // namespace anamac
