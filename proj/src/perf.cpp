#include "anamac/perf.hpp"

#include <algorithm>
#include <cmath>

#include "anamac/config.hpp"

namespace anamac {

void LinkBudget::validate() const {
  const bool ok = std::isfinite(bandwidth) && bandwidth > 0 && protocol_efficiency > 0 &&
                  protocol_efficiency <= 1 && per_run_overhead >= 0 && host_pre >= 0 && host_post >= 0 &&
                  clock_period > 0;
  if (!ok) throw Error(ErrorCode::InvalidParams, "invalid link budget");
}

LinkBudget LinkBudget::from_config(const KeyValueConfig& kv) {
  LinkBudget l;
  l.bandwidth = kv.get_double("bandwidth", l.bandwidth);
  l.protocol_efficiency = kv.get_double("protocol_efficiency", l.protocol_efficiency);
  l.per_run_overhead = kv.get_double("per_run_overhead", l.per_run_overhead);
  l.host_pre = kv.get_double("host_pre", l.host_pre);
  l.host_post = kv.get_double("host_post", l.host_post);
  l.clock_period = kv.get_double("clock_period", l.clock_period);
  l.validate();
  return l;
}

LinkBudget LinkBudget::load(const std::filesystem::path& path) { return from_config(KeyValueConfig::load(path)); }

std::size_t CostModel::bytes_config(std::size_t, std::size_t) const { return kArrayRows * kArrayCols; }

std::size_t CostModel::bytes_in(std::size_t, std::size_t batch, std::uint32_t num_sends) const {
  return kArrayRows * batch * num_sends;
}

std::size_t CostModel::bytes_out(std::size_t, std::size_t batch) const { return kArrayCols * batch; }

std::size_t CostModel::config_repeats(std::size_t batch) const {
  return hw_version == HwVersion::V1 ? std::max<std::size_t>(1, batch) : 1;
}

double CostModel::event_time(std::size_t rows, std::size_t batch, const HwParams& params, double clock_period) const {
  return static_cast<double>(batch) * params.num_sends * static_cast<double>(rows) * params.wait_between_events *
         clock_period;
}

double time_per_run(const TileShape& tile, std::size_t batch, const HwParams& params, const LinkBudget& link,
                    const CostModel& cost) {
  const double bytes = static_cast<double>(cost.bytes_config(tile.physical_rows(), tile.cols)) *
                           static_cast<double>(cost.config_repeats(batch)) +
                       static_cast<double>(cost.bytes_in(tile.physical_rows(), batch, params.num_sends)) +
                       static_cast<double>(cost.bytes_out(tile.cols, batch));
  const double wire = bytes * 8.0 / (link.bandwidth * link.protocol_efficiency);
  const double events = cost.event_time(tile.physical_rows(), batch, params, link.clock_period);
  return link.per_run_overhead + std::max(wire, events);
}

ScheduleNode tile_stage_costs(const TileShape& tile, std::size_t batch, const HwParams& params,
                              const LinkBudget& link, const CostModel& cost) {
  ScheduleNode node;
  node.pre = link.host_pre;
  node.exec = time_per_run(tile, batch, params, link, cost);
  node.post = link.host_post;
  node.bytes_config = cost.bytes_config(tile.physical_rows(), tile.cols) * cost.config_repeats(batch);
  node.bytes_in = cost.bytes_in(tile.physical_rows(), batch, params.num_sends);
  node.bytes_out = cost.bytes_out(tile.cols, batch);
  return node;
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::v1_1gbe: return "v1_1gbe";
    case Scenario::v2_1gbe: return "v2_1gbe";
    case Scenario::sim_8g: return "sim_8g";
  }
  return "?";
}

Scenario scenario_from_string(std::string_view name) {
  for (auto s : {Scenario::v1_1gbe, Scenario::v2_1gbe, Scenario::sim_8g}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidParams, "unknown scenario " + std::string(name));
}

ScenarioSpec scenario(Scenario id, const std::filesystem::path& config_dir) {
  ScenarioSpec s;
  s.id = id;
  switch (id) {
    case Scenario::v1_1gbe:
      s.link = LinkBudget::load(config_dir / "link_1g.cfg");
      s.cost.hw_version = HwVersion::V1;
      s.params = HwParams{6, 25};
      break;
    case Scenario::v2_1gbe:
      s.link = LinkBudget::load(config_dir / "link_1g.cfg");
      s.cost.hw_version = HwVersion::V2;
      s.params = HwParams{1, 1};
      break;
    case Scenario::sim_8g:
      s.link = LinkBudget::load(config_dir / "link_8g.cfg");
      s.cost.hw_version = HwVersion::V2;
      s.params = HwParams{1, 1};
      break;
  }
  return s;
}

ScenarioSpec scenario(Scenario id) { return scenario(id, default_config_dir()); }

}  // namespace anamac
