#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "anamac/chip.hpp"
#include "anamac/schedule.hpp"

namespace anamac {

class KeyValueConfig;

/// Host link and fixed costs of one chip run, in SI units.
struct LinkBudget {
  double bandwidth = 1e9;            // bit/s
  double protocol_efficiency = 1.0;  // usable fraction of the raw bandwidth
  double per_run_overhead = 0.0;     // s per execution
  double host_pre = 0.0;             // s of host preprocessing per execution
  double host_post = 0.0;            // s of host postprocessing per execution
  double clock_period = 8e-9;        // s per on-chip event slot

  void validate() const;
  static LinkBudget from_config(const KeyValueConfig& kv);
  static LinkBudget load(const std::filesystem::path& path);
};

/// Byte volumes of one run. Transfers cover the whole physical array: the
/// weight block is zero-padded to 256x256 and every row and column is sent.
struct CostModel {
  HwVersion hw_version = HwVersion::V2;

  std::size_t bytes_config(std::size_t rows, std::size_t cols) const;
  std::size_t bytes_in(std::size_t rows, std::size_t batch, std::uint32_t num_sends) const;
  std::size_t bytes_out(std::size_t cols, std::size_t batch) const;
  /// v1 rewrites the array for every batch entry.
  std::size_t config_repeats(std::size_t batch) const;
  /// batch * num_sends * rows * wait_between_events * clock_period.
  double event_time(std::size_t rows, std::size_t batch, const HwParams& params, double clock_period) const;
};

struct TileShape {
  std::size_t rows = kArrayRows;  // logical rows
  std::size_t cols = kArrayCols;
  bool signed_weights = false;

  std::size_t physical_rows() const { return signed_weights ? 2 * rows : rows; }
};

/// per_run_overhead + max(wire time, on-chip event time).
double time_per_run(const TileShape& tile, std::size_t batch, const HwParams& params, const LinkBudget& link,
                    const CostModel& cost);

/// Stage costs of one tile for the schedule simulator.
ScheduleNode tile_stage_costs(const TileShape& tile, std::size_t batch, const HwParams& params,
                              const LinkBudget& link, const CostModel& cost);

enum class Scenario { v1_1gbe, v2_1gbe, sim_8g };

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view name);

struct ScenarioSpec {
  Scenario id = Scenario::sim_8g;
  LinkBudget link;
  CostModel cost;
  HwParams params;
  std::size_t chips = 1;

  std::string_view name() const { return to_string(id); }
};

/// Scenario with link constants from link_1g.cfg / link_8g.cfg in `config_dir`.
ScenarioSpec scenario(Scenario id, const std::filesystem::path& config_dir);
ScenarioSpec scenario(Scenario id);

}  // namespace anamac
