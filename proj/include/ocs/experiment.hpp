#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocs/baselines.hpp"
#include "ocs/nn.hpp"
#include "ocs/simulator.hpp"

namespace ocs {

/// Chooses a node for the task in `obs`. Implementations never return a
/// masked-out node.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual NodeId choose(const ClusterState& state, const Observation& obs) = 0;
  virtual Policy policy() const = 0;
};

/// Baseline scheduler; `seed` feeds the EQ random stream.
std::unique_ptr<Scheduler> make_baseline(Policy policy, std::uint64_t seed);

/// Learned scheduler. Greedy picks the most probable node; otherwise the
/// action is sampled from the seeded stream.
std::unique_ptr<Scheduler> make_ocs(PolicyParams params, bool greedy = true, std::uint64_t seed = 0);

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<EventLogRow> log;
};

EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed, Scheduler& scheduler,
                          int episode_index = 0, const EventObserver& observer = {});

void write_event_log_csv(std::ostream& out, std::span<const EventLogRow> rows);
void write_metrics_csv(std::ostream& out, const EpisodeMetrics& metrics);
void write_nodes_csv(std::ostream& out, std::span<const NodeRecord> nodes);
void write_tasks_csv(std::ostream& out, std::span<const TaskRecord> tasks);

enum class SweepVariable { Nodes, Tasks };

const char* to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::Nodes;
  std::vector<int> values;
  std::vector<Policy> policies;
  int seeds = 1;  // task-stream seeds 1..seeds per cell
};

std::vector<std::string> validate_sweep(const SweepSpec& spec);

struct CompareRow {
  SweepVariable variable = SweepVariable::Nodes;
  int value = 0;
  Policy policy = Policy::Eq;
  std::uint64_t seed = 0;
  LatencyBreakdown mean;
};

/// Checkpoint path for a learned policy at a given node count.
using CheckpointLookup = std::function<std::filesystem::path(int node_count)>;

/// Default layout: <dir>/ocs_n<N>.ckpt
CheckpointLookup checkpoint_dir_lookup(const std::filesystem::path& dir);

/// One episode per (value, policy, seed) cell on the `base` cluster with the
/// swept quantity overridden. Writes compare_<var>.csv with every row and
/// one <var>_<component>.csv table per latency component (rows: swept
/// value; columns: policies; cells: seed means). Throws MissingCheckpoint
/// naming every cell whose checkpoint is absent.
std::vector<CompareRow> run_compare(const SweepSpec& spec, const ScenarioConfig& base,
                                    const CheckpointLookup& checkpoints, const std::filesystem::path& out_dir);

void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows);
std::vector<CompareRow> read_compare_csv(std::istream& in);

inline constexpr const char* kLatencyComponents[] = {"comm", "download", "compute", "total"};

/// Seed-mean of one latency component per (value, policy), in sweep order.
struct ComponentTable {
  SweepVariable variable = SweepVariable::Nodes;
  std::string component;
  std::vector<int> values;
  std::vector<Policy> policies;
  std::vector<std::vector<double>> means;  // [value][policy]
};

std::vector<ComponentTable> component_tables(std::span<const CompareRow> rows);

/// One SVG line chart per component: plot_<var>_<component>.svg.
std::vector<std::filesystem::path> emit_plots(std::span<const CompareRow> rows, const std::filesystem::path& out_dir);

/// Standalone SVG line chart (one series per policy).
std::string render_line_chart(const ComponentTable& table);

}  // namespace ocs
