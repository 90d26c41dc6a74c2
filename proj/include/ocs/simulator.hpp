#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ocs/cluster_state.hpp"
#include "ocs/encoder.hpp"
#include "ocs/scenario.hpp"

namespace ocs {

enum class EventKind {
  Arrival,
  Placement,
  Finish,
  DownloadComplete,
  Eviction,
  UpgradeBegin,
  UpgradeFinish,
};

const char* to_string(EventKind kind);

/// Called after every state change, for invariant monitors and tracing.
using EventObserver = std::function<void(const ClusterState&, EventKind)>;

struct Observation {
  TaskRecord task;
  bool redecision = false;  // task was drained off an upgrading node
  StateVector features;     // raw, see encode()
  ActionMask mask;
};

struct StepInfo {
  TaskId task = 0;
  NodeId node = 0;
  LatencyBreakdown latency;
  bool redecision = false;
};

struct StepOutcome {
  std::optional<Observation> observation;  // empty once done
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct EventLogRow {
  int episode = 0;
  int step = 0;
  double clock = 0.0;
  TaskId task = 0;
  NodeId node = 0;
  LatencyBreakdown latency;
  double reward = 0.0;
  bool evicted = false;  // this decision re-places a drained task
};

struct TaskLatencyRow {
  TaskId task = 0;
  NodeId node = 0;      // final placement
  int placements = 0;   // 1 + number of drains suffered
  LatencyBreakdown latency;  // summed over all placements of the task
};

struct EpisodeMetrics {
  std::vector<TaskLatencyRow> rows;  // ascending task id
  LatencyBreakdown mean;
};

/// Slotted rolling-upgrade environment. Decisions happen at slot boundaries;
/// task completions, image downloads and upgrade completions are processed
/// at their exact times in between. One instance is single-threaded.
class Simulator {
 public:
  Simulator() = default;

  /// Cluster from cfg.seed, task stream from `seed`.
  Observation reset(const ScenarioConfig& cfg, std::uint64_t seed);
  Observation reset(Scenario scenario);

  const ClusterState& state() const { return state_; }
  bool done() const { return done_; }
  const std::optional<Observation>& observation() const { return observation_; }

  /// Feasible nodes for the task awaiting a decision.
  std::vector<NodeId> feasible_nodes() const;

  /// Places the head pending task on `action` and runs the clock to the
  /// next decision point. Throws ConstraintViolation on an infeasible node.
  StepOutcome step(NodeId action);

  /// Drains the next node in index order and marks it upgrading.
  void begin_upgrade();
  /// Completes the active upgrade; requires its completion time to be reached.
  void finish_upgrade();

  /// Throws EpisodeNotDone before the episode ends.
  EpisodeMetrics episode_metrics() const;

  const std::vector<EventLogRow>& event_log() const { return log_; }

  void set_observer(EventObserver observer) { observer_ = std::move(observer); }
  void set_episode_index(int episode) { episode_ = episode; }

 private:
  void notify(EventKind kind) const;
  void admit_arrivals();
  void advance_to_decision();
  void tick();
  void drain_downloads(double dt);
  double next_internal_event() const;
  void finish_due_tasks();
  void maybe_begin_upgrade();
  bool all_finished() const;
  Observation make_observation() const;

  ClusterState state_;
  std::vector<TaskLatencyRow> task_rows_;
  std::vector<EventLogRow> log_;
  std::optional<Observation> observation_;
  EventObserver observer_;
  bool done_ = true;
  int episode_ = 0;
  int step_ = 0;
};

}  // namespace ocs
