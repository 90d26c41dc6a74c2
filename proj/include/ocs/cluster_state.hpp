#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ocs/domain.hpp"
#include "ocs/latency.hpp"

namespace ocs {

struct Placement {
  NodeId node = 0;
  double decided_at = 0.0;
  double transmit_end = 0.0;
  double finish_time = 0.0;
  LatencyBreakdown latency;
};

/// Mutable state of one rolling-upgrade episode.
struct ClusterState {
  ScenarioConfig cfg;
  ChannelParams channel;
  std::vector<NodeRecord> nodes;
  std::vector<ImageRecord> images;
  std::vector<TaskRecord> tasks;  // indexed by TaskId

  double clock = 0.0;
  std::int64_t slot_index = 0;
  std::deque<TaskId> pending;   // arrived, awaiting a decision
  std::deque<TaskId> upcoming;  // not yet arrived, in arrival order
  std::map<TaskId, Placement> in_flight;
  std::vector<std::uint8_t> evicted;  // per task: pending re-decision after a drain
  std::size_t upgrade_cursor = 0;
  double upgrade_finish_time = std::numeric_limits<double>::infinity();
  std::vector<std::pair<TaskId, Placement>> completed;  // in completion order
  double min_freq = 0.0;

  const NodeRecord& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  const TaskRecord& task(TaskId id) const { return tasks.at(static_cast<std::size_t>(id)); }
  const ImageRecord& image(ImageId id) const { return images.at(static_cast<std::size_t>(id)); }

  /// Node currently upgrading, or -1.
  NodeId upgrading_node() const;
};

/// Capacity (CPU, memory), upgrade and storage test for one node.
bool is_feasible(const ClusterState& state, const NodeRecord& node, const TaskRecord& task);

/// Ids of nodes that can host `task` right now, ascending.
std::vector<NodeId> feasible_nodes(const ClusterState& state, const TaskRecord& task);

/// Transmissions to `node` still in progress at the clock, plus the new one.
int concurrent_uplinks(const ClusterState& state, NodeId node);

/// Latency the task would see if placed on `node` at the current clock.
/// Re-decisions of drained tasks do not pay the uplink again.
LatencyBreakdown evaluate_placement(const ClusterState& state, const TaskRecord& task, NodeId node,
                                    bool redecision);

/// Broken structural invariants (resource accounting, storage bound,
/// rolling-upgrade exclusivity, placement uniqueness). Empty when sound.
std::vector<std::string> check_invariants(const ClusterState& state);

}  // namespace ocs
