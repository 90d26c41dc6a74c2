#pragma once

#include <span>
#include <string_view>

#include "ocs/cluster_state.hpp"
#include "ocs/rng.hpp"

namespace ocs {

/// Kubernetes-style comparison policies plus the learned scheduler.
enum class Policy { Eq, Rb, La, Il, Ocs };

const char* to_string(Policy policy);
Policy parse_policy(std::string_view name);

struct ScoredNode {
  NodeId node = 0;
  double score = 0.0;  // in [0, 1]
};

/// 1 - |cpu_util - mem_util| after placing the task.
double balanced_score(const NodeRecord& node, const TaskRecord& task);
/// Mean free CPU and memory fraction after placing the task.
double least_allocated_score(const NodeRecord& node, const TaskRecord& task);

// Each selector requires a nonempty feasible set and returns one of its members.
NodeId eq_select(std::span<const NodeId> feasible, Rng& rng);
NodeId rb_select(std::span<const NodeId> feasible, const ClusterState& state, const TaskRecord& task);
NodeId la_select(std::span<const NodeId> feasible, const ClusterState& state, const TaskRecord& task);
/// Least-allocated among feasible nodes already holding the image, or among
/// all feasible nodes when none does.
NodeId il_select(std::span<const NodeId> feasible, const ClusterState& state, const TaskRecord& task);

}  // namespace ocs
