#include "ocs/baselines.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ocs {

const char* to_string(Policy policy) {
  switch (policy) {
    case Policy::Eq: return "eq";
    case Policy::Rb: return "rb";
    case Policy::La: return "la";
    case Policy::Il: return "il";
    case Policy::Ocs: return "ocs";
  }
  return "unknown";
}

Policy parse_policy(std::string_view name) {
  if (name == "eq") return Policy::Eq;
  if (name == "rb") return Policy::Rb;
  if (name == "la") return Policy::La;
  if (name == "il") return Policy::Il;
  if (name == "ocs") return Policy::Ocs;
  throw Error(ErrorCode::InvalidArgument, "unknown policy '" + std::string(name) + "'");
}

double balanced_score(const NodeRecord& node, const TaskRecord& task) {
  double cpu_util = (node.cpu_capacity - node.cpu_free + task.cpu_req) / node.cpu_capacity;
  double mem_util = (node.mem_capacity - node.mem_free + task.mem_req) / node.mem_capacity;
  return 1.0 - std::abs(cpu_util - mem_util);
}

double least_allocated_score(const NodeRecord& node, const TaskRecord& task) {
  double cpu = (node.cpu_free - task.cpu_req) / node.cpu_capacity;
  double mem = (node.mem_free - task.mem_req) / node.mem_capacity;
  return 0.5 * (cpu + mem);
}

namespace {

void require_nonempty(std::span<const NodeId> feasible) {
  if (feasible.empty()) throw Error(ErrorCode::NoFeasibleAction, "empty feasible set");
}

// Highest score wins; strict comparison keeps the lowest id on ties.
template <class Score>
NodeId argmax_lowest_id(std::span<const NodeId> feasible, Score score) {
  NodeId best = feasible.front();
  double best_score = score(best);
  for (NodeId n : feasible.subspan(1)) {
    double s = score(n);
    if (s > best_score || (s == best_score && n < best)) {
      best = n;
      best_score = s;
    }
  }
  return best;
}

}  // namespace

NodeId eq_select(std::span<const NodeId> feasible, Rng& rng) {
  require_nonempty(feasible);
  return feasible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(feasible.size()) - 1))];
}

NodeId rb_select(std::span<const NodeId> feasible, const ClusterState& state, const TaskRecord& task) {
  require_nonempty(feasible);
  return argmax_lowest_id(feasible, [&](NodeId n) { return balanced_score(state.node(n), task); });
}

NodeId la_select(std::span<const NodeId> feasible, const ClusterState& state, const TaskRecord& task) {
  require_nonempty(feasible);
  return argmax_lowest_id(feasible, [&](NodeId n) { return least_allocated_score(state.node(n), task); });
}

NodeId il_select(std::span<const NodeId> feasible, const ClusterState& state, const TaskRecord& task) {
  require_nonempty(feasible);
  std::vector<NodeId> local;
  for (NodeId n : feasible)
    if (state.node(n).has_image(task.image_req)) local.push_back(n);
  if (local.empty()) return la_select(feasible, state, task);
  return la_select(local, state, task);
}

}  // namespace ocs
