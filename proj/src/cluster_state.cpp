#include "ocs/cluster_state.hpp"

#include <algorithm>
#include <set>

namespace ocs {

NodeId ClusterState::upgrading_node() const {
  for (const auto& n : nodes)
    if (n.upgrade_phase == UpgradePhase::Upgrading) return n.id;
  return -1;
}

bool is_feasible(const ClusterState& state, const NodeRecord& node, const TaskRecord& task) {
  if (node.upgrade_phase == UpgradePhase::Upgrading) return false;
  if (node.cpu_free < task.cpu_req || node.mem_free < task.mem_req) return false;
  if (!node.has_image(task.image_req) && !node.is_downloading(task.image_req))
    return node.storage_free >= state.image(task.image_req).size;
  return true;
}

std::vector<NodeId> feasible_nodes(const ClusterState& state, const TaskRecord& task) {
  std::vector<NodeId> out;
  for (const auto& n : state.nodes)
    if (is_feasible(state, n, task)) out.push_back(n.id);
  return out;
}

int concurrent_uplinks(const ClusterState& state, NodeId node) {
  int count = 1;
  for (const auto& [id, p] : state.in_flight)
    if (p.node == node && p.transmit_end > state.clock) ++count;
  return count;
}

LatencyBreakdown evaluate_placement(const ClusterState& state, const TaskRecord& task, NodeId node_id,
                                    bool redecision) {
  const NodeRecord& node = state.node(node_id);
  double comm = 0.0;
  if (!redecision) {
    double gain_snr = snr(state.channel, distance(task.position, node.position), node.bandwidth);
    double rate = uplink_rate(node.bandwidth, concurrent_uplinks(state, node_id), gain_snr);
    comm = comm_latency(task.data_size, rate);
  }
  double down = download_latency(node, state.image(task.image_req));
  double comp = comp_latency(task.work, node.cpu_freq);
  return total_latency(comm, down, comp);
}

std::vector<std::string> check_invariants(const ClusterState& state) {
  std::vector<std::string> out;
  int upgrading = 0;
  std::set<TaskId> placed;
  for (const auto& n : state.nodes) {
    const std::string tag = "node " + std::to_string(n.id) + ": ";
    if (n.upgrade_phase == UpgradePhase::Upgrading) {
      ++upgrading;
      if (!n.running.empty()) out.push_back(tag + "upgrading with running tasks");
    }
    double cpu = n.cpu_free, mem = n.mem_free;
    for (TaskId t : n.running) {
      cpu += state.task(t).cpu_req;
      mem += state.task(t).mem_req;
      auto it = state.in_flight.find(t);
      if (it == state.in_flight.end() || it->second.node != n.id)
        out.push_back(tag + "running task " + std::to_string(t) + " not in flight here");
      if (!placed.insert(t).second) out.push_back("task " + std::to_string(t) + " on two nodes");
    }
    if (cpu != n.cpu_capacity) out.push_back(tag + "cpu accounting");
    if (mem != n.mem_capacity) out.push_back(tag + "memory accounting");
    if (n.cpu_free < 0.0 || n.cpu_free > n.cpu_capacity) out.push_back(tag + "cpu_free out of range");
    if (n.mem_free < 0.0 || n.mem_free > n.mem_capacity) out.push_back(tag + "mem_free out of range");
    if (n.storage_free < 0.0 || n.storage_free > n.storage_capacity)
      out.push_back(tag + "storage_free out of range");

    double stored = 0.0;
    for (ImageId i : n.cached_images) stored += state.image(i).size;
    for (const auto& d : n.download_queue) stored += state.image(d.image).size;
    if (stored > n.storage_capacity) out.push_back(tag + "storage bound");
    if (stored + n.storage_free != n.storage_capacity) out.push_back(tag + "storage accounting");
  }
  if (upgrading > 1) out.push_back("more than one node upgrading");
  if (placed.size() != state.in_flight.size()) out.push_back("in-flight tasks missing from nodes");
  for (TaskId t : state.pending)
    if (state.in_flight.count(t)) out.push_back("task " + std::to_string(t) + " pending and in flight");
  return out;
}

}  // namespace ocs
