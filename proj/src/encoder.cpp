#include "ocs/encoder.hpp"

#include <algorithm>

namespace ocs {

FeatureLayout FeatureLayout::for_width(std::size_t width) {
  if (width < kTaskFeatures || (width - kTaskFeatures) % kNodeBlocks != 0)
    throw Error(ErrorCode::InvalidArgument, "state width " + std::to_string(width) + " is not 8N+5");
  return FeatureLayout{(width - kTaskFeatures) / kNodeBlocks};
}

StateVector encode(const ClusterState& state, const TaskRecord& task) {
  const FeatureLayout layout{state.nodes.size()};
  StateVector v(layout.width(), 0.0);
  const ImageRecord& image = state.image(task.image_req);
  for (std::size_t n = 0; n < state.nodes.size(); ++n) {
    const NodeRecord& node = state.nodes[n];
    v[layout.cpu(n)] = node.cpu_free;
    v[layout.mem(n)] = node.mem_free;
    v[layout.storage(n)] = node.storage_free;
    v[layout.freq(n)] = node.cpu_freq;
    v[layout.bandwidth(n)] = node.bandwidth;
    v[layout.phase(n)] = static_cast<double>(node.upgrade_phase);
    v[layout.cached(n)] = node.has_image(task.image_req) ? 1.0 : 0.0;
    v[layout.download(n)] = download_latency(node, image);
  }
  v[layout.task_cpu()] = task.cpu_req;
  v[layout.task_mem()] = task.mem_req;
  v[layout.task_work()] = task.work;
  v[layout.task_data()] = task.data_size;
  v[layout.task_image()] = static_cast<double>(task.image_req + 1);
  return v;
}

StateVector normalize(const StateVector& raw, const ScenarioConfig& cfg) {
  const FeatureLayout layout = FeatureLayout::for_width(raw.size());
  const double download_scale =
      std::max(1.0, cfg.image_size_gbit.max * kMegabitsPerGigabit / cfg.node_bandwidth_mbps.min);
  StateVector v = raw;
  for (std::size_t n = 0; n < layout.nodes; ++n) {
    v[layout.cpu(n)] /= cfg.node_cpu.max;
    v[layout.mem(n)] /= cfg.node_mem_gb.max;
    v[layout.storage(n)] /= cfg.node_storage_gbit.max;
    v[layout.freq(n)] /= cfg.node_freq_ghz.max;
    v[layout.bandwidth(n)] /= cfg.node_bandwidth_mbps.max;
    v[layout.phase(n)] /= 2.0;
    v[layout.download(n)] /= download_scale;
  }
  v[layout.task_cpu()] /= cfg.task_cpu.max;
  v[layout.task_mem()] /= cfg.task_mem_gb.max;
  v[layout.task_work()] /= cfg.task_work_gcycles.max;
  v[layout.task_data()] /= kilobytes_to_megabits(cfg.task_data_kb.max);
  v[layout.task_image()] /= cfg.image_count;
  return v;
}

double reward(const TaskRecord& task, const LatencyBreakdown& latency, double min_freq) {
  return task.work / min_freq - latency.total;
}

ActionMask mask(const ClusterState& state, const TaskRecord& task) {
  ActionMask m(state.nodes.size(), 0);
  for (const auto& n : state.nodes) m[static_cast<std::size_t>(n.id)] = is_feasible(state, n, task) ? 1 : 0;
  return m;
}

}  // namespace ocs
