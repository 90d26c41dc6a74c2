#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ocs/cluster_state.hpp"

namespace ocs {

using StateVector = std::vector<double>;
using ActionMask = std::vector<std::uint8_t>;  // 1 = feasible

/// Index map of the flat state vector for a cluster of `nodes` nodes:
/// free CPU, free memory, free storage, frequency, bandwidth, upgrade phase,
/// image-present flag and image download time (one block of `nodes` entries
/// each), then the five task features.
struct FeatureLayout {
  std::size_t nodes = 0;

  static constexpr std::size_t kNodeBlocks = 8;
  static constexpr std::size_t kTaskFeatures = 5;

  std::size_t width() const { return kNodeBlocks * nodes + kTaskFeatures; }
  std::size_t cpu(std::size_t n) const { return n; }
  std::size_t mem(std::size_t n) const { return nodes + n; }
  std::size_t storage(std::size_t n) const { return 2 * nodes + n; }
  std::size_t freq(std::size_t n) const { return 3 * nodes + n; }
  std::size_t bandwidth(std::size_t n) const { return 4 * nodes + n; }
  std::size_t phase(std::size_t n) const { return 5 * nodes + n; }
  std::size_t cached(std::size_t n) const { return 6 * nodes + n; }
  std::size_t download(std::size_t n) const { return 7 * nodes + n; }
  std::size_t task_cpu() const { return 8 * nodes; }
  std::size_t task_mem() const { return 8 * nodes + 1; }
  std::size_t task_work() const { return 8 * nodes + 2; }
  std::size_t task_data() const { return 8 * nodes + 3; }
  std::size_t task_image() const { return 8 * nodes + 4; }

  static FeatureLayout for_width(std::size_t width);
};

inline std::size_t state_width(std::size_t nodes) { return FeatureLayout{nodes}.width(); }

/// Raw (unscaled) state for deciding `task`. The image feature is the
/// 1-based image id.
StateVector encode(const ClusterState& state, const TaskRecord& task);

/// Max-scaling by configured range maxima; phase by 2; image id by |I|;
/// download times by the slowest single image pull (floor 1 s).
StateVector normalize(const StateVector& raw, const ScenarioConfig& cfg);

/// Expected latency on the slowest node minus the realized latency.
double reward(const TaskRecord& task, const LatencyBreakdown& latency, double min_freq);

ActionMask mask(const ClusterState& state, const TaskRecord& task);

}  // namespace ocs
