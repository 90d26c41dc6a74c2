#pragma once

#include <cstdint>
#include <vector>

#include "ocs/domain.hpp"
#include "ocs/rng.hpp"

namespace ocs {

/// Static cluster: nodes with their initial image caches plus the image
/// catalog. Drawn from cfg.seed alone, so every episode seed replays a new
/// task stream against the same cluster.
struct Cluster {
  std::vector<NodeRecord> nodes;
  std::vector<ImageRecord> images;
  double area_side = 0.0;  // m
};

struct Scenario {
  ScenarioConfig cfg;
  Cluster cluster;
  std::vector<TaskRecord> tasks;  // ordered by arrival
};

// Resource quantities are snapped to binary fractions so that debit/credit
// sequences on a node are exact in double precision.
inline constexpr double kResourceQuantum = 1.0 / 64.0;
inline constexpr double kStorageQuantum = 1.0 / 1024.0;

Cluster generate_cluster(const ScenarioConfig& cfg);
std::vector<TaskRecord> generate_tasks(const ScenarioConfig& cfg, const Cluster& cluster,
                                       std::uint64_t seed);
Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Image id drawn from a normal over 1..|I| (rounded, clamped), shifted to 0-based.
ImageId sample_image(const ScenarioConfig& cfg, Rng& rng);

/// Seconds between consecutive arrivals: the task stream spans the rolling
/// upgrade window of node_count * upgrade_duration.
double arrival_interval(const ScenarioConfig& cfg);

}  // namespace ocs
