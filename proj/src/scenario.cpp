#include "ocs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ocs {

namespace {

double snap(double value, double quantum, Range r) {
  double q = std::round(value / quantum) * quantum;
  // Keep the snapped value inside the configured range.
  if (q < r.min) q += quantum;
  if (q > r.max) q -= quantum;
  return std::clamp(q, r.min, r.max);
}

double draw(Rng& rng, Range r) { return r.min == r.max ? r.min : rng.uniform(r.min, r.max); }

}  // namespace

double arrival_interval(const ScenarioConfig& cfg) {
  return cfg.node_count * cfg.upgrade_duration_s / cfg.task_count;
}

ImageId sample_image(const ScenarioConfig& cfg, Rng& rng) {
  const double count = cfg.image_count;
  double x = rng.normal(cfg.image_popularity_mean_frac * count, cfg.image_popularity_std_frac * count);
  double id = std::clamp(std::round(x), 1.0, count);
  return static_cast<ImageId>(id) - 1;
}

Cluster generate_cluster(const ScenarioConfig& cfg) {
  require_valid(cfg);
  Rng rng(cfg.seed, Stream::Cluster);
  Cluster c;
  c.area_side = area_side(cfg);

  c.images.reserve(cfg.image_count);
  for (int i = 0; i < cfg.image_count; ++i)
    c.images.push_back({i, snap(draw(rng, cfg.image_size_gbit), kStorageQuantum, cfg.image_size_gbit)});

  c.nodes.reserve(cfg.node_count);
  for (int n = 0; n < cfg.node_count; ++n) {
    NodeRecord node;
    node.id = n;
    node.position = {rng.uniform(0.0, c.area_side), rng.uniform(0.0, c.area_side)};
    node.cpu_capacity = snap(draw(rng, cfg.node_cpu), 1.0, cfg.node_cpu);
    node.cpu_freq = draw(rng, cfg.node_freq_ghz);
    node.mem_capacity = snap(draw(rng, cfg.node_mem_gb), kResourceQuantum, cfg.node_mem_gb);
    node.storage_capacity = snap(draw(rng, cfg.node_storage_gbit), kStorageQuantum, cfg.node_storage_gbit);
    node.bandwidth = draw(rng, cfg.node_bandwidth_mbps);
    node.cpu_free = node.cpu_capacity;
    node.mem_free = node.mem_capacity;
    node.storage_free = node.storage_capacity;

    std::vector<ImageId> catalog(cfg.image_count);
    std::iota(catalog.begin(), catalog.end(), 0);
    std::shuffle(catalog.begin(), catalog.end(), rng.engine());
    int placed = 0;
    for (ImageId img : catalog) {
      if (placed == cfg.initial_cached_images) break;
      double size = c.images[img].size;
      if (size > node.storage_free) continue;
      node.storage_free -= size;
      node.cached_images.push_back(img);
      ++placed;
    }
    std::sort(node.cached_images.begin(), node.cached_images.end());
    c.nodes.push_back(std::move(node));
  }
  return c;
}

std::vector<TaskRecord> generate_tasks(const ScenarioConfig& cfg, const Cluster& cluster,
                                       std::uint64_t seed) {
  require_valid(cfg);
  Rng rng(seed, Stream::Tasks);
  const double interval = arrival_interval(cfg);
  const double tx_power = dbm_to_watts(cfg.tx_power_dbm);
  std::vector<TaskRecord> tasks;
  tasks.reserve(cfg.task_count);
  for (int k = 0; k < cfg.task_count; ++k) {
    TaskRecord t;
    t.id = k;
    t.position = {rng.uniform(0.0, cluster.area_side), rng.uniform(0.0, cluster.area_side)};
    t.cpu_req = snap(draw(rng, cfg.task_cpu), kResourceQuantum, cfg.task_cpu);
    t.mem_req = snap(draw(rng, cfg.task_mem_gb), kResourceQuantum, cfg.task_mem_gb);
    t.work = draw(rng, cfg.task_work_gcycles);
    t.data_size = kilobytes_to_megabits(draw(rng, cfg.task_data_kb));
    t.image_req = sample_image(cfg, rng);
    t.arrival_time = k * interval;
    t.tx_power = tx_power;
    tasks.push_back(t);
  }
  return tasks;
}

Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  Scenario s;
  s.cfg = cfg;
  s.cluster = generate_cluster(cfg);
  s.tasks = generate_tasks(cfg, s.cluster, seed);
  return s;
}

}  // namespace ocs
