#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ocs {

using NodeId = std::int32_t;
using TaskId = std::int32_t;
using ImageId = std::int32_t;

enum class ErrorCode {
  InvalidConfig,
  InvalidArgument,
  ConstraintViolation,
  Deadlock,
  EpisodeNotDone,
  UpgradeConflict,
  NoFeasibleAction,
  NonFiniteLoss,
  Io,
  MissingCheckpoint,
};

const char* to_string(ErrorCode code);

/// Exception type for every failure raised by the library. The code is
/// stable and is what the CLI prints on its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;
};

double distance(Position a, Position b);

enum class UpgradePhase : std::uint8_t { NotUpgraded = 0, Upgrading = 1, Upgraded = 2 };

struct QueuedDownload {
  ImageId image = 0;
  double remaining_gbit = 0.0;
};

struct NodeRecord {
  NodeId id = 0;
  double cpu_capacity = 0.0;      // cores
  double mem_capacity = 0.0;      // GB
  double storage_capacity = 0.0;  // Gb
  double cpu_freq = 0.0;          // GHz
  double bandwidth = 0.0;         // Mb/s
  Position position;

  double cpu_free = 0.0;
  double mem_free = 0.0;
  double storage_free = 0.0;
  std::vector<ImageId> cached_images;  // sorted, unique
  std::vector<QueuedDownload> download_queue;  // FIFO
  UpgradePhase upgrade_phase = UpgradePhase::NotUpgraded;
  std::vector<TaskId> running;  // sorted

  bool has_image(ImageId image) const;
  bool is_downloading(ImageId image) const;
};

struct TaskRecord {
  TaskId id = 0;
  double cpu_req = 0.0;    // cores
  double mem_req = 0.0;    // GB
  double work = 0.0;       // gigacycles
  double data_size = 0.0;  // Mb
  ImageId image_req = 0;
  Position position;
  double arrival_time = 0.0;  // s
  double tx_power = 0.0;      // W
};

struct ImageRecord {
  ImageId id = 0;
  double size = 0.0;  // Gb
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const Range&) const = default;
};

/// Full generative description of one experiment. Sizes given by users in
/// KB are converted to megabits at generation time (1 KB = 8e-3 Mb).
struct ScenarioConfig {
  int node_count = 15;
  int task_count = 200;
  int image_count = 20;

  // Side of the square region at `area_reference_nodes` nodes. The side
  // grows with sqrt(node_count / area_reference_nodes) so density is fixed.
  double area_side_m = 100.0;
  int area_reference_nodes = 15;

  Range node_cpu{80.0, 120.0};          // cores
  Range node_freq_ghz{15.0, 35.0};
  Range node_mem_gb{70.0, 130.0};
  Range node_storage_gbit{40.0, 80.0};
  Range node_bandwidth_mbps{100.0, 200.0};

  Range task_data_kb{10.0, 10000.0};
  Range task_work_gcycles{5.0, 50.0};
  Range task_cpu{1.0, 8.0};
  Range task_mem_gb{0.5, 8.0};

  Range image_size_gbit{0.4, 4.0};
  double image_popularity_mean_frac = 0.5;  // mean id = frac * |I|
  double image_popularity_std_frac = 1.0 / 6.0;
  int initial_cached_images = 3;

  double tx_power_dbm = 23.0;
  double noise_dbm_per_hz = -174.0;
  double path_loss_exponent = 4.0;

  double upgrade_duration_s = 30.0;
  double slot_s = 1.0;
  std::uint64_t seed = 1;

  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig default_scenario();

/// Effective side of the simulation square for cfg.node_count.
double area_side(const ScenarioConfig& cfg);

struct Hyperparams {
  double actor_lr = 1e-4;
  double critic_lr = 3e-4;
  double gamma = 0.98;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int batch_size = 32;
  int epochs = 10;
  std::vector<int> hidden{128, 64};
  int episodes = 1000;
  double entropy_coef = 0.0;

  bool operator==(const Hyperparams&) const = default;
};

/// Every violated invariant of `cfg`; empty when valid.
std::vector<std::string> validate_scenario(const ScenarioConfig& cfg);
std::vector<std::string> validate_hyperparams(const Hyperparams& hp);

/// Throws Error(InvalidConfig) listing all violations.
void require_valid(const ScenarioConfig& cfg);

/// Slowest CPU frequency in the cluster (GHz).
double min_frequency(std::span<const NodeRecord> nodes);

// Unit conversions.
double dbm_to_watts(double dbm);
double kilobytes_to_megabits(double kb);
constexpr double kMegabitsPerGigabit = 1000.0;

// Flat key=value persistence; '#' starts a comment, unknown keys are errors.
std::string to_text(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_text(const std::string& text);
void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path);
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::string to_text(const Hyperparams& hp);
Hyperparams hyperparams_from_text(const std::string& text);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace ocs
