#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "ocs/domain.hpp"
#include "ocs/nn.hpp"
#include "ocs/simulator.hpp"

namespace ocs {

/// One scheduling decision as seen by the learner. States are normalized.
struct Transition {
  StateVector state;
  ActionMask mask;
  NodeId action = 0;
  double reward = 0.0;
  StateVector next_state;  // empty at the terminal decision
  double log_prob = 0.0;
  double value = 0.0;
  bool done = false;
  TaskId task = 0;
  LatencyBreakdown latency;
};

using ReplayMemory = std::vector<Transition>;

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantage + value, the critic targets
};

/// Backward recursion A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
/// with delta_t = r_t + gamma * (1 - done_t) * V_{t+1} - V_t.
/// `values` holds T + 1 entries (the last one bootstraps the tail).
GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda);

double clip(double x, double lo, double hi);

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A) with rho = exp(new - old).
double clipped_objective(double log_prob_new, double log_prob_old, double advantage, double epsilon);

/// Mean squared error. Throws InvalidArgument on a length mismatch.
double value_loss(std::span<const double> values, std::span<const double> targets);

/// Samples one batch of the clipped-surrogate problem.
struct SurrogateSample {
  const StateVector* state = nullptr;
  const ActionMask* mask = nullptr;
  NodeId action = 0;
  double log_prob_old = 0.0;
  double advantage = 0.0;
};

/// Negated mean surrogate (minus entropy bonus) over `batch`; adds its
/// gradient with respect to the actor parameters into `grads`.
double policy_loss_and_grad(const Mlp& actor, std::span<const SurrogateSample> batch, double epsilon,
                            double entropy_coef, std::span<double> grads);

/// Mean squared critic error over `states`; adds the gradient into `grads`.
double value_loss_and_grad(const Mlp& critic, std::span<const StateVector* const> states,
                           std::span<const double> targets, std::span<double> grads);

/// Runs one episode on a freshly reset simulator, sampling actions from the
/// actor. Stores log-probabilities and values at collection time.
ReplayMemory collect_rollout(Simulator& env, const PolicyParams& params, Rng& rng);

struct TrainReportRow {
  int update_idx = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double mean_reward = 0.0;
  double mean_total_latency = 0.0;  // s, episode mean over tasks
  double mean_ratio = 1.0;          // new/old probability ratio after the update
  bool aborted = false;             // non-finite loss: parameters left untouched
};

/// Advantage estimation, normalization and `epochs` passes of shuffled
/// minibatch Adam updates on both networks.
TrainReportRow update(const ReplayMemory& memory, PolicyParams& params, const Hyperparams& hp, Rng& rng);

struct TrainResult {
  PolicyParams params;
  std::vector<TrainReportRow> report;
};

using TrainProgress = std::function<void(const TrainReportRow&)>;

/// Outer loop: reset, collect one episode, update. Episode e replays the
/// task stream seeded by training_episode_seed(seed, e) on the cfg cluster.
TrainResult train(const ScenarioConfig& cfg, const Hyperparams& hp, std::uint64_t seed,
                  const TrainProgress& progress = {});

/// Task-stream seed of training episode `episode`.
std::uint64_t training_episode_seed(std::uint64_t seed, int episode);

/// Normalized network input for an observation.
StateVector policy_input(const Observation& obs, const ScenarioConfig& cfg);

void write_train_report_csv(std::ostream& out, std::span<const TrainReportRow> rows);

}  // namespace ocs
