#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ocs/domain.hpp"
#include "ocs/rng.hpp"

namespace ocs {

/// Dense feed-forward network: tanh hidden layers, linear output. All
/// parameters live in one flat buffer; layer l stores its weight matrix
/// (out x in, column-major) followed by its bias.
class Mlp {
 public:
  /// Post-activation values of every layer; front() is the input.
  struct Tape {
    std::vector<std::vector<double>> activations;
  };

  Mlp() = default;
  Mlp(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output);

  std::size_t input_size() const { return widths_.front(); }
  std::size_t output_size() const { return widths_.back(); }
  std::size_t layer_count() const { return widths_.size() - 1; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Orthogonal weights scaled by `hidden_gain` (hidden layers) and
  /// `output_gain` (last layer); zero biases.
  void init_orthogonal(Rng& rng, double hidden_gain, double output_gain);

  std::vector<double> forward(std::span<const double> x, Tape* tape = nullptr) const;

  /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
  void backward(const Tape& tape, std::span<const double> grad_output, std::span<double> grads) const;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }

  std::vector<std::size_t> widths_{0};
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Categorical distribution over nodes with infeasible entries removed.
struct Categorical {
  std::vector<double> probs;      // exactly 0 where masked out
  std::vector<double> log_probs;  // -inf where masked out
};

/// Throws NoFeasibleAction when no entry is masked in.
Categorical masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask);

struct ActionSample {
  NodeId action = 0;
  double log_prob = 0.0;
};

ActionSample sample(const Categorical& dist, Rng& rng);
/// Most probable action, lowest index on ties.
NodeId greedy_action(const Categorical& dist);

double entropy(const Categorical& dist);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam step. Throws InvalidArgument on a shape mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

/// Actor and critic networks with their optimizer state.
struct PolicyParams {
  std::size_t node_count = 0;
  Mlp actor;   // state -> one logit per node
  Mlp critic;  // state -> value
  AdamState actor_opt;
  AdamState critic_opt;

  static PolicyParams create(std::size_t node_count, const std::vector<int>& hidden, std::uint64_t seed);
};

/// Masked action distribution for a normalized state.
Categorical actor_forward(const PolicyParams& params, std::span<const double> state,
                          std::span<const std::uint8_t> mask);
double critic_forward(const PolicyParams& params, std::span<const double> state);

// Checkpoint: "OCSCKPT1" magic, u32 version, u32 node count, u32 input width,
// u32 hidden layer count, u32 widths, u64 layout hash, then little-endian
// f64 blocks for actor and critic parameters and both Adam states.
std::uint64_t layout_hash(std::size_t node_count, std::size_t input_width, const std::vector<std::size_t>& hidden);
std::string serialize(const PolicyParams& params);
PolicyParams deserialize(const std::string& bytes);
void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ocs
