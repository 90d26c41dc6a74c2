#include "ocs/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace ocs {

GaeResult gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double gamma, double lambda) {
  const std::size_t T = rewards.size();
  if (values.size() != T + 1 || dones.size() != T)
    throw Error(ErrorCode::InvalidArgument, "gae: expected T rewards, T dones and T+1 values");
  GaeResult out;
  out.advantages.assign(T, 0.0);
  out.returns.assign(T, 0.0);
  double running = 0.0;
  for (std::size_t t = T; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * live * values[t + 1] - values[t];
    running = delta + gamma * lambda * live * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

double clip(double x, double lo, double hi) { return std::max(std::min(x, hi), lo); }

double clipped_objective(double log_prob_new, double log_prob_old, double advantage, double epsilon) {
  const double ratio = std::exp(log_prob_new - log_prob_old);
  return std::min(ratio * advantage, clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage);
}

double value_loss(std::span<const double> values, std::span<const double> targets) {
  if (values.size() != targets.size()) throw Error(ErrorCode::InvalidArgument, "value_loss: length mismatch");
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += (values[i] - targets[i]) * (values[i] - targets[i]);
  return sum / static_cast<double>(values.size());
}

double policy_loss_and_grad(const Mlp& actor, std::span<const SurrogateSample> batch, double epsilon,
                            double entropy_coef, std::span<double> grads) {
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Mlp::Tape tape;
  std::vector<double> grad_logits(actor.output_size());
  for (const auto& s : batch) {
    const auto logits = actor.forward(*s.state, &tape);
    const Categorical dist = masked_softmax(logits, *s.mask);
    const auto a = static_cast<std::size_t>(s.action);
    const double ratio = std::exp(dist.log_probs[a] - s.log_prob_old);
    const double unclipped = ratio * s.advantage;
    const double clipped = clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * s.advantage;
    const double h = entropy(dist);
    loss += -std::min(unclipped, clipped) - entropy_coef * h;

    // d(-surrogate)/d(log pi(a)); zero where the clipped branch is active.
    const double d_logp = unclipped <= clipped ? -unclipped : 0.0;
    for (std::size_t j = 0; j < grad_logits.size(); ++j) {
      if (dist.probs[j] == 0.0) {
        grad_logits[j] = 0.0;
        continue;
      }
      const double onehot = j == a ? 1.0 : 0.0;
      double g = d_logp * (onehot - dist.probs[j]);
      g += entropy_coef * dist.probs[j] * (dist.log_probs[j] + h);
      grad_logits[j] = g * scale;
    }
    actor.backward(tape, grad_logits, grads);
  }
  return loss * scale;
}

double value_loss_and_grad(const Mlp& critic, std::span<const StateVector* const> states,
                           std::span<const double> targets, std::span<double> grads) {
  if (states.size() != targets.size()) throw Error(ErrorCode::InvalidArgument, "value batch length mismatch");
  if (states.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(states.size());
  double loss = 0.0;
  Mlp::Tape tape;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double v = critic.forward(*states[i], &tape).front();
    const double err = v - targets[i];
    loss += err * err;
    const double g = 2.0 * err * scale;
    critic.backward(tape, std::span<const double>(&g, 1), grads);
  }
  return loss * scale;
}

StateVector policy_input(const Observation& obs, const ScenarioConfig& cfg) {
  return normalize(obs.features, cfg);
}

ReplayMemory collect_rollout(Simulator& env, const PolicyParams& params, Rng& rng) {
  if (env.done() || !env.observation()) throw Error(ErrorCode::InvalidArgument, "collect_rollout: env not reset");
  const ScenarioConfig& cfg = env.state().cfg;
  ReplayMemory memory;
  Observation obs = *env.observation();
  StateVector state = policy_input(obs, cfg);
  for (;;) {
    const Categorical dist = actor_forward(params, state, obs.mask);
    const ActionSample choice = sample(dist, rng);
    const double value = critic_forward(params, state);
    StepOutcome out = env.step(choice.action);

    Transition tr;
    tr.state = std::move(state);
    tr.mask = obs.mask;
    tr.action = choice.action;
    tr.reward = out.reward;
    tr.log_prob = choice.log_prob;
    tr.value = value;
    tr.done = out.done;
    tr.task = out.info.task;
    tr.latency = out.info.latency;
    if (out.observation) {
      obs = std::move(*out.observation);
      state = policy_input(obs, cfg);
      tr.next_state = state;
    }
    memory.push_back(std::move(tr));
    if (out.done) break;
  }
  return memory;
}

TrainReportRow update(const ReplayMemory& memory, PolicyParams& params, const Hyperparams& hp, Rng& rng) {
  if (memory.empty()) throw Error(ErrorCode::InvalidArgument, "update: empty replay memory");
  const std::size_t T = memory.size();

  std::vector<double> rewards(T), values(T + 1, 0.0);
  std::vector<std::uint8_t> dones(T);
  for (std::size_t t = 0; t < T; ++t) {
    rewards[t] = memory[t].reward;
    values[t] = memory[t].value;
    dones[t] = memory[t].done ? 1 : 0;
  }
  if (!memory.back().done) values[T] = critic_forward(params, memory.back().next_state);
  const GaeResult estimate = gae(rewards, values, dones, hp.gamma, hp.gae_lambda);

  const double mean_adv = std::accumulate(estimate.advantages.begin(), estimate.advantages.end(), 0.0) / T;
  double var = 0.0;
  for (double a : estimate.advantages) var += (a - mean_adv) * (a - mean_adv);
  const double std_adv = std::sqrt(var / T);

  std::vector<SurrogateSample> samples(T);
  for (std::size_t t = 0; t < T; ++t)
    samples[t] = SurrogateSample{&memory[t].state, &memory[t].mask, memory[t].action, memory[t].log_prob,
                                 (estimate.advantages[t] - mean_adv) / (std_adv + 1e-8)};

  TrainReportRow row;
  row.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / T;
  for (const auto& tr : memory) row.mean_total_latency += tr.latency.total / T;

  const PolicyParams snapshot = params;
  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> actor_grad(params.actor.param_count()), critic_grad(params.critic.param_count());
  std::vector<SurrogateSample> batch;
  std::vector<const StateVector*> batch_states;
  std::vector<double> batch_targets;
  const auto batch_size = static_cast<std::size_t>(std::max(1, hp.batch_size));
  double policy_sum = 0.0, value_sum = 0.0;
  int minibatches = 0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t start = 0; start < T; start += batch_size) {
      const std::size_t end = std::min(T, start + batch_size);
      batch.clear();
      batch_states.clear();
      batch_targets.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(samples[order[i]]);
        batch_states.push_back(&memory[order[i]].state);
        batch_targets.push_back(estimate.returns[order[i]]);
      }
      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      double pl = 0.0, vl = 0.0;
      try {
        pl = policy_loss_and_grad(params.actor, batch, hp.clip_epsilon, hp.entropy_coef, actor_grad);
        vl = value_loss_and_grad(params.critic, batch_states, batch_targets, critic_grad);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        pl = vl = std::numeric_limits<double>::quiet_NaN();
      }
      if (!std::isfinite(pl) || !std::isfinite(vl)) {
        params = snapshot;
        row.aborted = true;
        row.policy_loss = pl;
        row.value_loss = vl;
        return row;
      }
      adam_step(params.actor.params(), actor_grad, params.actor_opt, hp.actor_lr);
      adam_step(params.critic.params(), critic_grad, params.critic_opt, hp.critic_lr);
      policy_sum += pl;
      value_sum += vl;
      ++minibatches;
    }
  }
  if (minibatches > 0) {
    row.policy_loss = policy_sum / minibatches;
    row.value_loss = value_sum / minibatches;
  } else {
    std::vector<double> v(T);
    for (std::size_t t = 0; t < T; ++t) v[t] = memory[t].value;
    row.value_loss = value_loss(v, estimate.returns);
  }

  double ratio_sum = 0.0;
  for (const auto& s : samples) {
    const Categorical dist = actor_forward(params, *s.state, *s.mask);
    ratio_sum += std::exp(dist.log_probs[static_cast<std::size_t>(s.action)] - s.log_prob_old);
  }
  row.mean_ratio = ratio_sum / T;
  return row;
}

std::uint64_t training_episode_seed(std::uint64_t seed, int episode) {
  // splitmix64 finalizer over (seed, episode).
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(episode) + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainResult train(const ScenarioConfig& cfg, const Hyperparams& hp, std::uint64_t seed,
                  const TrainProgress& progress) {
  require_valid(cfg);
  if (auto v = validate_hyperparams(hp); !v.empty())
    throw Error(ErrorCode::InvalidConfig, "invalid hyperparameters: " + v.front());

  TrainResult result{PolicyParams::create(static_cast<std::size_t>(cfg.node_count), hp.hidden, seed), {}};
  Rng rng(seed, Stream::Training);
  Simulator env;
  for (int episode = 0; episode < hp.episodes; ++episode) {
    env.set_episode_index(episode);
    env.reset(cfg, training_episode_seed(seed, episode));
    const ReplayMemory memory = collect_rollout(env, result.params, rng);
    TrainReportRow row = update(memory, result.params, hp, rng);
    row.update_idx = episode;
    row.mean_total_latency = env.episode_metrics().mean.total;
    result.report.push_back(row);
    if (progress) progress(row);
  }
  return result;
}

void write_train_report_csv(std::ostream& out, std::span<const TrainReportRow> rows) {
  out << "update_idx,policy_loss,value_loss,mean_reward,mean_total_latency_s\n";
  for (const auto& r : rows)
    out << r.update_idx << ',' << format_double(r.policy_loss) << ',' << format_double(r.value_loss) << ','
        << format_double(r.mean_reward) << ',' << format_double(r.mean_total_latency) << '\n';
}

}  // namespace ocs
