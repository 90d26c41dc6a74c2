#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ocs/encoder.hpp"
#include "ocs/nn.hpp"
#include "ocs/ppo.hpp"
#include "oracles.hpp"

using namespace ocs;

namespace {

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-7); }

}  // namespace

TEST_CASE("masked softmax") {
  const Categorical even = masked_softmax(std::vector<double>{0.3, 0.3, 0.3, 0.3}, ActionMask{1, 1, 1, 1});
  for (double p : even.probs) CHECK(p == doctest::Approx(0.25));

  const Categorical one = masked_softmax(std::vector<double>{0, 0}, ActionMask{1, 0});
  CHECK(one.probs[0] == 1.0);
  CHECK(one.probs[1] == 0.0);
  CHECK(std::isinf(one.log_probs[1]));

  CHECK_THROWS_AS(masked_softmax(std::vector<double>{1, 2}, ActionMask{0, 0}), Error);
  try {
    masked_softmax(std::vector<double>{1}, ActionMask{0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoFeasibleAction);
  }
  CHECK_THROWS_AS(masked_softmax(std::vector<double>{1, 2}, ActionMask{1}), Error);
}

TEST_CASE("property: masked probabilities are exact zeros and sum to one") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> bit(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const auto logits = random_vec(gen, 9, 30.0);
    ActionMask m(9);
    for (auto& b : m) b = static_cast<std::uint8_t>(bit(gen));
    m[static_cast<std::size_t>(i % 9)] = 1;
    const Categorical c = masked_softmax(logits, m);
    double sum = 0;
    for (std::size_t j = 0; j < 9; ++j) {
      if (!m[j]) CHECK(c.probs[j] == 0.0);
      sum += c.probs[j];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("sample") {
  Categorical point{{0, 1, 0}, {-INFINITY, 0.0, -INFINITY}};
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const ActionSample s = sample(point, rng);
    CHECK(s.action == 1);
    CHECK(s.log_prob == 0.0);
  }
  const Categorical half = masked_softmax(std::vector<double>{0, 0}, ActionMask{1, 1});
  Rng draws(77);
  int zeros = 0;
  for (int i = 0; i < 10000; ++i) zeros += sample(half, draws).action == 0;
  CHECK(zeros / 1e4 >= 0.45);
  CHECK(zeros / 1e4 <= 0.55);

  Rng a(4), b(4);
  const Categorical c = masked_softmax(std::vector<double>{0.1, 2, -1, 0.5}, ActionMask{1, 1, 1, 1});
  for (int i = 0; i < 50; ++i) {
    const ActionSample x = sample(c, a), y = sample(c, b);
    CHECK(x.action == y.action);
    CHECK(x.log_prob == c.log_probs[static_cast<std::size_t>(x.action)]);
  }
  CHECK(greedy_action(c) == 1);
  CHECK(greedy_action(masked_softmax(std::vector<double>{1, 1}, ActionMask{1, 1})) == 0);
}

TEST_CASE("entropy") {
  CHECK(entropy(masked_softmax(std::vector<double>{0, 0, 0, 0}, ActionMask{1, 1, 1, 1})) ==
        doctest::Approx(std::log(4.0)));
  CHECK(entropy(Categorical{{0, 1, 0}, {-INFINITY, 0.0, -INFINITY}}) == 0.0);
}

TEST_CASE("critic forward") {
  Mlp critic(5, {4, 3}, 1);
  std::fill(critic.params().begin(), critic.params().end(), 0.0);
  CHECK(critic.forward(std::vector<double>{1, 2, 3, 4, 5}).front() == 0.0);

  PolicyParams p = PolicyParams::create(3, {16, 8}, 9);
  std::mt19937_64 gen(1);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_vec(gen, state_width(3), 100.0);
    const double v = critic_forward(p, x);
    CHECK(std::isfinite(v));
    CHECK(critic_forward(p, x) == v);
  }
  CHECK_THROWS_AS(critic.forward(std::vector<double>{1, 2}), Error);
}

TEST_CASE("policy parameters have the published shape") {
  const PolicyParams p = PolicyParams::create(15, {128, 64}, 1);
  CHECK(p.actor.widths() == std::vector<std::size_t>{125, 128, 64, 15});
  CHECK(p.critic.widths() == std::vector<std::size_t>{125, 128, 64, 1});
  CHECK(p.actor.param_count() == 125 * 128 + 128 + 128 * 64 + 64 + 64 * 15 + 15);
  for (double w : p.actor.params()) CHECK(std::isfinite(w));
  // A near-uniform initial policy.
  const Categorical c = actor_forward(p, std::vector<double>(125, 0.5), ActionMask(15, 1));
  for (double q : c.probs) CHECK(q == doctest::Approx(1.0 / 15).epsilon(0.05));
}

TEST_CASE("orthogonal initialization") {
  Mlp net(6, {10}, 3);
  Rng rng(2, Stream::Init);
  net.init_orthogonal(rng, 2.0, 0.5);
  const auto w = net.params();
  // Layer 0 is 10 x 6 column-major: columns are orthogonal with norm gain.
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      double dot = 0;
      for (int r = 0; r < 10; ++r) dot += w[static_cast<std::size_t>(a * 10 + r)] * w[static_cast<std::size_t>(b * 10 + r)];
      CHECK(dot == doctest::Approx(a == b ? 4.0 : 0.0).epsilon(1e-9).scale(1.0));
    }
  // Layer 1 is 3 x 10: rows are orthogonal with norm gain.
  const std::size_t off = 60 + 10;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double dot = 0;
      for (int c = 0; c < 10; ++c) dot += w[off + static_cast<std::size_t>(c * 3 + a)] * w[off + static_cast<std::size_t>(c * 3 + b)];
      CHECK(dot == doctest::Approx(a == b ? 0.25 : 0.0).scale(1.0));
    }
  for (std::size_t i = 60; i < 70; ++i) CHECK(w[i] == 0.0);
}

TEST_CASE("backward: constant loss and closed-form linear case") {
  Mlp net(3, {4}, 2);
  Rng rng(1, Stream::Init);
  net.init_orthogonal(rng, 1.0, 1.0);
  Mlp::Tape tape;
  net.forward(std::vector<double>{1, 2, 3}, &tape);
  std::vector<double> g(net.param_count(), 0.0);
  net.backward(tape, std::vector<double>{0, 0}, g);
  for (double x : g) CHECK(x == 0.0);

  // loss = (w.x + b - y)^2
  Mlp lin(3, {}, 1);
  std::vector<double> theta{0.5, -1.0, 2.0, 0.25};
  std::copy(theta.begin(), theta.end(), lin.params().begin());
  const std::vector<double> x{1.5, -0.5, 2.0};
  const double y = 1.0;
  const double pred = lin.forward(x, &tape).front();
  CHECK(pred == doctest::Approx(0.75 + 0.5 + 4.0 + 0.25));
  std::vector<double> grad(4, 0.0);
  const double dl = 2.0 * (pred - y);
  lin.backward(tape, std::span<const double>(&dl, 1), grad);
  for (int i = 0; i < 3; ++i) CHECK(grad[static_cast<std::size_t>(i)] == doctest::Approx(2 * x[static_cast<std::size_t>(i)] * (pred - y)));
  CHECK(grad[3] == doctest::Approx(2 * (pred - y)));

  const double nan = std::nan("");
  CHECK_THROWS_AS(lin.backward(tape, std::span<const double>(&nan, 1), grad), Error);
}

TEST_CASE("gradcheck: actor surrogate and critic regression against central differences") {
  std::mt19937_64 gen(123);
  std::uniform_int_distribution<int> width(2, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in = static_cast<std::size_t>(width(gen)), out = static_cast<std::size_t>(width(gen));
    const std::vector<std::size_t> hidden{static_cast<std::size_t>(width(gen)), static_cast<std::size_t>(width(gen))};
    Mlp actor(in, hidden, out), critic(in, hidden, 1);
    Rng init(static_cast<std::uint64_t>(trial), Stream::Init);
    actor.init_orthogonal(init, 1.0, 1.0);
    critic.init_orthogonal(init, 1.0, 1.0);
    for (auto& w : actor.params()) w += 0.1 * random_vec(gen, 1)[0];
    for (auto& w : critic.params()) w += 0.1 * random_vec(gen, 1)[0];

    std::vector<StateVector> states;
    std::vector<ActionMask> masks;
    std::vector<SurrogateSample> batch;
    std::vector<double> targets;
    for (int b = 0; b < 4; ++b) {
      states.push_back(random_vec(gen, in));
      ActionMask m(out, 1);
      m[static_cast<std::size_t>(b) % out] = out > 2 ? 0 : 1;
      masks.push_back(m);
      targets.push_back(random_vec(gen, 1)[0]);
    }
    for (int b = 0; b < 4; ++b) {
      const Categorical c = masked_softmax(actor.forward(states[static_cast<std::size_t>(b)]), masks[static_cast<std::size_t>(b)]);
      NodeId a = greedy_action(c);
      // Old log-probabilities away from the clip boundary in both directions.
      const double shift = (b % 2 ? 0.05 : -0.05);
      batch.push_back({&states[static_cast<std::size_t>(b)], &masks[static_cast<std::size_t>(b)], a,
                       c.log_probs[static_cast<std::size_t>(a)] + shift, random_vec(gen, 1)[0]});
    }
    const double entropy_coef = trial % 2 ? 0.0 : 0.01;

    std::vector<double> ga(actor.param_count(), 0.0), gc(critic.param_count(), 0.0);
    policy_loss_and_grad(actor, batch, 0.2, entropy_coef, ga);
    std::vector<const StateVector*> ptrs;
    for (auto& s : states) ptrs.push_back(&s);
    value_loss_and_grad(critic, ptrs, targets, gc);

    std::vector<double> scratch_a(actor.param_count()), scratch_c(critic.param_count());
    auto actor_loss = [&] { return policy_loss_and_grad(actor, batch, 0.2, entropy_coef, scratch_a); };
    auto critic_loss = [&] { return value_loss_and_grad(critic, ptrs, targets, scratch_c); };
    for (std::size_t i = 0; i < actor.param_count(); ++i) {
      const double fd = oracle::central_diff(actor_loss, actor.params()[i], 1e-6);
      worst = std::max(worst, rel_err(ga[i], fd));
    }
    for (std::size_t i = 0; i < critic.param_count(); ++i) {
      const double fd = oracle::central_diff(critic_loss, critic.params()[i], 1e-6);
      worst = std::max(worst, rel_err(gc[i], fd));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("adam") {
  std::vector<double> p{1.0, -2.0, 3.0};
  AdamState st;
  adam_step(p, std::vector<double>{0, 0, 0}, st, 0.1);
  CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
  CHECK(st.step == 1);

  std::vector<double> q{0.0, 0.0};
  AdamState s2;
  adam_step(q, std::vector<double>{1.0, 1.0}, s2, 1e-4);
  CHECK(q[0] == doctest::Approx(-1e-4).epsilon(1e-6));
  CHECK(q[1] == doctest::Approx(-1e-4).epsilon(1e-6));

  CHECK_THROWS_AS(adam_step(q, std::vector<double>{1.0}, s2, 1e-4), Error);

  const Hyperparams hp;
  CHECK(hp.actor_lr == 1e-4);
  CHECK(hp.critic_lr == 3e-4);
}

TEST_CASE("checkpoint round trip is bit identical") {
  PolicyParams p = PolicyParams::create(4, {8, 6}, 3);
  std::vector<double> g(p.actor.param_count(), 0.01);
  adam_step(p.actor.params(), g, p.actor_opt, 1e-3);
  const auto path = std::filesystem::temp_directory_path() / "ocs_nn_roundtrip.ckpt";
  save_checkpoint(p, path);
  const PolicyParams q = load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK(q.node_count == 4);
  CHECK(std::equal(p.actor.params().begin(), p.actor.params().end(), q.actor.params().begin()));
  CHECK(std::equal(p.critic.params().begin(), p.critic.params().end(), q.critic.params().begin()));
  CHECK(q.actor_opt == p.actor_opt);
  CHECK(q.critic_opt == p.critic_opt);
  const std::vector<double> x(state_width(4), 0.3);
  const ActionMask m{1, 0, 1, 1};
  CHECK(actor_forward(p, x, m).probs == actor_forward(q, x, m).probs);
  CHECK(critic_forward(p, x) == critic_forward(q, x));
  CHECK(serialize(q) == serialize(p));
}

TEST_CASE("checkpoint corruption is detected") {
  const std::string bytes = serialize(PolicyParams::create(3, {5}, 1));
  CHECK_NOTHROW(deserialize(bytes));
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad), Error);
  CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(deserialize(bytes + "x"), Error);
  bad = bytes;
  bad[8 + 4 + 4 + 4 + 4 + 4 + 1] ^= 0x5A;  // inside the layout hash
  CHECK_THROWS_AS(deserialize(bad), Error);
  try {
    load_checkpoint("/nonexistent/ocs.ckpt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingCheckpoint);
  }
  CHECK(layout_hash(3, 29, {5}) != layout_hash(4, 37, {5}));
}
