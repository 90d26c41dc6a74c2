#include "ocs/nn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace ocs {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Mlp::Mlp(std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output) {
  widths_.clear();
  widths_.push_back(input);
  widths_.insert(widths_.end(), hidden.begin(), hidden.end());
  widths_.push_back(output);
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

void Mlp::init_orthogonal(Rng& rng, double hidden_gain, double output_gain) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths_[l]);
    const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
    const Eigen::Index rows = std::max(in, out), cols = std::min(in, out);
    MatrixXd gaussian(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) gaussian(r, c) = rng.normal(0.0, 1.0);
    Eigen::HouseholderQR<MatrixXd> qr(gaussian);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(rows, cols);
    // Fix the sign ambiguity of QR so the draw is uniform over orthogonal matrices.
    MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < cols; ++c)
      if (r(c, c) < 0) q.col(c) *= -1.0;

    const double gain = (l + 1 == layer_count()) ? output_gain : hidden_gain;
    Map<MatrixXd> w(params_.data() + weight_offset(l), out, in);
    if (out >= in) w = gain * q;
    else w = gain * q.transpose();
    Map<VectorXd>(params_.data() + bias_offset(l), out).setZero();
  }
}

std::vector<double> Mlp::forward(std::span<const double> x, Tape* tape) const {
  if (x.size() != input_size())
    throw Error(ErrorCode::InvalidArgument, "input width " + std::to_string(x.size()) + " != " +
                                                std::to_string(input_size()));
  VectorXd a = Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  if (tape) {
    tape->activations.resize(widths_.size());
    tape->activations[0].assign(x.begin(), x.end());
  }
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths_[l]);
    const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
    Map<const MatrixXd> w(params_.data() + weight_offset(l), out, in);
    Map<const VectorXd> b(params_.data() + bias_offset(l), out);
    VectorXd z = w * a + b;
    a = (l + 1 < layer_count()) ? VectorXd(z.array().tanh()) : z;
    if (tape) tape->activations[l + 1].assign(a.data(), a.data() + a.size());
  }
  return {a.data(), a.data() + a.size()};
}

void Mlp::backward(const Tape& tape, std::span<const double> grad_output, std::span<double> grads) const {
  if (grads.size() != params_.size()) throw Error(ErrorCode::InvalidArgument, "gradient buffer size mismatch");
  if (grad_output.size() != output_size()) throw Error(ErrorCode::InvalidArgument, "output gradient size mismatch");
  if (tape.activations.size() != widths_.size()) throw Error(ErrorCode::InvalidArgument, "tape does not match network");
  for (double g : grad_output)
    if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteLoss, "non-finite loss gradient");

  VectorXd delta = Map<const VectorXd>(grad_output.data(), static_cast<Eigen::Index>(grad_output.size()));
  for (std::size_t l = layer_count(); l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(widths_[l]);
    const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
    if (l + 1 < layer_count()) {
      Map<const VectorXd> act(tape.activations[l + 1].data(), out);
      delta = delta.array() * (1.0 - act.array().square());
    }
    Map<const VectorXd> prev(tape.activations[l].data(), in);
    Map<MatrixXd>(grads.data() + weight_offset(l), out, in).noalias() += delta * prev.transpose();
    Map<VectorXd>(grads.data() + bias_offset(l), out) += delta;
    if (l > 0) {
      Map<const MatrixXd> w(params_.data() + weight_offset(l), out, in);
      delta = w.transpose() * delta;
    }
  }
}

// ---------------------------------------------------------------------------

Categorical masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw Error(ErrorCode::InvalidArgument, "mask size mismatch");
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double max_logit = neg_inf;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) max_logit = std::max(max_logit, logits[i]);
  if (max_logit == neg_inf) throw Error(ErrorCode::NoFeasibleAction, "no feasible action");

  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) sum += std::exp(logits[i] - max_logit);
  const double log_sum = std::log(sum);

  Categorical d;
  d.probs.assign(logits.size(), 0.0);
  d.log_probs.assign(logits.size(), neg_inf);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    d.log_probs[i] = logits[i] - max_logit - log_sum;
    d.probs[i] = std::exp(d.log_probs[i]);
  }
  return d;
}

ActionSample sample(const Categorical& dist, Rng& rng) {
  const double u = rng.uniform(0.0, 1.0);
  double cumulative = 0.0;
  std::size_t chosen = dist.probs.size();
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    chosen = i;
    cumulative += dist.probs[i];
    if (u < cumulative) break;
  }
  if (chosen == dist.probs.size()) throw Error(ErrorCode::NoFeasibleAction, "empty distribution");
  return {static_cast<NodeId>(chosen), dist.log_probs[chosen]};
}

NodeId greedy_action(const Categorical& dist) {
  auto it = std::max_element(dist.probs.begin(), dist.probs.end());
  return static_cast<NodeId>(it - dist.probs.begin());
}

double entropy(const Categorical& dist) {
  double h = 0.0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i)
    if (dist.probs[i] > 0.0) h -= dist.probs[i] * dist.log_probs[i];
  return h;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw Error(ErrorCode::InvalidArgument, "adam: gradient shape mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorCode::InvalidArgument, "adam: state shape mismatch");

  state.step += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

PolicyParams PolicyParams::create(std::size_t node_count, const std::vector<int>& hidden, std::uint64_t seed) {
  if (node_count == 0) throw Error(ErrorCode::InvalidArgument, "node_count must be >= 1");
  std::vector<std::size_t> widths;
  for (int h : hidden) {
    if (h < 1) throw Error(ErrorCode::InvalidArgument, "hidden widths must be >= 1");
    widths.push_back(static_cast<std::size_t>(h));
  }
  const std::size_t input = 8 * node_count + 5;
  PolicyParams p;
  p.node_count = node_count;
  p.actor = Mlp(input, widths, node_count);
  p.critic = Mlp(input, widths, 1);
  Rng rng(seed, Stream::Init);
  p.actor.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  p.critic.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  return p;
}

Categorical actor_forward(const PolicyParams& params, std::span<const double> state,
                          std::span<const std::uint8_t> mask) {
  return masked_softmax(params.actor.forward(state), mask);
}

double critic_forward(const PolicyParams& params, std::span<const double> state) {
  return params.critic.forward(state).front();
}

// ---------------------------------------------------------------------------
// checkpoint I/O

namespace {

constexpr char kMagic[8] = {'O', 'C', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

void put_block(std::string& out, std::span<const double> values) {
  put<std::uint64_t>(out, values.size());
  for (double v : values) put(out, v);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw Error(ErrorCode::Io, "checkpoint truncated");
    char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::vector<double> block() {
    auto n = get<std::uint64_t>();
    if (n > (bytes_.size() - pos_) / sizeof(double)) throw Error(ErrorCode::Io, "checkpoint truncated");
    std::vector<double> v(n);
    for (auto& x : v) x = get<double>();
    return v;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void read_into(std::span<double> dst, const std::vector<double>& src, const char* what) {
  if (dst.size() != src.size()) throw Error(ErrorCode::Io, std::string("checkpoint ") + what + " size mismatch");
  std::copy(src.begin(), src.end(), dst.begin());
}

void put_adam(std::string& out, const AdamState& s) {
  put<std::int64_t>(out, s.step);
  put_block(out, s.m);
  put_block(out, s.v);
}

AdamState get_adam(Reader& in) {
  AdamState s;
  s.step = in.get<std::int64_t>();
  s.m = in.block();
  s.v = in.block();
  return s;
}

std::vector<std::size_t> hidden_widths(const Mlp& m) {
  const auto& w = m.widths();
  return {w.begin() + 1, w.end() - 1};
}

}  // namespace

std::uint64_t layout_hash(std::size_t node_count, std::size_t input_width, const std::vector<std::size_t>& hidden) {
  // FNV-1a over the little-endian u32 encoding of the layout fields.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint32_t>(node_count));
  mix(static_cast<std::uint32_t>(input_width));
  mix(static_cast<std::uint32_t>(hidden.size()));
  for (auto w : hidden) mix(static_cast<std::uint32_t>(w));
  return h;
}

std::string serialize(const PolicyParams& params) {
  const auto hidden = hidden_widths(params.actor);
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.node_count));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.actor.input_size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(hidden.size()));
  for (auto w : hidden) put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
  put<std::uint64_t>(out, layout_hash(params.node_count, params.actor.input_size(), hidden));
  put_block(out, params.actor.params());
  put_block(out, params.critic.params());
  put_adam(out, params.actor_opt);
  put_adam(out, params.critic_opt);
  return out;
}

PolicyParams deserialize(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorCode::Io, "not a policy checkpoint");
  Reader in(bytes);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) in.get<char>();
  if (auto version = in.get<std::uint32_t>(); version != kCheckpointVersion)
    throw Error(ErrorCode::Io, "unsupported checkpoint version " + std::to_string(version));
  const std::size_t node_count = in.get<std::uint32_t>();
  const std::size_t input = in.get<std::uint32_t>();
  const std::size_t depth = in.get<std::uint32_t>();
  if (depth > 64) throw Error(ErrorCode::Io, "implausible hidden layer count");
  std::vector<std::size_t> hidden(depth);
  for (auto& w : hidden) w = in.get<std::uint32_t>();
  if (in.get<std::uint64_t>() != layout_hash(node_count, input, hidden))
    throw Error(ErrorCode::Io, "checkpoint layout hash mismatch");
  if (input != 8 * node_count + 5) throw Error(ErrorCode::Io, "checkpoint input width inconsistent");

  PolicyParams p;
  p.node_count = node_count;
  p.actor = Mlp(input, hidden, node_count);
  p.critic = Mlp(input, hidden, 1);
  read_into(p.actor.params(), in.block(), "actor");
  read_into(p.critic.params(), in.block(), "critic");
  p.actor_opt = get_adam(in);
  p.critic_opt = get_adam(in);
  if (!in.at_end()) throw Error(ErrorCode::Io, "trailing bytes in checkpoint");
  return p;
}

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const std::string bytes = serialize(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingCheckpoint, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace ocs
