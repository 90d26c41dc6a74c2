#include "ocs/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

namespace ocs {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "invalid_config";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::ConstraintViolation: return "constraint_violation";
    case ErrorCode::Deadlock: return "deadlock";
    case ErrorCode::EpisodeNotDone: return "episode_not_done";
    case ErrorCode::UpgradeConflict: return "upgrade_conflict";
    case ErrorCode::NoFeasibleAction: return "no_feasible_action";
    case ErrorCode::NonFiniteLoss: return "non_finite_loss";
    case ErrorCode::Io: return "io";
    case ErrorCode::MissingCheckpoint: return "missing_checkpoint";
  }
  return "unknown";
}

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool NodeRecord::has_image(ImageId image) const {
  return std::binary_search(cached_images.begin(), cached_images.end(), image);
}

bool NodeRecord::is_downloading(ImageId image) const {
  return std::any_of(download_queue.begin(), download_queue.end(),
                     [image](const QueuedDownload& d) { return d.image == image; });
}

ScenarioConfig default_scenario() { return ScenarioConfig{}; }

double area_side(const ScenarioConfig& cfg) {
  return cfg.area_side_m *
         std::sqrt(static_cast<double>(cfg.node_count) / cfg.area_reference_nodes);
}

namespace {

void check_range(std::vector<std::string>& out, const char* name, Range r, bool strictly_positive) {
  if (!(r.min <= r.max)) out.push_back(std::string(name) + ": min <= max");
  if (strictly_positive && !(r.min > 0.0)) out.push_back(std::string(name) + ": min > 0");
  if (!std::isfinite(r.min) || !std::isfinite(r.max)) out.push_back(std::string(name) + ": finite");
}

}  // namespace

std::vector<std::string> validate_scenario(const ScenarioConfig& cfg) {
  std::vector<std::string> v;
  if (cfg.node_count < 1) v.emplace_back("node_count >= 1");
  if (cfg.task_count < 1) v.emplace_back("task_count >= 1");
  if (cfg.image_count < 1) v.emplace_back("image_count >= 1");
  if (!(cfg.area_side_m > 0.0)) v.emplace_back("area_side_m > 0");
  if (cfg.area_reference_nodes < 1) v.emplace_back("area_reference_nodes >= 1");
  check_range(v, "node_cpu", cfg.node_cpu, true);
  check_range(v, "node_freq_ghz", cfg.node_freq_ghz, true);
  check_range(v, "node_mem_gb", cfg.node_mem_gb, true);
  check_range(v, "node_storage_gbit", cfg.node_storage_gbit, true);
  check_range(v, "node_bandwidth_mbps", cfg.node_bandwidth_mbps, true);
  check_range(v, "task_data_kb", cfg.task_data_kb, true);
  check_range(v, "task_work_gcycles", cfg.task_work_gcycles, true);
  check_range(v, "task_cpu", cfg.task_cpu, true);
  check_range(v, "task_mem_gb", cfg.task_mem_gb, true);
  check_range(v, "image_size_gbit", cfg.image_size_gbit, true);
  if (!(cfg.image_popularity_std_frac > 0.0)) v.emplace_back("image_popularity_std_frac > 0");
  if (cfg.initial_cached_images < 0 || cfg.initial_cached_images > cfg.image_count)
    v.emplace_back("0 <= initial_cached_images <= image_count");
  if (!(cfg.path_loss_exponent > 0.0)) v.emplace_back("path_loss_exponent > 0");
  if (!std::isfinite(cfg.tx_power_dbm)) v.emplace_back("tx_power_dbm finite");
  if (!std::isfinite(cfg.noise_dbm_per_hz)) v.emplace_back("noise_dbm_per_hz finite");
  if (!(cfg.upgrade_duration_s > 0.0)) v.emplace_back("upgrade_duration_s > 0");
  if (!(cfg.slot_s > 0.0)) v.emplace_back("slot_s > 0");
  return v;
}

std::vector<std::string> validate_hyperparams(const Hyperparams& hp) {
  std::vector<std::string> v;
  if (!(hp.gamma >= 0.0 && hp.gamma <= 1.0)) v.emplace_back("0 <= gamma <= 1");
  if (!(hp.gae_lambda >= 0.0 && hp.gae_lambda <= 1.0)) v.emplace_back("0 <= gae_lambda <= 1");
  if (!(hp.clip_epsilon > 0.0)) v.emplace_back("clip_epsilon > 0");
  if (!(hp.actor_lr >= 0.0)) v.emplace_back("actor_lr >= 0");
  if (!(hp.critic_lr >= 0.0)) v.emplace_back("critic_lr >= 0");
  if (hp.batch_size < 1) v.emplace_back("batch_size >= 1");
  if (hp.epochs < 0) v.emplace_back("epochs >= 0");
  if (hp.episodes < 0) v.emplace_back("episodes >= 0");
  if (hp.hidden.empty()) v.emplace_back("hidden nonempty");
  for (int h : hp.hidden)
    if (h < 1) v.emplace_back("hidden widths >= 1");
  return v;
}

void require_valid(const ScenarioConfig& cfg) {
  auto violations = validate_scenario(cfg);
  if (violations.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& s : violations) msg += " [" + s + "]";
  throw Error(ErrorCode::InvalidConfig, msg);
}

double min_frequency(std::span<const NodeRecord> nodes) {
  if (nodes.empty()) throw Error(ErrorCode::InvalidArgument, "no nodes");
  double m = nodes.front().cpu_freq;
  for (const auto& n : nodes) m = std::min(m, n.cpu_freq);
  return m;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double kilobytes_to_megabits(double kb) { return kb * 8.0 / 1000.0; }

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// key=value persistence

namespace {

using FieldRef = std::variant<int*, double*, std::uint64_t*>;

using FieldTable = std::vector<std::pair<std::string, FieldRef>>;

FieldTable scenario_fields(ScenarioConfig& c) {
  FieldTable t;
  auto range = [&t](const std::string& name, Range& r) {
    t.emplace_back(name + "_min", &r.min);
    t.emplace_back(name + "_max", &r.max);
  };
  t.emplace_back("node_count", &c.node_count);
  t.emplace_back("task_count", &c.task_count);
  t.emplace_back("image_count", &c.image_count);
  t.emplace_back("area_side_m", &c.area_side_m);
  t.emplace_back("area_reference_nodes", &c.area_reference_nodes);
  range("node_cpu", c.node_cpu);
  range("node_freq_ghz", c.node_freq_ghz);
  range("node_mem_gb", c.node_mem_gb);
  range("node_storage_gbit", c.node_storage_gbit);
  range("node_bandwidth_mbps", c.node_bandwidth_mbps);
  range("task_data_kb", c.task_data_kb);
  range("task_work_gcycles", c.task_work_gcycles);
  range("task_cpu", c.task_cpu);
  range("task_mem_gb", c.task_mem_gb);
  range("image_size_gbit", c.image_size_gbit);
  t.emplace_back("image_popularity_mean_frac", &c.image_popularity_mean_frac);
  t.emplace_back("image_popularity_std_frac", &c.image_popularity_std_frac);
  t.emplace_back("initial_cached_images", &c.initial_cached_images);
  t.emplace_back("tx_power_dbm", &c.tx_power_dbm);
  t.emplace_back("noise_dbm_per_hz", &c.noise_dbm_per_hz);
  t.emplace_back("path_loss_exponent", &c.path_loss_exponent);
  t.emplace_back("upgrade_duration_s", &c.upgrade_duration_s);
  t.emplace_back("slot_s", &c.slot_s);
  t.emplace_back("seed", &c.seed);
  return t;
}

std::string render(const FieldRef& f) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) return format_double(*p);
        else return std::to_string(*p);
      },
      f);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw Error(ErrorCode::InvalidConfig, "bad value for " + key + ": '" + text + "'");
  return value;
}

void assign(const FieldRef& f, const std::string& key, const std::string& text) {
  std::visit([&](auto* p) { *p = parse_number<std::remove_pointer_t<decltype(p)>>(key, text); }, f);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Calls fn(key, value, line_no) for each non-blank, non-comment line.
void for_each_entry(const std::string& text,
                    const std::function<void(const std::string&, const std::string&, int)>& fn) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
    fn(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_text(const ScenarioConfig& cfg) {
  ScenarioConfig copy = cfg;
  std::string out;
  for (const auto& [key, ref] : scenario_fields(copy)) out += key + "=" + render(ref) + "\n";
  return out;
}

ScenarioConfig scenario_from_text(const std::string& text) {
  ScenarioConfig cfg;
  auto fields = scenario_fields(cfg);
  std::map<std::string, FieldRef> lookup(fields.begin(), fields.end());
  for_each_entry(text, [&](const std::string& key, const std::string& value, int line_no) {
    auto it = lookup.find(key);
    if (it == lookup.end())
      throw Error(ErrorCode::InvalidConfig,
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    assign(it->second, key, value);
  });
  return cfg;
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_text(cfg);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_text(read_file(path));
}

std::string to_text(const Hyperparams& hp) {
  std::string hidden;
  for (std::size_t i = 0; i < hp.hidden.size(); ++i)
    hidden += (i ? "," : "") + std::to_string(hp.hidden[i]);
  std::ostringstream out;
  out << "actor_lr=" << format_double(hp.actor_lr) << "\n"
      << "critic_lr=" << format_double(hp.critic_lr) << "\n"
      << "gamma=" << format_double(hp.gamma) << "\n"
      << "gae_lambda=" << format_double(hp.gae_lambda) << "\n"
      << "clip_epsilon=" << format_double(hp.clip_epsilon) << "\n"
      << "batch_size=" << hp.batch_size << "\n"
      << "epochs=" << hp.epochs << "\n"
      << "hidden=" << hidden << "\n"
      << "episodes=" << hp.episodes << "\n"
      << "entropy_coef=" << format_double(hp.entropy_coef) << "\n";
  return out.str();
}

Hyperparams hyperparams_from_text(const std::string& text) {
  Hyperparams hp;
  for_each_entry(text, [&](const std::string& key, const std::string& value, int line_no) {
    if (key == "actor_lr") hp.actor_lr = parse_number<double>(key, value);
    else if (key == "critic_lr") hp.critic_lr = parse_number<double>(key, value);
    else if (key == "gamma") hp.gamma = parse_number<double>(key, value);
    else if (key == "gae_lambda") hp.gae_lambda = parse_number<double>(key, value);
    else if (key == "clip_epsilon") hp.clip_epsilon = parse_number<double>(key, value);
    else if (key == "batch_size") hp.batch_size = parse_number<int>(key, value);
    else if (key == "epochs") hp.epochs = parse_number<int>(key, value);
    else if (key == "episodes") hp.episodes = parse_number<int>(key, value);
    else if (key == "entropy_coef") hp.entropy_coef = parse_number<double>(key, value);
    else if (key == "hidden") {
      hp.hidden.clear();
      std::istringstream in(value);
      std::string part;
      while (std::getline(in, part, ',')) hp.hidden.push_back(parse_number<int>(key, trim(part)));
    } else {
      throw Error(ErrorCode::InvalidConfig,
                  "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  });
  return hp;
}

}  // namespace ocs
