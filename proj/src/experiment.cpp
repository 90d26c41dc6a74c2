#include "ocs/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "ocs/ppo.hpp"

namespace ocs {

namespace {

class BaselineScheduler final : public Scheduler {
 public:
  BaselineScheduler(Policy policy, std::uint64_t seed) : policy_(policy), rng_(seed, Stream::Policy) {}

  NodeId choose(const ClusterState& state, const Observation& obs) override {
    std::vector<NodeId> feasible;
    for (std::size_t n = 0; n < obs.mask.size(); ++n)
      if (obs.mask[n]) feasible.push_back(static_cast<NodeId>(n));
    switch (policy_) {
      case Policy::Eq: return eq_select(feasible, rng_);
      case Policy::Rb: return rb_select(feasible, state, obs.task);
      case Policy::La: return la_select(feasible, state, obs.task);
      case Policy::Il: return il_select(feasible, state, obs.task);
      case Policy::Ocs: break;
    }
    throw Error(ErrorCode::InvalidArgument, "not a baseline policy");
  }

  Policy policy() const override { return policy_; }

 private:
  Policy policy_;
  Rng rng_;
};

class OcsScheduler final : public Scheduler {
 public:
  OcsScheduler(PolicyParams params, bool greedy, std::uint64_t seed)
      : params_(std::move(params)), greedy_(greedy), rng_(seed, Stream::Policy) {}

  NodeId choose(const ClusterState& state, const Observation& obs) override {
    if (state.nodes.size() != params_.node_count)
      throw Error(ErrorCode::InvalidArgument, "checkpoint trained for " + std::to_string(params_.node_count) +
                                                  " nodes, cluster has " + std::to_string(state.nodes.size()));
    const Categorical dist = actor_forward(params_, policy_input(obs, state.cfg), obs.mask);
    return greedy_ ? greedy_action(dist) : sample(dist, rng_).action;
  }

  Policy policy() const override { return Policy::Ocs; }

 private:
  PolicyParams params_;
  bool greedy_;
  Rng rng_;
};

std::string csv(double v) { return format_double(v); }

}  // namespace

std::unique_ptr<Scheduler> make_baseline(Policy policy, std::uint64_t seed) {
  if (policy == Policy::Ocs) throw Error(ErrorCode::InvalidArgument, "ocs needs a checkpoint");
  return std::make_unique<BaselineScheduler>(policy, seed);
}

std::unique_ptr<Scheduler> make_ocs(PolicyParams params, bool greedy, std::uint64_t seed) {
  return std::make_unique<OcsScheduler>(std::move(params), greedy, seed);
}

EpisodeResult run_episode(const ScenarioConfig& cfg, std::uint64_t seed, Scheduler& scheduler, int episode_index,
                          const EventObserver& observer) {
  Simulator sim;
  sim.set_episode_index(episode_index);
  if (observer) sim.set_observer(observer);
  Observation obs = sim.reset(cfg, seed);
  for (;;) {
    StepOutcome out = sim.step(scheduler.choose(sim.state(), obs));
    if (out.done) break;
    obs = std::move(*out.observation);
  }
  return EpisodeResult{sim.episode_metrics(), sim.event_log()};
}

void write_event_log_csv(std::ostream& out, std::span<const EventLogRow> rows) {
  out << "episode,step,clock_s,task_id,node_id,t_comm_s,t_down_s,t_comp_s,t_total_s,reward,evicted_flag\n";
  for (const auto& r : rows)
    out << r.episode << ',' << r.step << ',' << csv(r.clock) << ',' << r.task << ',' << r.node << ','
        << csv(r.latency.comm) << ',' << csv(r.latency.download) << ',' << csv(r.latency.compute) << ','
        << csv(r.latency.total) << ',' << csv(r.reward) << ',' << (r.evicted ? 1 : 0) << '\n';
}

void write_metrics_csv(std::ostream& out, const EpisodeMetrics& m) {
  out << "task_id,node_id,placements,t_comm_s,t_down_s,t_comp_s,t_total_s\n";
  for (const auto& r : m.rows)
    out << r.task << ',' << r.node << ',' << r.placements << ',' << csv(r.latency.comm) << ','
        << csv(r.latency.download) << ',' << csv(r.latency.compute) << ',' << csv(r.latency.total) << '\n';
  out << "mean,,," << csv(m.mean.comm) << ',' << csv(m.mean.download) << ',' << csv(m.mean.compute) << ','
      << csv(m.mean.total) << '\n';
}

void write_nodes_csv(std::ostream& out, std::span<const NodeRecord> nodes) {
  out << "node_id,x_m,y_m,cpu_cores,mem_gb,storage_gbit,freq_ghz,bandwidth_mbps,cached_images\n";
  for (const auto& n : nodes) {
    out << n.id << ',' << csv(n.position.x) << ',' << csv(n.position.y) << ',' << csv(n.cpu_capacity) << ','
        << csv(n.mem_capacity) << ',' << csv(n.storage_capacity) << ',' << csv(n.cpu_freq) << ','
        << csv(n.bandwidth) << ',';
    for (std::size_t i = 0; i < n.cached_images.size(); ++i) out << (i ? ";" : "") << n.cached_images[i];
    out << '\n';
  }
}

void write_tasks_csv(std::ostream& out, std::span<const TaskRecord> tasks) {
  out << "task_id,arrival_s,x_m,y_m,cpu_cores,mem_gb,work_gcycles,data_mbit,image_id\n";
  for (const auto& t : tasks)
    out << t.id << ',' << csv(t.arrival_time) << ',' << csv(t.position.x) << ',' << csv(t.position.y) << ','
        << csv(t.cpu_req) << ',' << csv(t.mem_req) << ',' << csv(t.work) << ',' << csv(t.data_size) << ','
        << t.image_req << '\n';
}

const char* to_string(SweepVariable v) { return v == SweepVariable::Nodes ? "nodes" : "tasks"; }

SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "nodes") return SweepVariable::Nodes;
  if (name == "tasks") return SweepVariable::Tasks;
  throw Error(ErrorCode::InvalidArgument, "unknown sweep variable '" + name + "'");
}

std::vector<std::string> validate_sweep(const SweepSpec& spec) {
  std::vector<std::string> v;
  if (spec.values.empty()) v.emplace_back("sweep values nonempty");
  if (spec.policies.empty()) v.emplace_back("sweep policies nonempty");
  if (spec.seeds < 1) v.emplace_back("seeds >= 1");
  for (int x : spec.values)
    if (x < 1) v.emplace_back("sweep values >= 1");
  return v;
}

CheckpointLookup checkpoint_dir_lookup(const std::filesystem::path& dir) {
  return [dir](int nodes) { return dir / ("ocs_n" + std::to_string(nodes) + ".ckpt"); };
}

std::vector<CompareRow> run_compare(const SweepSpec& spec, const ScenarioConfig& base,
                                    const CheckpointLookup& checkpoints, const std::filesystem::path& out_dir) {
  if (auto v = validate_sweep(spec); !v.empty()) throw Error(ErrorCode::InvalidArgument, "invalid sweep: " + v.front());

  auto cell_cfg = [&](int value) {
    ScenarioConfig cfg = base;
    (spec.variable == SweepVariable::Nodes ? cfg.node_count : cfg.task_count) = value;
    require_valid(cfg);
    return cfg;
  };

  // Resolve every learned-policy checkpoint before running anything.
  std::map<int, PolicyParams> learned;
  if (std::find(spec.policies.begin(), spec.policies.end(), Policy::Ocs) != spec.policies.end()) {
    std::string missing;
    for (int value : spec.values) {
      const int nodes = cell_cfg(value).node_count;
      if (learned.count(nodes)) continue;
      const auto path = checkpoints ? checkpoints(nodes) : std::filesystem::path{};
      if (path.empty() || !std::filesystem::exists(path)) {
        missing += " [" + std::string(to_string(spec.variable)) + "=" + std::to_string(value) + " policy=ocs path=" +
                   path.string() + "]";
        continue;
      }
      PolicyParams p = load_checkpoint(path);
      if (p.node_count != static_cast<std::size_t>(nodes))
        throw Error(ErrorCode::MissingCheckpoint, path.string() + " was trained for " + std::to_string(p.node_count) +
                                                      " nodes, cell needs " + std::to_string(nodes));
      learned.emplace(nodes, std::move(p));
    }
    if (!missing.empty()) throw Error(ErrorCode::MissingCheckpoint, "missing checkpoints:" + missing);
  }

  std::vector<CompareRow> rows;
  for (int value : spec.values) {
    const ScenarioConfig cfg = cell_cfg(value);
    for (Policy policy : spec.policies) {
      for (int s = 1; s <= spec.seeds; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        std::unique_ptr<Scheduler> scheduler =
            policy == Policy::Ocs ? make_ocs(learned.at(cfg.node_count)) : make_baseline(policy, seed);
        const EpisodeResult r = run_episode(cfg, seed, *scheduler);
        rows.push_back(CompareRow{spec.variable, value, policy, seed, r.metrics.mean});
      }
    }
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string var = to_string(spec.variable);
    {
      std::ofstream out(out_dir / ("compare_" + var + ".csv"));
      write_compare_csv(out, rows);
    }
    for (const auto& table : component_tables(rows)) {
      std::ofstream out(out_dir / (var + "_" + table.component + ".csv"));
      out << var;
      for (Policy p : table.policies) out << ',' << to_string(p);
      out << '\n';
      for (std::size_t i = 0; i < table.values.size(); ++i) {
        out << table.values[i];
        for (double m : table.means[i]) out << ',' << csv(m);
        out << '\n';
      }
    }
  }
  return rows;
}

void write_compare_csv(std::ostream& out, std::span<const CompareRow> rows) {
  out << "variable,value,policy,seed,t_comm_s,t_down_s,t_comp_s,t_total_s\n";
  for (const auto& r : rows)
    out << to_string(r.variable) << ',' << r.value << ',' << to_string(r.policy) << ',' << r.seed << ','
        << csv(r.mean.comm) << ',' << csv(r.mean.download) << ',' << csv(r.mean.compute) << ','
        << csv(r.mean.total) << '\n';
}

std::vector<CompareRow> read_compare_csv(std::istream& in) {
  std::vector<CompareRow> rows;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, "empty compare table");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw Error(ErrorCode::Io, "bad compare row: " + line);
    CompareRow r;
    r.variable = parse_sweep_variable(f[0]);
    r.value = std::stoi(f[1]);
    r.policy = parse_policy(f[2]);
    r.seed = std::stoull(f[3]);
    r.mean = LatencyBreakdown{std::stod(f[4]), std::stod(f[5]), std::stod(f[6]), std::stod(f[7])};
    rows.push_back(r);
  }
  return rows;
}

std::vector<ComponentTable> component_tables(std::span<const CompareRow> rows) {
  std::vector<ComponentTable> tables;
  if (rows.empty()) return tables;
  std::vector<int> values;
  std::vector<Policy> policies;
  for (const auto& r : rows) {
    if (std::find(values.begin(), values.end(), r.value) == values.end()) values.push_back(r.value);
    if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) policies.push_back(r.policy);
  }
  for (const char* component : kLatencyComponents) {
    ComponentTable t{rows.front().variable, component, values, policies, {}};
    t.means.assign(values.size(), std::vector<double>(policies.size(), 0.0));
    std::vector<std::vector<int>> counts(values.size(), std::vector<int>(policies.size(), 0));
    for (const auto& r : rows) {
      auto vi = static_cast<std::size_t>(std::find(values.begin(), values.end(), r.value) - values.begin());
      auto pi = static_cast<std::size_t>(std::find(policies.begin(), policies.end(), r.policy) - policies.begin());
      const std::string c = component;
      double x = c == "comm" ? r.mean.comm : c == "download" ? r.mean.download
               : c == "compute" ? r.mean.compute : r.mean.total;
      t.means[vi][pi] += x;
      counts[vi][pi] += 1;
    }
    for (std::size_t i = 0; i < values.size(); ++i)
      for (std::size_t j = 0; j < policies.size(); ++j)
        if (counts[i][j]) t.means[i][j] /= counts[i][j];
    tables.push_back(std::move(t));
  }
  return tables;
}

std::vector<std::filesystem::path> emit_plots(std::span<const CompareRow> rows, const std::filesystem::path& out_dir) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "empty table");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> files;
  for (const auto& table : component_tables(rows)) {
    auto path = out_dir / ("plot_" + std::string(to_string(table.variable)) + "_" + table.component + ".svg");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << render_line_chart(table);
    files.push_back(path);
  }
  return files;
}

}  // namespace ocs
