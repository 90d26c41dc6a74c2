#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ocs/experiment.hpp"
#include "ocs/ppo.hpp"
#include "ocs/scenario.hpp"

namespace fs = std::filesystem;
using namespace ocs;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  int nodes = 0;
  int tasks = 0;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario key=value file");
  cmd->add_option("--seed", c.seed, "Task-stream seed (training: base seed)");
  cmd->add_option("--nodes", c.nodes, "Override node count");
  cmd->add_option("--tasks", c.tasks, "Override task count");
  cmd->add_option("--out", c.out, "Output directory");
}

ScenarioConfig scenario_for(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? default_scenario() : load_scenario(c.config);
  if (c.nodes > 0) cfg.node_count = c.nodes;
  if (c.tasks > 0) cfg.task_count = c.tasks;
  require_valid(cfg);
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::string quoted(const std::string& s) {
  std::string r;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') r += '\\';
    r += ch == '\n' ? ' ' : ch;
  }
  return r;
}

void print_mean(const char* label, const LatencyBreakdown& m) {
  std::printf("%s comm=%s download=%s compute=%s total=%s\n", label, format_double(m.comm).c_str(),
              format_double(m.download).c_str(), format_double(m.compute).c_str(), format_double(m.total).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Container scheduling during rolling edge-cluster upgrades"};
  app.require_subcommand(1);

  Common gen_opts;
  auto* gen = app.add_subcommand("gen-scenario", "Write scenario config, nodes.csv and tasks.csv");
  add_common(gen, gen_opts);

  Common train_opts;
  int episodes = 0;
  std::string hp_path, train_ckpt;
  bool quiet = false;
  auto* tr = app.add_subcommand("train", "Train the learned scheduler");
  add_common(tr, train_opts);
  tr->add_option("--episodes", episodes, "Override episode count");
  tr->add_option("--hyperparams", hp_path, "Hyperparameter key=value file");
  tr->add_option("--checkpoint", train_ckpt, "Checkpoint path (default <out>/ocs_n<N>.ckpt)");
  tr->add_flag("--quiet", quiet, "No per-update progress");

  Common eval_opts;
  std::string policy_name = "il", eval_ckpt;
  bool sample_actions = false;
  auto* ev = app.add_subcommand("eval", "Run one episode and write events.csv and metrics.csv");
  add_common(ev, eval_opts);
  ev->add_option("--policy", policy_name, "eq|rb|la|il|ocs");
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint for --policy ocs");
  ev->add_flag("--sample", sample_actions, "Sample the learned policy instead of taking its argmax");

  Common cmp_opts;
  std::string variable = "nodes", ckpt_dir;
  std::vector<int> values{10, 15, 20};
  std::vector<std::string> policies{"eq", "rb", "la", "il"};
  int seeds = 3;
  auto* cmp = app.add_subcommand("compare", "Sweep node or task count across policies");
  add_common(cmp, cmp_opts);
  cmp->add_option("--var", variable, "nodes|tasks");
  cmp->add_option("--values", values, "Swept values")->delimiter(',');
  cmp->add_option("--policies", policies, "Policies")->delimiter(',');
  cmp->add_option("--seeds", seeds, "Seeds per cell");
  cmp->add_option("--checkpoint-dir", ckpt_dir, "Directory holding ocs_n<N>.ckpt (default --out)");

  std::string plot_input, plot_out = "out";
  auto* plot = app.add_subcommand("plot", "Render SVG line charts from a compare table");
  plot->add_option("--input", plot_input, "compare_<var>.csv")->required();
  plot->add_option("--out", plot_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      const ScenarioConfig cfg = scenario_for(gen_opts);
      const Scenario sc = generate_scenario(cfg, gen_opts.seed);
      const fs::path out = gen_opts.out;
      fs::create_directories(out);
      save_scenario(cfg, out / "scenario.cfg");
      auto nodes = open_out(out / "nodes.csv");
      write_nodes_csv(nodes, sc.cluster.nodes);
      auto tasks = open_out(out / "tasks.csv");
      write_tasks_csv(tasks, sc.tasks);
      std::printf("wrote %zu nodes and %zu tasks to %s\n", sc.cluster.nodes.size(), sc.tasks.size(),
                  out.string().c_str());
    } else if (*tr) {
      const ScenarioConfig cfg = scenario_for(train_opts);
      Hyperparams hp;
      if (!hp_path.empty()) {
        std::ifstream in(hp_path);
        if (!in) throw Error(ErrorCode::Io, "cannot read " + hp_path);
        std::stringstream ss;
        ss << in.rdbuf();
        hp = hyperparams_from_text(ss.str());
      }
      if (episodes > 0) hp.episodes = episodes;
      const fs::path out = train_opts.out;
      fs::create_directories(out);
      const fs::path ckpt = train_ckpt.empty() ? checkpoint_dir_lookup(out)(cfg.node_count) : fs::path(train_ckpt);
      const int every = std::max(1, hp.episodes / 20);
      TrainResult result = train(cfg, hp, train_opts.seed, [&](const TrainReportRow& r) {
        if (!quiet && (r.update_idx + 1) % every == 0)
          std::printf("update %d/%d reward=%s latency=%s value_loss=%s%s\n", r.update_idx + 1, hp.episodes,
                      format_double(r.mean_reward).c_str(), format_double(r.mean_total_latency).c_str(),
                      format_double(r.value_loss).c_str(), r.aborted ? " aborted" : "");
      });
      if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
      save_checkpoint(result.params, ckpt);
      auto report = open_out(out / "train_report.csv");
      write_train_report_csv(report, result.report);
      save_scenario(cfg, out / "scenario.cfg");
      std::printf("checkpoint %s\n", ckpt.string().c_str());
    } else if (*ev) {
      const ScenarioConfig cfg = scenario_for(eval_opts);
      const Policy policy = parse_policy(policy_name);
      std::unique_ptr<Scheduler> scheduler;
      if (policy == Policy::Ocs) {
        if (eval_ckpt.empty()) throw Error(ErrorCode::MissingCheckpoint, "--policy ocs needs --checkpoint");
        scheduler = make_ocs(load_checkpoint(eval_ckpt), !sample_actions, eval_opts.seed);
      } else {
        scheduler = make_baseline(policy, eval_opts.seed);
      }
      const EpisodeResult r = run_episode(cfg, eval_opts.seed, *scheduler);
      const fs::path out = eval_opts.out;
      auto events = open_out(out / "events.csv");
      write_event_log_csv(events, r.log);
      auto metrics = open_out(out / "metrics.csv");
      write_metrics_csv(metrics, r.metrics);
      print_mean(to_string(policy), r.metrics.mean);
    } else if (*cmp) {
      const ScenarioConfig base = scenario_for(cmp_opts);
      SweepSpec spec;
      spec.variable = parse_sweep_variable(variable);
      spec.values = values;
      spec.seeds = seeds;
      for (const auto& p : policies) spec.policies.push_back(parse_policy(p));
      const fs::path out = cmp_opts.out;
      const auto rows = run_compare(spec, base, checkpoint_dir_lookup(ckpt_dir.empty() ? out : fs::path(ckpt_dir)), out);
      for (const auto& t : component_tables(rows)) {
        if (t.component != "total") continue;
        std::printf("%s", to_string(t.variable));
        for (Policy p : t.policies) std::printf(",%s", to_string(p));
        std::printf("\n");
        for (std::size_t i = 0; i < t.values.size(); ++i) {
          std::printf("%d", t.values[i]);
          for (double m : t.means[i]) std::printf(",%s", format_double(m).c_str());
          std::printf("\n");
        }
      }
    } else if (*plot) {
      std::ifstream in(plot_input);
      if (!in) throw Error(ErrorCode::Io, "cannot read " + plot_input);
      const auto rows = read_compare_csv(in);
      for (const auto& f : emit_plots(rows, plot_out)) std::printf("%s\n", f.string().c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: code=%s message=\"%s\"\n", to_string(e.code()), quoted(e.what()).c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: code=internal message=\"%s\"\n", quoted(e.what()).c_str());
    return 3;
  }
  return 0;
}
