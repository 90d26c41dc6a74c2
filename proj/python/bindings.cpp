#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ocs/experiment.hpp"
#include "ocs/ppo.hpp"
#include "ocs/scenario.hpp"

namespace py = pybind11;
using namespace ocs;

namespace {

py::dict to_dict(const LatencyBreakdown& l) {
  py::dict d;
  d["comm"] = l.comm;
  d["download"] = l.download;
  d["compute"] = l.compute;
  d["total"] = l.total;
  return d;
}

py::dict to_dict(const TaskRecord& t) {
  py::dict d;
  d["id"] = t.id;
  d["cpu"] = t.cpu_req;
  d["mem"] = t.mem_req;
  d["work"] = t.work;
  d["data_mbit"] = t.data_size;
  d["image"] = t.image_req;
  d["x"] = t.position.x;
  d["y"] = t.position.y;
  d["arrival"] = t.arrival_time;
  return d;
}

py::dict to_dict(const NodeRecord& n) {
  py::dict d;
  d["id"] = n.id;
  d["cpu"] = n.cpu_capacity;
  d["mem"] = n.mem_capacity;
  d["storage"] = n.storage_capacity;
  d["freq_ghz"] = n.cpu_freq;
  d["bandwidth_mbps"] = n.bandwidth;
  d["x"] = n.position.x;
  d["y"] = n.position.y;
  d["cpu_free"] = n.cpu_free;
  d["mem_free"] = n.mem_free;
  d["storage_free"] = n.storage_free;
  d["cached_images"] = n.cached_images;
  d["phase"] = static_cast<int>(n.upgrade_phase);
  d["running"] = n.running;
  return d;
}

py::object to_object(const std::optional<Observation>& obs) {
  if (!obs) return py::none();
  py::dict d;
  d["task"] = to_dict(obs->task);
  d["redecision"] = obs->redecision;
  d["features"] = obs->features;
  std::vector<bool> mask(obs->mask.begin(), obs->mask.end());
  d["mask"] = mask;
  return d;
}

py::dict to_dict(const EpisodeMetrics& m) {
  py::dict d;
  d["mean"] = to_dict(m.mean);
  py::list rows;
  for (const auto& r : m.rows) {
    py::dict row = to_dict(r.latency);
    row["task"] = r.task;
    row["node"] = r.node;
    row["placements"] = r.placements;
    rows.append(row);
  }
  d["tasks"] = rows;
  return d;
}

py::list to_list(const std::vector<EventLogRow>& log) {
  py::list out;
  for (const auto& r : log) {
    py::dict d = to_dict(r.latency);
    d["episode"] = r.episode;
    d["step"] = r.step;
    d["clock"] = r.clock;
    d["task"] = r.task;
    d["node"] = r.node;
    d["reward"] = r.reward;
    d["evicted"] = r.evicted;
    out.append(d);
  }
  return out;
}

std::unique_ptr<Scheduler> scheduler_for(const std::string& policy, std::uint64_t seed,
                                         const std::optional<std::filesystem::path>& checkpoint, bool greedy) {
  const Policy p = parse_policy(policy);
  if (p != Policy::Ocs) return make_baseline(p, seed);
  if (!checkpoint) throw Error(ErrorCode::MissingCheckpoint, "policy ocs needs a checkpoint");
  return make_ocs(load_checkpoint(*checkpoint), greedy, seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rolling-upgrade container scheduling";

  static py::exception<Error> error_type(m, "OcsError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(py::str(e.what()));
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("node_count", &ScenarioConfig::node_count)
      .def_readwrite("task_count", &ScenarioConfig::task_count)
      .def_readwrite("image_count", &ScenarioConfig::image_count)
      .def_readwrite("initial_cached_images", &ScenarioConfig::initial_cached_images)
      .def_readwrite("area_side_m", &ScenarioConfig::area_side_m)
      .def_readwrite("upgrade_duration_s", &ScenarioConfig::upgrade_duration_s)
      .def_readwrite("slot_s", &ScenarioConfig::slot_s)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def("validate", &validate_scenario)
      .def("to_text", [](const ScenarioConfig& c) { return to_text(c); })
      .def_static("from_text", &scenario_from_text)
      .def("__eq__", [](const ScenarioConfig& a, const ScenarioConfig& b) { return a == b; });

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_readwrite("actor_lr", &Hyperparams::actor_lr)
      .def_readwrite("critic_lr", &Hyperparams::critic_lr)
      .def_readwrite("gamma", &Hyperparams::gamma)
      .def_readwrite("gae_lambda", &Hyperparams::gae_lambda)
      .def_readwrite("clip_epsilon", &Hyperparams::clip_epsilon)
      .def_readwrite("batch_size", &Hyperparams::batch_size)
      .def_readwrite("epochs", &Hyperparams::epochs)
      .def_readwrite("hidden", &Hyperparams::hidden)
      .def_readwrite("episodes", &Hyperparams::episodes)
      .def_readwrite("entropy_coef", &Hyperparams::entropy_coef)
      .def("validate", &validate_hyperparams);

  py::class_<Simulator>(m, "Simulator")
      .def(py::init<>())
      .def("reset", [](Simulator& s, const ScenarioConfig& cfg, std::uint64_t seed) {
        return to_object(s.reset(cfg, seed));
      }, py::arg("config"), py::arg("seed"))
      .def("step", [](Simulator& s, NodeId action) {
        const StepOutcome out = s.step(action);
        py::dict d;
        d["observation"] = to_object(out.observation);
        d["reward"] = out.reward;
        d["done"] = out.done;
        d["task"] = out.info.task;
        d["node"] = out.info.node;
        d["latency"] = to_dict(out.info.latency);
        d["redecision"] = out.info.redecision;
        return d;
      }, py::arg("action"))
      .def_property_readonly("done", &Simulator::done)
      .def_property_readonly("clock", [](const Simulator& s) { return s.state().clock; })
      .def("feasible_nodes", &Simulator::feasible_nodes)
      .def("nodes", [](const Simulator& s) {
        py::list out;
        for (const auto& n : s.state().nodes) out.append(to_dict(n));
        return out;
      })
      .def("invariant_violations", [](const Simulator& s) { return check_invariants(s.state()); })
      .def("event_log", [](const Simulator& s) { return to_list(s.event_log()); })
      .def("metrics", [](const Simulator& s) { return to_dict(s.episode_metrics()); });

  m.def("generate_scenario", [](const ScenarioConfig& cfg, std::uint64_t seed) {
    const Scenario sc = generate_scenario(cfg, seed);
    py::dict d;
    py::list nodes, tasks;
    for (const auto& n : sc.cluster.nodes) nodes.append(to_dict(n));
    for (const auto& t : sc.tasks) tasks.append(to_dict(t));
    d["nodes"] = nodes;
    d["tasks"] = tasks;
    return d;
  }, py::arg("config"), py::arg("seed"));

  m.def("run_episode", [](const ScenarioConfig& cfg, std::uint64_t seed, const std::string& policy,
                          std::optional<std::filesystem::path> checkpoint, bool greedy) {
    auto scheduler = scheduler_for(policy, seed, checkpoint, greedy);
    const EpisodeResult r = run_episode(cfg, seed, *scheduler);
    py::dict d = to_dict(r.metrics);
    d["events"] = to_list(r.log);
    return d;
  }, py::arg("config"), py::arg("seed"), py::arg("policy") = "il", py::arg("checkpoint") = py::none(),
     py::arg("greedy") = true);

  m.def("train", [](const ScenarioConfig& cfg, const Hyperparams& hp, std::uint64_t seed,
                    std::optional<std::filesystem::path> checkpoint) {
    TrainResult result;
    {
      py::gil_scoped_release release;
      result = train(cfg, hp, seed);
    }
    if (checkpoint) save_checkpoint(result.params, *checkpoint);
    py::list report;
    for (const auto& r : result.report) {
      py::dict d;
      d["update"] = r.update_idx;
      d["policy_loss"] = r.policy_loss;
      d["value_loss"] = r.value_loss;
      d["mean_reward"] = r.mean_reward;
      d["mean_total_latency"] = r.mean_total_latency;
      d["mean_ratio"] = r.mean_ratio;
      d["aborted"] = r.aborted;
      report.append(d);
    }
    return report;
  }, py::arg("config"), py::arg("hyperparams"), py::arg("seed") = 1, py::arg("checkpoint") = py::none());

  m.def("load_checkpoint_info", [](const std::filesystem::path& path) {
    const PolicyParams p = load_checkpoint(path);
    py::dict d;
    d["node_count"] = p.node_count;
    d["actor_params"] = p.actor.param_count();
    d["critic_params"] = p.critic.param_count();
    return d;
  }, py::arg("path"));

  m.def("compare", [](const std::string& variable, std::vector<int> values, const std::vector<std::string>& policies,
                      int seeds, const ScenarioConfig& base, std::optional<std::filesystem::path> checkpoint_dir,
                      std::optional<std::filesystem::path> out_dir) {
    SweepSpec spec;
    spec.variable = parse_sweep_variable(variable);
    spec.values = std::move(values);
    spec.seeds = seeds;
    for (const auto& p : policies) spec.policies.push_back(parse_policy(p));
    const auto lookup = checkpoint_dir ? checkpoint_dir_lookup(*checkpoint_dir) : CheckpointLookup{};
    const auto rows = run_compare(spec, base, lookup, out_dir.value_or(std::filesystem::path{}));
    py::list out;
    for (const auto& r : rows) {
      py::dict d = to_dict(r.mean);
      d["variable"] = to_string(r.variable);
      d["value"] = r.value;
      d["policy"] = to_string(r.policy);
      d["seed"] = r.seed;
      out.append(d);
    }
    return out;
  }, py::arg("variable"), py::arg("values"), py::arg("policies"), py::arg("seeds") = 3,
     py::arg("base") = ScenarioConfig{}, py::arg("checkpoint_dir") = py::none(), py::arg("out_dir") = py::none());

  m.def("gae", [](const std::vector<double>& rewards, const std::vector<double>& values,
                  const std::vector<bool>& dones, double gamma, double lambda) {
    std::vector<std::uint8_t> d(dones.begin(), dones.end());
    const GaeResult r = gae(rewards, values, d, gamma, lambda);
    return py::make_tuple(r.advantages, r.returns);
  }, py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("gamma"), py::arg("lambda_"));
}
