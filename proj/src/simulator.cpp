#include "ocs/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace ocs {

namespace {

// Downloads whose remainder falls below this are treated as complete, so a
// completion time computed by division always retires its queue entry.
constexpr double kDownloadEpsGbit = 1e-9;

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Arrival: return "arrival";
    case EventKind::Placement: return "placement";
    case EventKind::Finish: return "finish";
    case EventKind::DownloadComplete: return "download_complete";
    case EventKind::Eviction: return "eviction";
    case EventKind::UpgradeBegin: return "upgrade_begin";
    case EventKind::UpgradeFinish: return "upgrade_finish";
  }
  return "unknown";
}

Observation Simulator::reset(const ScenarioConfig& cfg, std::uint64_t seed) {
  return reset(generate_scenario(cfg, seed));
}

Observation Simulator::reset(Scenario scenario) {
  require_valid(scenario.cfg);
  if (scenario.cluster.nodes.empty()) throw Error(ErrorCode::InvalidConfig, "no nodes");
  for (std::size_t i = 0; i < scenario.tasks.size(); ++i)
    if (scenario.tasks[i].id != static_cast<TaskId>(i))
      throw Error(ErrorCode::InvalidArgument, "task ids must be 0..K-1 in order");

  state_ = ClusterState{};
  state_.cfg = scenario.cfg;
  state_.channel = channel_params(scenario.cfg);
  state_.nodes = std::move(scenario.cluster.nodes);
  state_.images = std::move(scenario.cluster.images);
  state_.tasks = std::move(scenario.tasks);
  state_.min_freq = min_frequency(state_.nodes);
  state_.evicted.assign(state_.tasks.size(), 0);

  std::vector<TaskId> order(state_.tasks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<TaskId>(i);
  std::stable_sort(order.begin(), order.end(), [this](TaskId a, TaskId b) {
    return state_.task(a).arrival_time < state_.task(b).arrival_time;
  });
  state_.upcoming.assign(order.begin(), order.end());

  task_rows_.assign(state_.tasks.size(), TaskLatencyRow{});
  for (std::size_t i = 0; i < task_rows_.size(); ++i) {
    task_rows_[i].task = static_cast<TaskId>(i);
    task_rows_[i].node = -1;
  }
  log_.clear();
  step_ = 0;
  done_ = false;

  admit_arrivals();
  advance_to_decision();
  if (!observation_) throw Error(ErrorCode::InvalidConfig, "episode has no decisions");
  return *observation_;
}

std::vector<NodeId> Simulator::feasible_nodes() const {
  if (done_ || state_.pending.empty()) return {};
  return ocs::feasible_nodes(state_, state_.task(state_.pending.front()));
}

void Simulator::notify(EventKind kind) const {
  if (observer_) observer_(state_, kind);
}

void Simulator::admit_arrivals() {
  while (!state_.upcoming.empty() && state_.task(state_.upcoming.front()).arrival_time <= state_.clock) {
    state_.pending.push_back(state_.upcoming.front());
    state_.upcoming.pop_front();
    notify(EventKind::Arrival);
  }
}

StepOutcome Simulator::step(NodeId action) {
  if (done_) throw Error(ErrorCode::InvalidArgument, "episode is done");
  if (action < 0 || static_cast<std::size_t>(action) >= state_.nodes.size())
    throw Error(ErrorCode::ConstraintViolation, "action " + std::to_string(action) + " is not a node");

  const TaskId task_id = state_.pending.front();
  const TaskRecord& task = state_.task(task_id);
  NodeRecord& node = state_.nodes[static_cast<std::size_t>(action)];
  if (!is_feasible(state_, node, task))
    throw Error(ErrorCode::ConstraintViolation,
                "constraint violation: task " + std::to_string(task_id) + " on node " + std::to_string(action));

  const bool redecision = state_.evicted[static_cast<std::size_t>(task_id)] != 0;
  const LatencyBreakdown latency = evaluate_placement(state_, task, action, redecision);

  node.cpu_free -= task.cpu_req;
  node.mem_free -= task.mem_req;
  if (!node.has_image(task.image_req) && !node.is_downloading(task.image_req)) {
    const ImageRecord& image = state_.image(task.image_req);
    node.storage_free -= image.size;
    node.download_queue.push_back({image.id, image.size});
  }
  node.running.insert(std::upper_bound(node.running.begin(), node.running.end(), task_id), task_id);
  state_.in_flight[task_id] = Placement{action, state_.clock, state_.clock + latency.comm,
                                        state_.clock + latency.total, latency};
  state_.pending.pop_front();
  state_.evicted[static_cast<std::size_t>(task_id)] = 0;

  TaskLatencyRow& row = task_rows_[static_cast<std::size_t>(task_id)];
  row.node = action;
  row.placements += 1;
  row.latency = total_latency(row.latency.comm + latency.comm, row.latency.download + latency.download,
                              row.latency.compute + latency.compute);

  StepOutcome out;
  out.reward = reward(task, latency, state_.min_freq);
  out.info = StepInfo{task_id, action, latency, redecision};
  log_.push_back(EventLogRow{episode_, step_, state_.clock, task_id, action, latency, out.reward, redecision});
  ++step_;
  notify(EventKind::Placement);

  advance_to_decision();
  out.done = done_;
  out.observation = observation_;
  return out;
}

void Simulator::advance_to_decision() {
  observation_.reset();
  for (;;) {
    if (!state_.pending.empty()) {
      const TaskRecord& head = state_.task(state_.pending.front());
      bool any = std::any_of(state_.nodes.begin(), state_.nodes.end(),
                             [&](const NodeRecord& n) { return is_feasible(state_, n, head); });
      if (any) {
        observation_ = make_observation();
        return;
      }
      if (state_.upgrading_node() < 0 && state_.in_flight.empty())
        throw Error(ErrorCode::Deadlock, "deadlock: task " + std::to_string(head.id) + " fits no node");
    } else if (all_finished()) {
      done_ = true;
      return;
    }
    tick();
  }
}

bool Simulator::all_finished() const {
  if (!state_.upcoming.empty() || !state_.pending.empty() || !state_.in_flight.empty()) return false;
  return std::all_of(state_.nodes.begin(), state_.nodes.end(),
                     [](const NodeRecord& n) { return n.upgrade_phase == UpgradePhase::Upgraded; });
}

double Simulator::next_internal_event() const {
  double t = state_.upgrade_finish_time;
  for (const auto& [id, p] : state_.in_flight) t = std::min(t, p.finish_time);
  for (const auto& n : state_.nodes)
    if (!n.download_queue.empty())
      t = std::min(t, state_.clock + n.download_queue.front().remaining_gbit * kMegabitsPerGigabit / n.bandwidth);
  return t;
}

void Simulator::drain_downloads(double dt) {
  for (auto& n : state_.nodes) {
    double budget = n.bandwidth * dt / kMegabitsPerGigabit;
    while (!n.download_queue.empty()) {
      QueuedDownload& head = n.download_queue.front();
      if (budget + kDownloadEpsGbit >= head.remaining_gbit) {
        budget = std::max(0.0, budget - head.remaining_gbit);
        ImageId image = head.image;
        n.download_queue.erase(n.download_queue.begin());
        n.cached_images.insert(std::upper_bound(n.cached_images.begin(), n.cached_images.end(), image), image);
        notify(EventKind::DownloadComplete);
      } else {
        head.remaining_gbit -= budget;
        break;
      }
    }
  }
}

void Simulator::finish_due_tasks() {
  std::vector<std::pair<double, TaskId>> due;
  for (const auto& [id, p] : state_.in_flight)
    if (p.finish_time <= state_.clock) due.emplace_back(p.finish_time, id);
  std::sort(due.begin(), due.end());
  for (const auto& [when, id] : due) {
    auto it = state_.in_flight.find(id);
    NodeRecord& node = state_.nodes[static_cast<std::size_t>(it->second.node)];
    const TaskRecord& task = state_.task(id);
    node.cpu_free += task.cpu_req;
    node.mem_free += task.mem_req;
    node.running.erase(std::find(node.running.begin(), node.running.end(), id));
    state_.completed.emplace_back(id, it->second);
    state_.in_flight.erase(it);
    notify(EventKind::Finish);
  }
}

void Simulator::tick() {
  const std::int64_t target_index = state_.slot_index + 1;
  const double target = static_cast<double>(target_index) * state_.cfg.slot_s;
  for (;;) {
    double t = next_internal_event();
    if (t > target) break;
    t = std::max(t, state_.clock);
    drain_downloads(t - state_.clock);
    state_.clock = t;
    finish_due_tasks();
    if (state_.upgrading_node() >= 0 && state_.upgrade_finish_time <= state_.clock) finish_upgrade();
  }
  drain_downloads(target - state_.clock);
  state_.clock = target;
  state_.slot_index = target_index;
  admit_arrivals();
  maybe_begin_upgrade();
}

void Simulator::maybe_begin_upgrade() {
  if (state_.upgrading_node() >= 0 || state_.upgrade_cursor >= state_.nodes.size()) return;
  for (TaskId t : state_.pending)
    if (state_.evicted[static_cast<std::size_t>(t)]) return;
  begin_upgrade();
}

void Simulator::begin_upgrade() {
  if (state_.upgrading_node() >= 0) throw Error(ErrorCode::UpgradeConflict, "an upgrade is already active");
  if (state_.upgrade_cursor >= state_.nodes.size())
    throw Error(ErrorCode::UpgradeConflict, "all nodes already upgraded");

  NodeRecord& node = state_.nodes[state_.upgrade_cursor];
  while (!node.running.empty()) {
    TaskId id = node.running.front();
    const TaskRecord& task = state_.task(id);
    node.running.erase(node.running.begin());
    node.cpu_free += task.cpu_req;
    node.mem_free += task.mem_req;
    state_.in_flight.erase(id);
    state_.pending.push_back(id);
    state_.evicted[static_cast<std::size_t>(id)] = 1;
    notify(EventKind::Eviction);
  }
  node.upgrade_phase = UpgradePhase::Upgrading;
  state_.upgrade_finish_time = state_.clock + state_.cfg.upgrade_duration_s;
  notify(EventKind::UpgradeBegin);
}

void Simulator::finish_upgrade() {
  NodeId id = state_.upgrading_node();
  if (id < 0) throw Error(ErrorCode::UpgradeConflict, "no upgrade in progress");
  if (state_.clock < state_.upgrade_finish_time)
    throw Error(ErrorCode::UpgradeConflict, "upgrade of node " + std::to_string(id) + " not complete");
  state_.nodes[static_cast<std::size_t>(id)].upgrade_phase = UpgradePhase::Upgraded;
  state_.upgrade_cursor += 1;
  state_.upgrade_finish_time = std::numeric_limits<double>::infinity();
  notify(EventKind::UpgradeFinish);
}

Observation Simulator::make_observation() const {
  const TaskId head = state_.pending.front();
  const TaskRecord& task = state_.task(head);
  return Observation{task, state_.evicted[static_cast<std::size_t>(head)] != 0, encode(state_, task),
                     mask(state_, task)};
}

EpisodeMetrics Simulator::episode_metrics() const {
  if (!done_) throw Error(ErrorCode::EpisodeNotDone, "episode not done");
  EpisodeMetrics m;
  m.rows = task_rows_;
  double comm = 0, down = 0, comp = 0;
  for (const auto& r : m.rows) {
    comm += r.latency.comm;
    down += r.latency.download;
    comp += r.latency.compute;
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, m.rows.size()));
  m.mean = total_latency(comm / n, down / n, comp / n);
  return m;
}

}  // namespace ocs
