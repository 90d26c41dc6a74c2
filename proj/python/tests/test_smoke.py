import math

import pytest

import ocs_sim


def small_config(nodes=5, tasks=30):
    cfg = ocs_sim.ScenarioConfig()
    cfg.node_count = nodes
    cfg.task_count = tasks
    return cfg


def test_generate_scenario_shapes():
    sc = ocs_sim.generate_scenario(small_config(), 7)
    assert len(sc["nodes"]) == 5
    assert len(sc["tasks"]) == 30
    arrivals = [t["arrival"] for t in sc["tasks"]]
    assert arrivals == sorted(arrivals)


def test_simulator_step_loop_keeps_invariants():
    sim = ocs_sim.Simulator()
    obs = sim.reset(small_config(), 3)
    steps = 0
    while True:
        assert any(obs["mask"])
        action = sim.feasible_nodes()[0]
        out = sim.step(action)
        assert sim.invariant_violations() == []
        steps += 1
        if out["done"]:
            break
        obs = out["observation"]
    assert sim.done
    assert steps >= 30
    metrics = sim.metrics()
    assert len(metrics["tasks"]) == 30


def test_reward_identity_on_event_log():
    cfg = small_config()
    sc = ocs_sim.generate_scenario(cfg, 4)
    fmin = min(n["freq_ghz"] for n in sc["nodes"])
    work = {t["id"]: t["work"] for t in sc["tasks"]}
    result = ocs_sim.run_episode(cfg, 4, "la")
    for row in result["events"]:
        assert math.isclose(row["reward"], work[row["task"]] / fmin - row["total"], abs_tol=1e-9)


def test_run_episode_is_deterministic():
    cfg = small_config()
    a = ocs_sim.run_episode(cfg, 11, "eq")
    b = ocs_sim.run_episode(cfg, 11, "eq")
    assert a == b


def test_train_then_evaluate(tmp_path):
    cfg = small_config(4, 20)
    hp = ocs_sim.Hyperparams()
    hp.episodes = 3
    ckpt = tmp_path / "ocs_n4.ckpt"
    report = ocs_sim.train(cfg, hp, 1, ckpt)
    assert len(report) == 3
    assert ocs_sim.load_checkpoint_info(ckpt)["node_count"] == 4
    result = ocs_sim.run_episode(cfg, 2, "ocs", ckpt)
    assert result["mean"]["total"] > 0


def test_compare_cardinality(tmp_path):
    rows = ocs_sim.compare("tasks", [10, 20], ["eq", "il"], 2, small_config(), None, tmp_path)
    assert len(rows) == 8
    assert (tmp_path / "compare_tasks.csv").exists()


def test_missing_checkpoint_raises_with_code(tmp_path):
    with pytest.raises(ocs_sim.OcsError) as err:
        ocs_sim.compare("nodes", [5], ["ocs"], 1, small_config(), tmp_path)
    assert err.value.code == "missing_checkpoint"


def test_gae_matches_direct_sum():
    rewards = [1.0, -0.5, 2.0]
    values = [0.3, 0.1, -0.2, 0.4]
    dones = [False, False, True]
    gamma, lam = 0.9, 0.8
    adv, ret = ocs_sim.gae(rewards, values, dones, gamma, lam)
    deltas = []
    for t in range(3):
        nonterminal = 0.0 if dones[t] else 1.0
        deltas.append(rewards[t] + gamma * nonterminal * values[t + 1] - values[t])
    for t in range(3):
        expected, weight = 0.0, 1.0
        for k in range(t, 3):
            expected += weight * deltas[k]
            if dones[k]:
                break
            weight *= gamma * lam
        assert math.isclose(adv[t], expected, abs_tol=1e-12)
        assert math.isclose(ret[t], adv[t] + values[t], abs_tol=1e-12)
