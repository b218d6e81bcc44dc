import json
import math
import os
import tempfile

import numpy as np
import pytest

import reactsim as rs


def test_maps_round_trip():
    for m in (rs.ring_map(), rs.intersection_map(), rs.straight_map(100.0, 3)):
        back = rs.SemanticMap.from_json(m.to_json())
        assert back.to_json() == m.to_json()
    assert rs.straight_map(lanes=3).lane_count() == 3


def test_kinematics_round_trip():
    a = rs.AgentState(id=1, pose=rs.Pose2(1.0, 2.0, 0.3), speed=5.0)
    b = rs.advance(a, 0.2, 8.0, 0.1)
    assert math.hypot(b.pose.x - 1.0, b.pose.y - 2.0) == pytest.approx(0.8, abs=1e-12)
    phi, v = rs.fit_controls(a.pose, b.pose, 0.1)
    assert phi == pytest.approx(0.2, abs=1e-9)
    assert v == pytest.approx(8.0, abs=1e-9)


def test_obb_overlap():
    a = rs.Obb(0.0, 0.0, 2.0, 1.0)
    assert rs.obb_overlap(a, rs.Obb(3.0, 0.0, 2.0, 1.0, math.pi / 4))
    assert not rs.obb_overlap(a, rs.Obb(5.0, 0.0, 1.0, 1.0))


def test_simulate_is_seeded_and_serializable():
    cfg = {"map": "builtin:ring", "sim": {"horizon": 20, "seed": 3}, "mode": {"episodes": 2}}
    first = rs.simulate(cfg)
    assert len(first) == 2
    assert len(first[0]) == 21
    assert [e.to_jsonl() for e in first] == [e.to_jsonl() for e in rs.simulate(json.dumps(cfg))]
    parallel = dict(cfg, sim=dict(cfg["sim"], jobs=4))
    assert [e.to_jsonl() for e in rs.simulate(parallel)] == [e.to_jsonl() for e in first]
    assert rs.Episode.from_jsonl(first[0].to_jsonl()) == first[0]


def test_config_errors_are_typed():
    with pytest.raises(rs.IoError, match="config.sim.bogus"):
        rs.simulate({"sim": {"bogus": 1}})
    with pytest.raises(rs.DomainError):
        rs.simulate({"sim": {"dt": -1.0}})
    assert issubclass(rs.DomainError, ValueError)


def test_log_replay_realism_is_zero():
    ring = rs.ring_map()
    gt = rs.teacher_episode(ring, 5, 50)
    cfg = {
        "map": "builtin:ring",
        "sim": {"horizon": 50, "interrupt_on_ego_collision": False},
        "mode": {"name": "scenario", "source_log": "gt.jsonl"},
        "policies": {"default": "log_replay"},
        "ego": {"controller": "log_replay", "log": "gt.jsonl"},
    }
    with tempfile.TemporaryDirectory() as d:
        gt.save(os.path.join(d, "gt.jsonl"))
        (sim,) = rs.simulate(cfg, d)
    report = rs.displacement_error([sim], [gt])
    assert report["mean_l2"] == [0.0] * 6


def test_raster_and_extraction():
    s = rs.SimState()
    s.agents = [
        rs.AgentState(id=0, pose=rs.Pose2(0, 0, 0)),
        rs.AgentState(id=1, pose=rs.Pose2(12, 4, 0.5)),
        rs.AgentState(id=2, pose=rs.Pose2(-10, -6, -1.0)),
    ]
    grid = rs.render(s, rs.straight_map(), rs.Pose2(), 0.5, 96)
    agents = grid.plane("agents")
    assert agents.shape == (96, 96) and agents.dtype == np.uint8
    assert grid.plane("ego").sum() > 0
    found = rs.extract_agents(grid)
    assert len(found) == 2
    for a in s.agents[1:]:
        best = min(math.hypot(f["centroid"].x - a.pose.x, f["centroid"].y - a.pose.y) for f in found)
        assert best <= 0.5
    assert len(rs.state_from_raster(grid).agents) == 3


def test_metric_reports():
    assert rs.reactivity("log_replay", scenes=20)["reactivity"] <= 0.05
    assert rs.reactivity("reactive_follow", scenes=20)["reactivity"] >= 0.95
    lr = rs.planner_eval("log_replay", fixtures=6)
    rx = rs.planner_eval("reactive", fixtures=6)
    assert lr["rear_collisions"] > 0 and rx["rear_collisions"] == 0


def test_train_bc_reduces_loss():
    ring = rs.ring_map()
    eps = [rs.teacher_episode(ring, i, 30) for i in range(10)]
    weights, initial, losses = rs.train_bc(eps, ring, {"epochs": 5, "seed": 1})
    assert len(losses) == 5
    assert losses[-1] < initial
    assert [layer["rows"] for layer in weights["layers"]] == [32, 32, 2]
    again, _, _ = rs.train_bc(eps, ring, {"epochs": 5, "seed": 1})
    assert again == weights


def test_svg_frame():
    ring = rs.ring_map()
    e = rs.teacher_episode(ring, 2, 10)
    svg = rs.svg_frame(e, 3, ring)
    assert svg.startswith("<svg") and svg == rs.svg_frame(e, 3, ring)
