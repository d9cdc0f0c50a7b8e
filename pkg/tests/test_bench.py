import json
import os

import numpy as np
import pytest

from dualnav.bench import (bench_optimizer, export_plots, intruder_world,
                           oracle_shortest_path, random_map_2d,
                           random_world_3d, wall_world)
from dualnav.sim import Box, World


def test_oracle_trivial_world_is_straight():
    world = World(static=[], ground_z=0.0)
    out = oracle_shortest_path(world, (0.0, 0.0, 1.0), (3.0, 0.0, 1.0))
    assert out is not None
    length, path = out
    assert length == pytest.approx(3.0, abs=1e-6)
    assert len(path) == 2


def test_oracle_detours_around_box():
    world = World(static=[Box((1.0, -4.0, 0.0), (2.0, 4.0, 4.0))],
                  ground_z=0.0)
    out = oracle_shortest_path(world, (0.0, 0.0, 1.0), (3.0, 0.0, 1.0))
    assert out is not None
    length, path = out
    # must leave the straight line, so strictly longer than 3 m
    assert length > 3.5
    assert len(path) >= 3


def test_oracle_unreachable_goal():
    world = World(static=[Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))])
    assert oracle_shortest_path(world, (-2.0, 0.0, 0.0), (0.0, 0.0, 0.0),
                                resolution=0.2) is None


def test_random_map_2d_deterministic():
    a = random_map_2d(100, seed=4)
    b = random_map_2d(100, seed=4)
    c = random_map_2d(100, seed=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    density = a.mean()
    assert 0.10 <= density <= 0.25


def test_random_world_3d_contract():
    for seed in range(5):
        world, start, goal = random_world_3d(seed)
        assert len(world.static) >= 2
        for box in world.static:
            lo, hi = box.arrays()
            assert hi[2] >= 1.6             # pillars top out above cruise
            for p in (start, goal):
                d = np.linalg.norm(np.asarray(p) - np.clip(p, lo, hi))
                assert d >= 1.2
        # identical seed reproduces identical geometry
        again, _, _ = random_world_3d(seed)
        assert all(np.allclose(a.arrays(), b.arrays())
                   for a, b in zip(world.static, again.static))


def test_wall_and_intruder_fixtures():
    world, start, goal = wall_world()
    assert len(world.static) == 1
    assert world.static[0].arrays()[1][2] == pytest.approx(2.0)
    iworld, istart, igoal = intruder_world()
    assert len(iworld.dynamic) == 1
    assert iworld.dynamic[0].center_at(5.0) is None
    assert np.allclose(iworld.dynamic[0].center_at(10.0), [2.9, 0.0, 0.8])


def test_bench_optimizer_small():
    out = bench_optimizer(instances=50, caps=(5, 20), seed=1)
    assert out["instances"] == 50
    assert [row["max_steps"] for row in out["table"]] == [5, 20]
    for row in out["table"]:
        assert row["feasible_rate"] == 1.0
        assert 0.0 <= row["success_rate"] <= 1.0
    # more iterations cannot hurt convergence
    assert out["table"][1]["success_rate"] >= out["table"][0]["success_rate"]


def test_export_plots(tmp_path):
    from dualnav.runtime import EpisodeResult
    res = EpisodeResult(status="goal_reached",
                        trajectory=[(0.05, 0, 0, 1, 0, 0, 0, "normal")],
                        events=[], metrics={"trajectory_length": 0.0},
                        timing={})
    written = export_plots([res], str(tmp_path))
    names = {os.path.basename(w) for w in written}
    assert names == {"episode_000_trajectory.csv",
                     "episode_000_metrics.json", "manifest.json"}
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["schema"] == 1
    assert len(manifest["files"]) == 2
    csv = (tmp_path / "episode_000_trajectory.csv").read_text()
    assert csv.splitlines()[0] == "t,x,y,z,vx,vy,vz,mode"
