"""Benchmark harness: random worlds, a grid-based shortest-path oracle, the
2D dual-resolution planning study, full-episode 3D flight studies and the
motion-optimizer convergence study.

All entry points are deterministic for a fixed seed and return plain dicts so
the CLI can serialize them directly.
"""
from __future__ import annotations

import json
import math
import os
import time as time_mod
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .geometry import path_length
from .jps import jps_search
from .map_planner import DagsParams, shortcut_cells, stitched_plan
from .mapping import GridMap2D, LocalMapParams, downsample, inflate
from .pcp import PcpParams, plan_motion
from .runtime import LoopRates, Scenario, run_episode
from .sim import Box, DynamicObstacle, World

_OFFSETS_3D = np.array([(dx, dy, dz)
                        for dx in (-1, 0, 1)
                        for dy in (-1, 0, 1)
                        for dz in (-1, 0, 1)
                        if (dx, dy, dz) > (0, 0, 0)])


# -- shortest-path oracle ----------------------------------------------------

def _world_grid(world: World, start, goal, resolution, clearance):
    pts = [np.asarray(start, dtype=float), np.asarray(goal, dtype=float)]
    for b in world.static:
        lo, hi = b.arrays()
        pts += [lo, hi]
    lo = np.min(pts, axis=0) - 1.0
    hi = np.max(pts, axis=0) + 1.0
    if world.ground_z is not None:
        lo[2] = max(lo[2], world.ground_z + clearance + resolution)
    shape = np.maximum(np.ceil((hi - lo) / resolution).astype(int), 1)
    centers_axes = [lo[k] + (np.arange(shape[k]) + 0.5) * resolution
                    for k in range(3)]
    occ = np.zeros(shape, dtype=bool)
    for b in world.static:
        blo, bhi = b.arrays()
        sel = []
        for k in range(3):
            sel.append((centers_axes[k] > blo[k] - clearance)
                       & (centers_axes[k] < bhi[k] + clearance))
        occ |= sel[0][:, None, None] & sel[1][None, :, None] & sel[2][None, None, :]
    return lo, shape, occ


def _segment_clear_of_boxes(a, b, boxes, clearance, step):
    n = max(int(np.ceil(np.linalg.norm(b - a) / step)), 1)
    t = np.linspace(0.0, 1.0, n + 1)
    samples = a + t[:, None] * (b - a)
    for box in boxes:
        lo, hi = box.arrays()
        nearest = np.clip(samples, lo, hi)
        if np.min(np.linalg.norm(samples - nearest, axis=1)) < clearance:
            return False
    return True


def oracle_shortest_path(world: World, start, goal, resolution: float = 0.1,
                         clearance: float = 0.15):
    """Globally shortest path length on a clearance-inflated fine voxel grid.

    26-connected Dijkstra followed by line-of-sight shortcutting; the result
    upper-bounds the true optimum by at most the grid discretization error.
    Returns (length, waypoints) or None when the goal is unreachable.
    """
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    lo, shape, occ = _world_grid(world, start, goal, resolution, clearance)
    free = ~occ
    nid = -np.ones(shape, dtype=np.int64)
    nid[free] = np.arange(int(free.sum()))

    rows, cols, data = [], [], []
    for off in _OFFSETS_3D:
        sa = tuple(slice(max(o, 0), s + min(o, 0))
                   for o, s in zip(off, shape))
        sb = tuple(slice(max(-o, 0), s + min(-o, 0))
                   for o, s in zip(off, shape))
        ok = free[sa] & free[sb]
        rows.append(nid[sa][ok])
        cols.append(nid[sb][ok])
        w = float(np.linalg.norm(off)) * resolution
        data.append(np.full(int(ok.sum()), w, dtype=np.float32))
    n = int(free.sum())
    graph = csr_matrix((np.concatenate(data),
                        (np.concatenate(rows), np.concatenate(cols))),
                       shape=(n, n))

    def cell_of(p):
        c = np.floor((p - lo) / resolution).astype(int)
        c = np.clip(c, 0, shape - 1)
        return tuple(c)

    c_start, c_goal = cell_of(start), cell_of(goal)
    if not free[c_start] or not free[c_goal]:
        return None
    dist, pred = dijkstra(graph, directed=False, indices=nid[c_start],
                          return_predecessors=True)
    gid = nid[c_goal]
    if not np.isfinite(dist[gid]):
        return None
    order = []
    node = gid
    while node >= 0:
        order.append(node)
        node = pred[node]
    order.reverse()
    coords = np.argwhere(free)
    pts = lo + (coords[order] + 0.5) * resolution
    pts = np.vstack([start, pts, goal])

    # greedy line-of-sight shortcut on the grid path
    boxes = world.static
    keep = [0]
    i = 0
    while i < len(pts) - 1:
        j = len(pts) - 1
        while j > i + 1 and not _segment_clear_of_boxes(
                pts[i], pts[j], boxes, clearance, resolution / 2.0):
            j -= 1
        keep.append(j)
        i = j
    path = pts[keep]
    return float(path_length(path)), path


# -- random 2D map benchmark -------------------------------------------------

def random_map_2d(size: int, seed: int, density: float = 0.12,
                  feature_max: int = 30) -> np.ndarray:
    """Seeded rectangle-and-wall obstacle map, cells in {0, 1}."""
    rng = np.random.default_rng(seed)
    cells = np.zeros((size, size), dtype=np.uint8)
    target = density * size * size
    while cells.sum() < target:
        if rng.random() < 0.3:      # thin wall
            w, h = (int(rng.integers(2, 5)), int(rng.integers(10, 3 * feature_max))) \
                if rng.random() < 0.5 else \
                (int(rng.integers(10, 3 * feature_max)), int(rng.integers(2, 5)))
        else:
            w = int(rng.integers(3, feature_max))
            h = int(rng.integers(3, feature_max))
        x = int(rng.integers(0, size - w))
        y = int(rng.integers(0, size - h))
        cells[x:x + w, y:y + h] = 1
    return cells


def _free_cell_near(cells, rng):
    size = cells.shape[0]
    while True:
        c = (int(rng.integers(0, size)), int(rng.integers(0, size)))
        if cells[c] == 0:
            return c


def _local_goal_cell(window: np.ndarray, center, goal_rel):
    """Goal cast to the window: inside if contained, else on the boundary."""
    n = window.shape[0]
    gx, gy = goal_rel
    if 0 <= gx < n and 0 <= gy < n:
        cell = (int(gx), int(gy))
    else:
        cx, cy = center
        dx, dy = gx - cx, gy - cy
        t = 1.0
        for p0, d, limit in ((cx, dx, n - 1), (cy, dy, n - 1)):
            if d > 0:
                t = min(t, (limit - p0) / d)
            elif d < 0:
                t = min(t, (0 - p0) / d)
        cell = (int(round(cx + t * dx)), int(round(cy + t * dy)))
        cell = (min(max(cell[0], 0), n - 1), min(max(cell[1], 0), n - 1))
    if window[cell] == 0:
        return cell
    free = np.argwhere(window == 0)
    if len(free) == 0:
        return None
    d = np.sum((free - np.asarray(cell)) ** 2, axis=1)
    x, y = free[int(np.argmin(d))]
    return int(x), int(y)


def _first_step(path_cells):
    (x0, y0), nxt = path_cells[0], path_cells[1]
    dx = int(np.sign(nxt[0] - x0))
    dy = int(np.sign(nxt[1] - y0))
    return x0 + dx, y0 + dy


def _window(cells, center, half, align: int = 1):
    """Window of side 2*half around the cell; outside the map counts as
    occupied so local plans never step off the grid.

    The origin is snapped down to a multiple of align so downsample blocks
    stay fixed in absolute map coordinates as the center moves.
    """
    size = cells.shape[0]
    x0, y0 = center[0] - half, center[1] - half
    x0 -= x0 % align
    y0 -= y0 % align
    win = np.ones((2 * half, 2 * half), dtype=np.uint8)
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x0 + 2 * half, size), min(y0 + 2 * half, size)
    win[sx0 - x0:sx1 - x0, sy0 - y0:sy1 - y0] = cells[sx0:sx1, sy0:sy1]
    return win, (x0, y0)


def _simulate_local(cells, start, goal, local_size, stitched: bool,
                    max_steps: int):
    """Move one cell per step along a freshly planned local path."""
    half = local_size // 2
    pos = start
    visited = [start]
    times = []
    stitch_cache = {"origin": None}
    # fine window about 35 percent of the full one gives a 4x pooling stride,
    # which keeps the coarse search small and the aligned window reusable
    m = int(local_size * 0.35)
    h = int(round(local_size * local_size / (2.0 * m * m)))
    params = LocalMapParams(l_ms=float(local_size), h_ms=6.0,
                            i=local_size, m=m, k=1,
                            s=(-local_size) % h, voxel_size=1.0)
    for _ in range(max_steps):
        if pos == goal:
            # smooth the realized cell path the same way the global baseline
            # is smoothed, so lengths compare in the same chord metric
            sc = shortcut_cells(visited, cells)
            length = path_length(np.array([(c[0], c[1], 0.0) for c in sc]))
            return length, float(np.mean(times))
        # align the window origin to the pooling stride so coarse blocks stay
        # fixed in map coordinates while the drone moves cell by cell
        align = params.h if stitched else 1
        win, (x0, y0) = _window(cells, pos, half, align)
        center = (pos[0] - x0, pos[1] - y0)
        goal_rel = (goal[0] - x0, goal[1] - y0)
        tic = time_mod.perf_counter()
        g_cell = _local_goal_cell(win, center, goal_rel)
        step_cell = None
        if g_cell is not None and g_cell != center:
            if stitched:
                sp = _stitched_on_window(win, (x0, y0), center, g_cell,
                                         params, stitch_cache)
                if sp is not None and len(sp) > 1:
                    step_cell = _first_step(sp)
            else:
                w = win.copy()
                w[center] = 0
                res = jps_search(w, center, g_cell)
                if res is not None and len(res[0]) > 1:
                    step_cell = _first_step(shortcut_cells(res[0], w))
        times.append(time_mod.perf_counter() - tic)
        if step_cell is None:
            return None
        nx, ny = x0 + step_cell[0], y0 + step_cell[1]
        if cells[nx, ny]:
            return None
        pos = (nx, ny)
        visited.append(pos)
    return None


def _stitched_on_window(win, origin, start_cell, g_cell,
                        params: LocalMapParams, cache: dict):
    """Plan on the dual-resolution stitched version of a window grid.

    start_cell is the drone cell in window coordinates; it may sit slightly
    off center when the window origin is stride-aligned. The alignment keeps
    the window contents fixed between origin shifts, so the derived maps and
    jump tables are reused until the origin moves.
    """
    i, m, h = params.i, params.m, params.h
    lo = i // 2 - m // 2
    if cache.get("origin") != origin:
        map_1 = GridMap2D(origin=np.zeros(2), resolution=1.0, cells=win)
        map_c = GridMap2D(origin=np.full(2, float(lo)), resolution=1.0,
                          cells=win[lo:lo + m, lo:lo + m].copy())
        cache.clear()
        cache.update(origin=origin, map_c=map_c,
                     map_1b=downsample(map_1, h, params.s), plan={})
    sp = stitched_plan(cache["map_1b"], cache["map_c"], g_cell, params,
                       start_cell_fine=start_cell, cache=cache["plan"])
    if sp is None:
        return None
    cells = [(c[0] + lo, c[1] + lo) for c in sp.fine_cells]
    cells += [(int(c[0] * h + h // 2), int(c[1] * h + h // 2))
              for c in sp.coarse_cells]
    return cells


def bench_map2d(map_size: int = 800, trials: int = 10, seed: int = 0,
                min_dist: int = 500, local_size: int = 200,
                density: float = 0.12) -> dict:
    """Global vs single-resolution local vs stitched dual-resolution study."""
    rows = []
    rng = np.random.default_rng(seed)
    done = 0
    attempt = 0
    while done < trials:
        attempt += 1
        cells = random_map_2d(map_size, seed * 1000 + attempt, density)
        start = _free_cell_near(cells, rng)
        goal = _free_cell_near(cells, rng)
        if math.hypot(goal[0] - start[0], goal[1] - start[1]) < min_dist:
            continue
        tic = time_mod.perf_counter()
        res_g = jps_search(cells, start, goal)
        t_global = time_mod.perf_counter() - tic
        if res_g is None:
            continue
        sc = shortcut_cells(res_g[0], cells)
        len_global = path_length(np.array([(c[0], c[1], 0.0) for c in sc]))
        max_steps = int(len_global * 3) + 100
        local = _simulate_local(cells, start, goal, local_size, False,
                                max_steps)
        stitched = _simulate_local(cells, start, goal, local_size, True,
                                   max_steps)
        if local is None or stitched is None:
            continue
        rows.append({
            "seed": seed * 1000 + attempt,
            "len_global": round(len_global, 6),
            "t_global": t_global,
            "len_local": round(local[0], 6),
            "t_local_step": local[1],
            "len_stitched": round(stitched[0], 6),
            "t_stitched_step": stitched[1],
        })
        done += 1
    summary = {
        "schema": 1,
        "trials": trials,
        "rows": rows,
        "mean_len_ratio_local": float(np.mean(
            [r["len_local"] / r["len_global"] for r in rows])),
        "mean_time_ratio_local": float(np.mean(
            [r["t_local_step"] / r["t_global"] for r in rows])),
        "mean_len_ratio_stitched": float(np.mean(
            [r["len_stitched"] / r["len_local"] for r in rows])),
        "mean_time_ratio_stitched": float(np.mean(
            [r["t_stitched_step"] / r["t_local_step"] for r in rows])),
    }
    return summary


# -- scripted and random 3D worlds ------------------------------------------

def wall_world():
    """The over-the-wall fixture: a 6 m wide, 2 m tall thin wall."""
    world = World(static=[Box((-0.1, -3.0, 0.0), (0.1, 3.0, 2.0))],
                  ground_z=0.0)
    return world, (-4.0, 0.0, 1.1), (4.0, 0.0, 1.1)


def random_world_3d(seed: int):
    """Desk-scale box world with a guaranteed-free start/goal pair.

    All pillars reach above the cruise altitude so the projected 2D map and
    the reactive layer agree on what blocks the flight plane, and pairwise
    gaps leave corridors wide enough for the safety radius.
    """
    rng = np.random.default_rng(seed)
    start = np.array([-4.0, 0.0, 1.1])
    goal = np.array([4.0, 0.0, 1.1])
    boxes = []
    n_boxes = int(rng.integers(2, 5))
    attempts = 0
    while len(boxes) < n_boxes and attempts < 200:
        attempts += 1
        cx = float(rng.uniform(-2.2, 2.2))
        cy = float(rng.uniform(-1.8, 1.8))
        sx = float(rng.uniform(0.3, 0.8))
        sy = float(rng.uniform(0.3, 0.8))
        h = float(rng.uniform(1.6, 2.2))
        box = Box((cx - sx / 2, cy - sy / 2, 0.0), (cx + sx / 2, cy + sy / 2, h))
        lo, hi = box.arrays()
        ok = True
        for p in (start, goal):
            if np.linalg.norm(p - np.clip(p, lo, hi)) < 1.2:
                ok = False
        for other in boxes:
            olo, ohi = other.arrays()
            gap = np.maximum(np.maximum(lo[:2] - ohi[:2], olo[:2] - hi[:2]), 0.0)
            if float(np.hypot(gap[0], gap[1])) < 1.5:
                ok = False
        if ok:
            boxes.append(box)
    world = World(static=boxes, ground_z=0.0)
    return world, tuple(start), tuple(goal)


def intruder_world(cross_x: float = 2.9, spawn_time: float = 10.0):
    """Corridor where a box pops up 1.5 m ahead of the cruising drone, right
    on the flight line, then crosses it sideways at 1 m/s."""
    world = World(
        static=[],
        dynamic=[DynamicObstacle(
            size=(0.4, 0.4, 1.6),
            times=[spawn_time, spawn_time + 2.5],
            positions=[(cross_x, 0.0, 0.8), (cross_x, 2.5, 0.8)])],
        ground_z=0.0)
    return world, (0.0, 0.0, 1.0), (6.0, 0.0, 1.0)


def flight_scenario(world, start, goal, seed: int, use_dags: bool = True,
                    known_world: bool = True, freeze_map: bool = True,
                    **overrides) -> Scenario:
    """Standard desk-scale flight configuration used by the 3D benchmarks."""
    kwargs = dict(
        world=world, start=start, goal=goal, seed=seed,
        pcp_params=PcpParams(v_max=0.15, a_max=2.0, r_safe=0.4),
        map_params=LocalMapParams(k=7),
        rates=LoopRates(filter_hz=30.0, mapping_hz=10.0, mp_hz=5.0,
                        pcp_hz=10.0, sim_dt=0.05),
        pcp_step_duration=0.1,
        dags_params=DagsParams(z_min=0.3),
        use_dags=use_dags, known_world=known_world, freeze_map=freeze_map,
    )
    kwargs.update(overrides)
    return Scenario(**kwargs)


def bench_flight3d(n_worlds: int = 10, seed: int = 0,
                   mode: str = "virtual_time",
                   include_wall: bool = True) -> dict:
    """Full-episode study: excess over the oracle, DAGS shortening, safety."""
    reports = []
    world_list = []
    if include_wall:
        world_list.append(("wall", *wall_world()))
    for k in range(n_worlds):
        world_list.append((f"random-{k}", *random_world_3d(seed * 100 + k)))
    for name, world, start, goal in world_list:
        oracle = oracle_shortest_path(world, start, goal)
        report = {"world": name, "start": list(start), "goal": list(goal)}
        for use_dags in (True, False):
            sc = flight_scenario(world, start, goal, seed, use_dags=use_dags)
            res = run_episode(sc, mode=mode)
            # charge the goal-tolerance shortfall so lengths compare like
            # for like with the oracle
            final = np.asarray(res.trajectory[-1][1:4], dtype=float)
            length = res.metrics["trajectory_length"] + float(
                np.linalg.norm(np.asarray(goal) - final))
            key = "dags" if use_dags else "no_dags"
            report[key] = {
                "status": res.status,
                "length": round(length, 6),
                "collisions": res.metrics["collisions"],
                "backups": res.metrics["backup_activations"],
                "mp_replans": res.metrics["mp_replans"],
                "timing": res.timing,
            }
        if oracle is not None:
            report["len_oracle"] = round(oracle[0], 6)
            if report["dags"]["status"] == "goal_reached":
                report["eta"] = round(
                    (report["dags"]["length"] - oracle[0]) / oracle[0], 6)
        reports.append(report)
    etas = [r["eta"] for r in reports if "eta" in r
            and r["world"].startswith("random")]
    return {
        "schema": 1,
        "reports": reports,
        "mean_eta": float(np.mean(etas)) if etas else None,
        "total_collisions": int(sum(
            r[k]["collisions"] for r in reports for k in ("dags", "no_dags"))),
    }


# -- optimizer study ---------------------------------------------------------

def sample_optimizer_instance(rng, params: PcpParams):
    v = rng.normal(size=3)
    v = v / np.linalg.norm(v) * rng.uniform(0.0, params.v_max)
    w = rng.normal(size=3)
    w = w / np.linalg.norm(w) * rng.uniform(0.05, params.r_det)
    t_avs = float(rng.uniform(0.005, 0.1))
    return np.zeros(3), v, w, t_avs


def bench_optimizer(instances: int = 10000, caps=(5, 10, 20, 80),
                    seed: int = 0) -> dict:
    params = PcpParams(v_max=1.0, a_max=2.0)
    rng = np.random.default_rng(seed)
    cases = [sample_optimizer_instance(rng, params) for _ in range(instances)]
    table = []
    for cap in caps:
        p = PcpParams(v_max=params.v_max, a_max=params.a_max,
                      max_opt_iters=int(cap))
        ok = 0
        feasible = 0
        tic = time_mod.perf_counter()
        for p_n, v_n, w, t_avs in cases:
            cmd = plan_motion(p_n, v_n, w, t_avs, p)
            if cmd.converged:
                ok += 1
            if (np.linalg.norm(cmd.a_n) <= p.a_max + 1e-9
                    and np.linalg.norm(cmd.v_next) <= p.v_max + 1e-9):
                feasible += 1
        elapsed = time_mod.perf_counter() - tic
        table.append({
            "max_steps": int(cap),
            "success_rate": ok / instances,
            "feasible_rate": feasible / instances,
            "mean_solve_ms": 1e3 * elapsed / instances,
        })
    return {"schema": 1, "instances": instances, "table": table}


# -- export ------------------------------------------------------------------

def export_plots(results, outdir: str) -> list:
    """Write trajectory CSVs and metrics JSONs plus a manifest."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    for idx, res in enumerate(results):
        base = os.path.join(outdir, f"episode_{idx:03d}")
        with open(base + "_trajectory.csv", "w") as f:
            f.write(res.trajectory_csv())
        with open(base + "_metrics.json", "w") as f:
            f.write(res.metrics_json())
        written += [base + "_trajectory.csv", base + "_metrics.json"]
    manifest = {"schema": 1, "files": [os.path.basename(w) for w in written]}
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2)
    written.append(path)
    return written
