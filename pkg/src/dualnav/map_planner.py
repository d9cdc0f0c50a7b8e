"""Low-frequency map planner: local-goal casting, stitched dual-resolution 2D
search, chord-shortcut optimization, the two-round discrete angular 3D search
and the final path selection."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from scipy.ndimage import label

from .geometry import (direction_from_angles, min_clearance, path_length,
                       segment_point_distances, spherical_angles, wrap_angle)
from .jps import JpsGrid, jps_search, line_is_free
from .mapping import GridMap2D, LocalMapParams, cut_center, downsample, inflate


@dataclass
class PlanPath:
    waypoints: np.ndarray       # (N, 3), Earth frame
    kind: str = "2D-lifted"     # "2D-lifted" or "3D"

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)
        if len(wp) == 0:
            raise ValueError("a path needs at least one waypoint")
        if len(wp) > 1:
            keep = [0]
            for idx in range(1, len(wp)):
                if np.linalg.norm(wp[idx] - wp[keep[-1]]) > 1e-12:
                    keep.append(idx)
            wp = wp[keep]
        self.waypoints = wp

    def length(self) -> float:
        return path_length(self.waypoints)

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "waypoints": [list(map(float, w)) for w in self.waypoints],
        })


@dataclass
class DagsParams:
    alpha_res: float = math.radians(10.0)
    r_safe: float = 0.5
    z_min: float | None = None            # minimum allowed flight altitude
    range_from_origin: bool = False       # measure l_tp from p_sr, not p_n

    def __post_init__(self):
        if not (0.0 < self.alpha_res <= math.pi / 4):
            raise ValueError("alpha_res must be in (0, pi/4]")
        if self.r_safe <= 0:
            raise ValueError("r_safe must be > 0")


def cast_local_goal(p_n, global_goal, params: LocalMapParams,
                    map_1_inflated: GridMap2D):
    """Cast the global goal into the local cuboid and onto the 2D grid.

    Returns (g_l, cell). When the projected cell is occupied in the inflated
    map, the nearest free cell on the map edge is substituted.
    """
    p = np.asarray(p_n, dtype=float)
    g = np.asarray(global_goal, dtype=float)
    half = np.array([params.l_ms / 2.0, params.l_ms / 2.0, params.h_ms / 2.0])
    d = g - p
    if np.all(np.abs(d) <= half + 1e-12):
        g_l = g.copy()
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            t_faces = np.where(d != 0.0, half / np.abs(d), np.inf)
        t = float(np.min(t_faces))
        g_l = p + t * d
    cell = map_1_inflated.world_to_cell(g_l[:2])
    n = map_1_inflated.cells.shape[0]
    cell = (min(max(cell[0], 0), n - 1), min(max(cell[1], 0), n - 1))
    if not map_1_inflated.is_free(cell):
        cell = _nearest_free_edge_cell(map_1_inflated, cell) or cell
    return g_l, cell


def _edge_cells(grid: GridMap2D):
    n, m = grid.cells.shape
    for x in range(n):
        yield (x, 0)
        yield (x, m - 1)
    for y in range(1, m - 1):
        yield (0, y)
        yield (n - 1, y)


def _nearest_free_edge_cell(grid: GridMap2D, ref):
    best, best_d = None, np.inf
    for cell in _edge_cells(grid):
        if grid.cells[cell[0], cell[1]] == 0:
            d = (cell[0] - ref[0]) ** 2 + (cell[1] - ref[1]) ** 2
            if d < best_d:
                best, best_d = cell, d
    return best


def shortcut_cells(path: list, cells: np.ndarray) -> list:
    """Waypoint deletion loop: repeatedly drop the intermediate waypoint when
    the chord two positions ahead is collision-free on the grid.

    Every merged edge is a chord that was itself rasterization-checked, so
    the output is collision-free whenever the input is.
    """
    path = list(path)
    ck = 0
    while ck < len(path) - 2:
        if line_is_free(cells, path[ck], path[ck + 2]):
            del path[ck + 1]
        else:
            ck += 1
    return path


def shortcut_path(path: PlanPath, grid: GridMap2D) -> PlanPath:
    """Grid-space shortcut of a 2D path whose waypoints lie on cell centers."""
    cells = [grid.world_to_cell(w[:2]) for w in path.waypoints]
    kept = shortcut_cells(cells, grid.cells)
    z = path.waypoints[0][2]
    wps = [np.append(grid.cell_center(c), z) for c in kept]
    return PlanPath(np.array(wps), kind=path.kind)


@dataclass
class StitchedPlan:
    path: PlanPath              # Earth XY waypoints, z = 0
    fine_cells: list            # shortcut Path_a in Map_c cell coords
    coarse_cells: list          # shortcut Path_b remainder in Map_1b cells
    g_ist: tuple | None


def _coarse_to_fine_center(cell, h):
    return (cell[0] * h + h / 2.0, cell[1] * h + h / 2.0)


def _exempt_start(cells: np.ndarray, start, cache: dict | None, key: str):
    """Cells with the start cell forced free, plus a reusable JpsGrid.

    When the start cell is already free the cells are untouched and the grid
    can come from (and go into) the caller's cache; the cache must be cleared
    whenever the underlying map changes.
    """
    if cells[start[0], start[1]]:
        cells = cells.copy()
        cells[start[0], start[1]] = 0
        return cells, JpsGrid(cells)
    if cache is None:
        return cells, JpsGrid(cells)
    grid = cache.get(key)
    if grid is None:
        grid = JpsGrid(cells)
        cache[key] = grid
    return cells, grid


def stitched_plan(map_1b: GridMap2D, map_c_inflated: GridMap2D,
                  goal_cell_fine, params: LocalMapParams,
                  start_cell_fine=None, cache: dict | None = None):
    """Path_1 on the dual-resolution stitched map.

    Plans the coarse path on Map_1b, cuts it at the Map_c boundary, replans
    the inside portion at full resolution and concatenates, shortcutting each
    portion on its own grid. Returns a StitchedPlan or None on failure.

    A cache dict owned by the caller amortizes the jump tables over repeated
    calls with the same two maps; pass a fresh dict after any map update.
    """
    h = params.h
    i, m = params.i, params.m
    lo = i // 2 - m // 2
    start_fine = (i // 2, i // 2) if start_cell_fine is None else start_cell_fine
    gx, gy = goal_cell_fine

    start_c = (start_fine[0] - lo, start_fine[1] - lo)
    cells_c, grid_c = _exempt_start(map_c_inflated.cells, start_c, cache,
                                    "grid_c")

    inside = lo <= gx < lo + m and lo <= gy < lo + m
    coarse_rest: list = []
    g_ist = None
    if inside:
        goal_c = (gx - lo, gy - lo)
        res_a = None
        if cells_c[goal_c[0], goal_c[1]] == 0:
            res_a = jps_search(cells_c, start_c, goal_c, grid_c)
        if res_a is None:
            goal_c = _nearest_reachable(cells_c, start_c, goal_c)
            if goal_c is None:
                return None
            res_a = jps_search(cells_c, start_c, goal_c, grid_c)
        if res_a is None:
            return None
        fine_path = res_a[0]
    else:
        start_b = (start_fine[0] // h, start_fine[1] // h)
        cells_b, grid_b = _exempt_start(map_1b.cells, start_b, cache, "grid_b")
        goal_b = (gx // h, gy // h)
        # conservative pooling can block or isolate the coarse goal cell even
        # when the fine goal cell is free; snap to the nearest free coarse
        # cell reachable from the start
        res_b = None
        if cells_b[goal_b[0], goal_b[1]] == 0:
            res_b = jps_search(cells_b, start_b, goal_b, grid_b)
        if res_b is None:
            goal_b = _nearest_reachable(cells_b, start_b, goal_b)
            if goal_b is None:
                return None
            res_b = jps_search(cells_b, start_b, goal_b, grid_b)
        if res_b is None:
            return None
        path_b = res_b[0]
        k = next((idx for idx, c in enumerate(path_b)
                  if not _coarse_inside(c, h, lo, m)), None)
        if k is None:
            # numerically inside after all; plan fine directly to the goal
            k = len(path_b)
        if k == 0:
            return None
        prev_f = _coarse_to_fine_center(path_b[k - 1], h)
        if k < len(path_b):
            cur_f = _coarse_to_fine_center(path_b[k], h)
            cross = _segment_box_exit(prev_f, cur_f, lo, lo + m)
        else:
            cross = prev_f
        cand = (min(max(int(round(cross[0] - lo)), 0), m - 1),
                min(max(int(round(cross[1] - lo)), 0), m - 1))
        res_a = None
        if cells_c[cand[0], cand[1]] == 0:
            g_ist = cand
            res_a = jps_search(cells_c, start_c, g_ist, grid_c)
        if res_a is None:
            g_ist = _nearest_reachable(cells_c, start_c,
                                       (cross[0] - lo, cross[1] - lo),
                                       boundary_only=True)
            if g_ist is None:
                return None
            res_a = jps_search(cells_c, start_c, g_ist, grid_c)
        if res_a is None:
            return None
        fine_path = res_a[0]
        coarse_rest = path_b[k:]

    fine_sc = shortcut_cells(fine_path, cells_c)
    coarse_sc = (shortcut_cells(coarse_rest, map_1b.cells)
                 if len(coarse_rest) > 2 else coarse_rest)

    pts = [np.append(map_c_inflated.cell_center(c), 0.0) for c in fine_sc]
    pts += [np.append(map_1b.cell_center(c), 0.0) for c in coarse_sc]
    return StitchedPlan(path=PlanPath(np.array(pts), kind="2D-lifted"),
                        fine_cells=fine_sc, coarse_cells=list(coarse_sc),
                        g_ist=g_ist)


def _coarse_inside(cell, h, lo, m):
    cx, cy = _coarse_to_fine_center(cell, h)
    return lo <= cx < lo + m and lo <= cy < lo + m


def _segment_box_exit(a, b, lo, hi):
    """Intersection of segment a->b (a inside) with the square [lo, hi]^2."""
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    t = 1.0
    for p0, d in ((ax, dx), (ay, dy)):
        if d > 0:
            t = min(t, (hi - p0) / d)
        elif d < 0:
            t = min(t, (lo - p0) / d)
    return ax + t * dx, ay + t * dy


def _nearest_free_in_grid(cells: np.ndarray, ref):
    free = np.argwhere(cells == 0)
    if len(free) == 0:
        return None
    d = np.sum((free - np.asarray(ref)) ** 2, axis=1)
    x, y = free[int(np.argmin(d))]
    return int(x), int(y)


def _nearest_reachable(cells: np.ndarray, start, ref, boundary_only=False):
    """Nearest free cell to ref within start's 8-connected free component."""
    lab, _ = label(cells == 0, structure=np.ones((3, 3), dtype=int))
    comp = lab[start[0], start[1]]
    if comp == 0:
        return None
    mask = lab == comp
    if boundary_only:
        inner = np.zeros_like(mask)
        inner[1:-1, 1:-1] = True
        mask &= ~inner
    cand = np.argwhere(mask)
    if len(cand) == 0:
        return None
    d = np.sum((cand - np.asarray(ref)) ** 2, axis=1)
    x, y = cand[int(np.argmin(d))]
    return int(x), int(y)


class AngularGraph:
    """Goal-relative discretized direction cells for one search round."""

    def __init__(self, points: np.ndarray, origin, goal, alpha_res: float):
        self.alpha_res = alpha_res
        self.az_g, self.el_g = spherical_angles(np.asarray(goal) - np.asarray(origin))
        self.cells: dict = {}
        origin = np.asarray(origin, dtype=float)
        for idx, p in enumerate(np.asarray(points, dtype=float).reshape(-1, 3)):
            az, el = spherical_angles(p - origin)
            rel = (wrap_angle(az - self.az_g), el - self.el_g)
            key = (int(math.floor(rel[0] / alpha_res)),
                   int(math.floor(rel[1] / alpha_res)))
            self.cells.setdefault(key, []).append(idx)

    def edge_cells(self):
        out = []
        for (a, b) in self.cells:
            for na, nb in ((a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)):
                if (na, nb) not in self.cells:
                    out.append((a, b))
                    break
        return out

    def cell_center_angles(self, cell):
        return ((cell[0] + 0.5) * self.alpha_res,
                (cell[1] + 0.5) * self.alpha_res)

    def min_norm_edge_cell(self):
        best, best_key = None, None
        for cell in self.edge_cells():
            ca, cb = self.cell_center_angles(cell)
            # ties between symmetric cells prefer the higher elevation (climb
            # over an obstacle rather than duck under it)
            key = (math.hypot(ca, cb), -cb, cell)
            if best_key is None or key < best_key:
                best, best_key = cell, key
        return best

    def to_json(self) -> str:
        return json.dumps({
            "alpha_res": self.alpha_res,
            "goal_angles": [self.az_g, self.el_g],
            "occupied_cells": sorted(self.cells.keys()),
        })


def dags_search(pcl_lm: np.ndarray, p_n, g_l, improved_2d: PlanPath,
                params: DagsParams):
    """Two-round angular search for a 3D path over/around nearby obstacles.

    Returns a clearance-validated PlanPath(3D) or None.
    """
    p_n = np.asarray(p_n, dtype=float)
    g_l = np.asarray(g_l, dtype=float)
    pts = np.asarray(pcl_lm, dtype=float).reshape(-1, 3)

    wp = improved_2d.waypoints
    jp1 = wp[1] if len(wp) > 1 else wp[0]
    jp1 = np.array([jp1[0], jp1[1], p_n[2]])
    split_r = float(np.linalg.norm(p_n - jp1))

    if len(pts):
        dist = np.linalg.norm(pts - p_n, axis=1)
        subsets = [pts[dist < split_r], pts[dist >= split_r]]
    else:
        subsets = [pts, pts]

    tps = []
    origin = p_n
    for subset in subsets:
        if len(subset) == 0:
            continue
        # a round only steers when its point subset actually blocks the
        # direct run to the local goal
        if np.min(segment_point_distances(origin, g_l, subset)) >= params.r_safe:
            continue
        graph = AngularGraph(subset, origin, g_l, params.alpha_res)
        cell = graph.min_norm_edge_cell()
        if cell is None:
            continue
        members = subset[graph.cells[cell]]
        d_seg = segment_point_distances(origin, g_l, members)
        p_eg = members[int(np.argmax(d_seg))]
        range_origin = origin if params.range_from_origin else p_n
        l_tp = float(np.linalg.norm(range_origin - p_eg))
        if params.r_safe > l_tp:
            return None
        alpha_safe = math.asin(params.r_safe / l_tp)
        ca, cb = graph.cell_center_angles(cell)
        norm = math.hypot(ca, cb)
        scale = (norm + alpha_safe) / norm if norm > 0 else 0.0
        rel = (ca * scale, cb * scale)
        az = graph.az_g + rel[0]
        el = graph.el_g + rel[1]
        tp = origin + l_tp * direction_from_angles(az, el)
        tps.append(tp)
        origin = tp

    candidate = [p_n] + tps + [g_l]
    path = PlanPath(np.array(candidate), kind="3D")
    if min_clearance(path.waypoints, pts) < params.r_safe:
        return None
    if params.z_min is not None and np.any(path.waypoints[:, 2] < params.z_min):
        return None
    return path


def select_final_path(path_2d: PlanPath, path_3d: PlanPath | None,
                      z_start: float, z_goal: float) -> PlanPath:
    """Shorter of the lifted 2D path and the 3D candidate; ties go to 2D."""
    lifted = lift_path(path_2d, z_start, z_goal)
    if path_3d is None or path_3d.length() >= lifted.length():
        return lifted
    return path_3d


def lift_path(path_2d: PlanPath, z_start: float, z_goal: float) -> PlanPath:
    wp = path_2d.waypoints.copy()
    seg = np.linalg.norm(np.diff(wp[:, :2], axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    frac = arc / total if total > 0 else np.zeros_like(arc)
    wp[:, 2] = z_start + frac * (z_goal - z_start)
    return PlanPath(wp, kind="2D-lifted")


@dataclass
class MapPlanResult:
    path: PlanPath
    g_l: np.ndarray
    g_l_cell: tuple
    used_3d: bool
    path_2d: PlanPath
    path_3d: PlanPath | None = None
    stitched: StitchedPlan | None = None


def plan_final_path(p_n, global_goal, pcl_lm, map_1: GridMap2D,
                    params: LocalMapParams, dags_params: DagsParams,
                    use_dags: bool = True):
    """Full MP cycle from one map snapshot. Returns MapPlanResult or None."""
    p_n = np.asarray(p_n, dtype=float)
    global_goal = np.asarray(global_goal, dtype=float)
    map_1_infl = inflate(map_1, params.k)
    g_l, g_cell = cast_local_goal(p_n, global_goal, params, map_1_infl)
    map_c = inflate(cut_center(map_1, params.m), params.k)
    map_1b = downsample(map_1, params.h, params.s)
    st = stitched_plan(map_1b, map_c, g_cell, params)
    if st is None:
        return None
    # pin the path endpoints to the true drone/goal XY, not cell centers
    wp = st.path.waypoints.copy()
    wp[0, :2] = p_n[:2]
    wp[-1, :2] = g_l[:2]
    path_2d = PlanPath(wp, kind="2D-lifted")
    path_3d = None
    if use_dags and len(np.asarray(pcl_lm).reshape(-1, 3)):
        lifted = lift_path(path_2d, p_n[2], g_l[2])
        path_3d = dags_search(pcl_lm, p_n, g_l, lifted, dags_params)
    final = select_final_path(path_2d, path_3d, p_n[2], g_l[2])
    return MapPlanResult(path=final, g_l=g_l, g_l_cell=g_cell,
                         used_3d=final is path_3d, path_2d=path_2d,
                         path_3d=path_3d, stitched=st)
