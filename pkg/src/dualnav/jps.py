"""Jump point search on 8-connected binary grids.

Cost model: 1 per straight move, sqrt(2) per diagonal; a diagonal move only
requires the destination cell to be free. Straight scans are O(1) per jump via
per-call numpy tables of the next blocked cell and the next forced-neighbor
cell in each cardinal direction, so replanning stays cheap even on large maps.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

SQRT2 = math.sqrt(2.0)
_BIG = 1 << 30


class JpsGrid:
    """Precomputed jump tables for one binary occupancy grid (1 = blocked)."""

    def __init__(self, cells: np.ndarray):
        cells = np.asarray(cells)
        self.shape = cells.shape
        I, J = cells.shape
        F = np.zeros((I + 2, J + 2), dtype=bool)      # free, padded blocked
        F[1:-1, 1:-1] = cells == 0
        self.free = F[1:-1, 1:-1]
        self._F = F

        blk = ~F
        # forced-neighbor cells for each cardinal travel direction
        f_py = (blk[:-2, 1:-1] & F[:-2, 2:]) | (blk[2:, 1:-1] & F[2:, 2:])
        f_my = (blk[:-2, 1:-1] & F[:-2, :-2]) | (blk[2:, 1:-1] & F[2:, :-2])
        f_px = (blk[1:-1, :-2] & F[2:, :-2]) | (blk[1:-1, 2:] & F[2:, 2:])
        f_mx = (blk[1:-1, :-2] & F[:-2, :-2]) | (blk[1:-1, 2:] & F[:-2, 2:])

        blocked = ~self.free
        yy = np.broadcast_to(np.arange(J), (I, J))
        xx = np.broadcast_to(np.arange(I)[:, None], (I, J))

        def suffix_min(mask, coord, axis):
            idx = np.where(mask, coord, _BIG)
            return np.flip(np.minimum.accumulate(np.flip(idx, axis), axis), axis)

        def prefix_max(mask, coord, axis):
            idx = np.where(mask, coord, -_BIG)
            return np.maximum.accumulate(idx, axis)

        self.nb_py = suffix_min(blocked, yy, 1)
        self.nb_my = prefix_max(blocked, yy, 1)
        self.nb_px = suffix_min(blocked, xx, 0)
        self.nb_mx = prefix_max(blocked, xx, 0)
        self.nf_py = suffix_min(f_py, yy, 1)
        self.nf_my = prefix_max(f_my, yy, 1)
        self.nf_px = suffix_min(f_px, xx, 0)
        self.nf_mx = prefix_max(f_mx, xx, 0)

    def jump_cardinal(self, x, y, dx, dy, gx, gy):
        """First jump point strictly beyond (x, y) along a cardinal direction."""
        I, J = self.shape
        if dy != 0:
            y0 = y + dy
            if y0 < 0 or y0 >= J or not self.free[x, y0]:
                return None
            if dy > 0:
                limit = self.nb_py[x, y0]
                if x == gx and y0 <= gy < limit:
                    return gx, gy
                f = self.nf_py[x, y0]
                if f < limit:
                    return x, int(f)
            else:
                limit = self.nb_my[x, y0]
                if x == gx and limit < gy <= y0:
                    return gx, gy
                f = self.nf_my[x, y0]
                if f > limit:
                    return x, int(f)
            return None
        x0 = x + dx
        if x0 < 0 or x0 >= I or not self.free[x0, y]:
            return None
        if dx > 0:
            limit = self.nb_px[x0, y]
            if y == gy and x0 <= gx < limit:
                return gx, gy
            f = self.nf_px[x0, y]
            if f < limit:
                return int(f), y
        else:
            limit = self.nb_mx[x0, y]
            if y == gy and limit < gx <= x0:
                return gx, gy
            f = self.nf_mx[x0, y]
            if f > limit:
                return int(f), y
        return None

    def jump_diagonal(self, x, y, dx, dy, gx, gy):
        free = self.free
        F = self._F
        I, J = self.shape
        cx, cy = x, y
        while True:
            cx += dx
            cy += dy
            if cx < 0 or cx >= I or cy < 0 or cy >= J or not free[cx, cy]:
                return None
            if cx == gx and cy == gy:
                return cx, cy
            # forced neighbor at the diagonal node itself
            if (not F[cx - dx + 1, cy + 1] and F[cx - dx + 1, cy + dy + 1]) or \
               (not F[cx + 1, cy - dy + 1] and F[cx + dx + 1, cy - dy + 1]):
                return cx, cy
            if self.jump_cardinal(cx, cy, dx, 0, gx, gy) is not None:
                return cx, cy
            if self.jump_cardinal(cx, cy, 0, dy, gx, gy) is not None:
                return cx, cy

    def jump(self, x, y, dx, dy, gx, gy):
        if dx != 0 and dy != 0:
            return self.jump_diagonal(x, y, dx, dy, gx, gy)
        return self.jump_cardinal(x, y, dx, dy, gx, gy)


_ALL_DIRS = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]


def _successor_dirs(grid: JpsGrid, x, y, dx, dy):
    """Pruned expansion directions for a node entered moving (dx, dy)."""
    if dx == 0 and dy == 0:
        return _ALL_DIRS
    F = grid._F
    dirs = []
    if dx != 0 and dy != 0:
        dirs.append((dx, dy))
        dirs.append((dx, 0))
        dirs.append((0, dy))
        if not F[x - dx + 1, y + 1] and F[x - dx + 1, y + dy + 1]:
            dirs.append((-dx, dy))
        if not F[x + 1, y - dy + 1] and F[x + dx + 1, y - dy + 1]:
            dirs.append((dx, -dy))
    elif dx != 0:
        dirs.append((dx, 0))
        if not F[x + 1, y] and F[x + dx + 1, y]:
            dirs.append((dx, -1))
        if not F[x + 1, y + 2] and F[x + dx + 1, y + 2]:
            dirs.append((dx, 1))
    else:
        dirs.append((0, dy))
        if not F[x, y + 1] and F[x, y + dy + 1]:
            dirs.append((-1, dy))
        if not F[x + 2, y + 1] and F[x + 2, y + dy + 1]:
            dirs.append((1, dy))
    return dirs


def _octile(x, y, gx, gy):
    ax, ay = abs(x - gx), abs(y - gy)
    return max(ax, ay) + (SQRT2 - 1.0) * min(ax, ay)


def jps_search(cells: np.ndarray, start, goal, grid: JpsGrid | None = None):
    """Optimal 8-connected path as a jump-point sequence.

    Returns (waypoints, cost) with waypoints a list of (ix, iy) cells, or None
    when the goal is unreachable. Start and goal must be free cells. A
    prebuilt JpsGrid for the same cells can be passed to amortize the table
    construction over repeated queries on an unchanged map.
    """
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    if grid is None:
        grid = JpsGrid(cells)
    if not grid.free[start] or not grid.free[goal]:
        return None
    if start == goal:
        return [start], 0.0
    gx, gy = goal
    g_best = {start: 0.0}
    parent = {}
    counter = 0
    open_heap = [(_octile(*start, gx, gy), 0, start, (0, 0))]
    while open_heap:
        f, _, node, indir = heapq.heappop(open_heap)
        x, y = node
        g_here = g_best.get(node)
        if g_here is None or f - _octile(x, y, gx, gy) > g_here + 1e-9:
            continue
        if node == goal:
            path = [node]
            while node in parent:
                node = parent[node]
                path.append(node)
            path.reverse()
            return path, g_here
        for dx, dy in _successor_dirs(grid, x, y, *indir):
            jp = grid.jump(x, y, dx, dy, gx, gy)
            if jp is None:
                continue
            step = max(abs(jp[0] - x), abs(jp[1] - y))
            cost = g_here + (SQRT2 * step if dx != 0 and dy != 0 else float(step))
            if cost < g_best.get(jp, math.inf) - 1e-12:
                g_best[jp] = cost
                parent[jp] = (x, y)
                counter += 1
                heapq.heappush(
                    open_heap,
                    (cost + _octile(jp[0], jp[1], gx, gy), counter, jp,
                     (dx, dy)),
                )
    return None


def traversed_cells(a, b):
    """Supercover traversal: every cell whose closed unit square the segment
    between the centers of cells a and b touches."""
    x0, y0 = a[0] + 0.5, a[1] + 0.5
    x1, y1 = b[0] + 0.5, b[1] + 0.5
    cx, cy = int(a[0]), int(a[1])
    ex, ey = int(b[0]), int(b[1])
    cells = [(cx, cy)]
    dx, dy = x1 - x0, y1 - y0
    n = abs(ex - cx) + abs(ey - cy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    tdx = abs(1.0 / dx) if dx != 0 else math.inf
    tdy = abs(1.0 / dy) if dy != 0 else math.inf
    # distance to the first vertical/horizontal grid line
    tx = ((cx + (sx > 0)) - x0) / dx if dx != 0 else math.inf
    ty = ((cy + (sy > 0)) - y0) / dy if dy != 0 else math.inf
    for _ in range(n):
        if abs(tx - ty) < 1e-12:
            # exact corner crossing: include both side cells
            cells.append((cx + sx, cy))
            cells.append((cx, cy + sy))
            cx += sx
            cy += sy
            tx += tdx
            ty += tdy
            cells.append((cx, cy))
            if (cx, cy) == (ex, ey):
                break
        elif tx < ty:
            cx += sx
            tx += tdx
            cells.append((cx, cy))
        else:
            cy += sy
            ty += tdy
            cells.append((cx, cy))
        if (cx, cy) == (ex, ey):
            break
    return cells


def line_is_free(cells_grid: np.ndarray, a, b) -> bool:
    """True when the chord between cell centers a and b touches no occupied cell."""
    I, J = cells_grid.shape
    for x, y in traversed_cells(a, b):
        if 0 <= x < I and 0 <= y < J and cells_grid[x, y]:
            return False
    return True
