import math

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from dualnav.jps import (SQRT2, JpsGrid, jps_search, line_is_free,
                         traversed_cells)


def dijkstra_cost(cells, start, goal):
    """8-connected reference cost with the same corner-cutting rule."""
    n, m = cells.shape
    free = cells == 0
    nid = -np.ones((n, m), dtype=np.int64)
    nid[free] = np.arange(int(free.sum()))
    rows, cols, data = [], [], []
    for dx, dy in ((1, 0), (0, 1), (1, 1), (1, -1)):
        sa = (slice(max(dx, 0), n + min(dx, 0)),
              slice(max(dy, 0), m + min(dy, 0)))
        sb = (slice(max(-dx, 0), n + min(-dx, 0)),
              slice(max(-dy, 0), m + min(-dy, 0)))
        ok = free[sa] & free[sb]
        rows.append(nid[sa][ok])
        cols.append(nid[sb][ok])
        w = SQRT2 if dx and dy else 1.0
        data.append(np.full(int(ok.sum()), w))
    graph = csr_matrix((np.concatenate(data),
                        (np.concatenate(rows), np.concatenate(cols))),
                       shape=(int(free.sum()),) * 2)
    if not free[start] or not free[goal]:
        return None
    dist = dijkstra(graph, directed=False, indices=nid[start])
    d = dist[nid[goal]]
    return None if not np.isfinite(d) else float(d)


def random_grid(rng, size, density):
    cells = (rng.random((size, size)) < density).astype(np.uint8)
    return cells


def test_straight_line_cost():
    cells = np.zeros((10, 10), dtype=np.uint8)
    path, cost = jps_search(cells, (0, 0), (0, 9))
    assert cost == pytest.approx(9.0)
    path, cost = jps_search(cells, (0, 0), (9, 9))
    assert cost == pytest.approx(9 * SQRT2)


def test_unreachable_returns_none():
    cells = np.zeros((5, 5), dtype=np.uint8)
    cells[2, :] = 1
    assert jps_search(cells, (0, 0), (4, 4)) is None


def test_start_equals_goal():
    cells = np.zeros((3, 3), dtype=np.uint8)
    assert jps_search(cells, (1, 1), (1, 1)) == ([(1, 1)], 0.0)


def test_matches_dijkstra_small():
    rng = np.random.default_rng(11)
    for _ in range(25):
        cells = random_grid(rng, 20, 0.25)
        cells[0, 0] = 0
        cells[19, 19] = 0
        ref = dijkstra_cost(cells, (0, 0), (19, 19))
        res = jps_search(cells, (0, 0), (19, 19))
        if ref is None:
            assert res is None
        else:
            assert res is not None
            assert res[1] == pytest.approx(ref, abs=1e-9)


def test_prebuilt_grid_matches():
    rng = np.random.default_rng(5)
    cells = random_grid(rng, 30, 0.2)
    cells[0, 0] = cells[29, 29] = 0
    grid = JpsGrid(cells)
    a = jps_search(cells, (0, 0), (29, 29))
    b = jps_search(cells, (0, 0), (29, 29), grid)
    assert a == b


def test_traversed_cells_supercover():
    cells = traversed_cells((0, 0), (2, 1))
    assert (0, 0) in cells and (2, 1) in cells
    assert len(cells) >= 4
    # exact corner crossing includes both side cells
    corner = traversed_cells((0, 0), (2, 2))
    assert (1, 0) in corner and (0, 1) in corner


def test_line_is_free_blocked():
    cells = np.zeros((5, 5), dtype=np.uint8)
    cells[2, 2] = 1
    assert not line_is_free(cells, (0, 0), (4, 4))
    assert line_is_free(cells, (0, 4), (0, 0))


def test_path_cost_consistency():
    rng = np.random.default_rng(23)
    for _ in range(10):
        cells = random_grid(rng, 25, 0.2)
        cells[0, 0] = cells[24, 24] = 0
        res = jps_search(cells, (0, 0), (24, 24))
        if res is None:
            continue
        path, cost = res
        total = 0.0
        for a, b in zip(path, path[1:]):
            dx, dy = abs(b[0] - a[0]), abs(b[1] - a[1])
            assert dx == 0 or dy == 0 or dx == dy     # jump segments are octile
            total += SQRT2 * dx if dx == dy else float(dx + dy)
        assert total == pytest.approx(cost)
        for node in path:
            assert cells[node[0], node[1]] == 0
