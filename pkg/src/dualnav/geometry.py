"""Shared vector geometry helpers used across the planners and the simulator."""
from __future__ import annotations

import numpy as np


def unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        return np.zeros_like(v)
    return v / n


def segment_point_distances(a, b, points):
    """Distance from each point to the segment a-b. points: (N,3) or (N,2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.zeros(0)
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def path_length(waypoints) -> float:
    wp = np.asarray(waypoints, dtype=float)
    if len(wp) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(wp, axis=0), axis=1)))


def min_clearance(waypoints, points) -> float:
    """Smallest distance from any segment of the polyline to any point."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return np.inf
    wp = np.asarray(waypoints, dtype=float)
    if len(wp) == 1:
        return float(np.min(np.linalg.norm(pts - wp[0], axis=1)))
    best = np.inf
    for i in range(len(wp) - 1):
        d = segment_point_distances(wp[i], wp[i + 1], pts)
        best = min(best, float(np.min(d)))
    return best


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    out = -((-a + np.pi) % (2.0 * np.pi) - np.pi)
    return out if out.ndim else float(out)


def spherical_angles(v):
    """(azimuth, elevation) of a 3-vector."""
    v = np.asarray(v, dtype=float)
    az = float(np.arctan2(v[1], v[0]))
    el = float(np.arctan2(v[2], np.hypot(v[0], v[1])))
    return az, el


def direction_from_angles(az: float, el: float) -> np.ndarray:
    return np.array(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
    )
