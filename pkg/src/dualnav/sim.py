"""Deterministic flight test environment.

Axis-aligned box worlds with optional scripted moving obstacles, a ray-cast
depth sensor returning body-frame clouds, and double-integrator drone
dynamics. Everything is a pure function of (world, state, time, seed) so runs
replay bit for bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if not np.all(hi > lo):
            raise ValueError("box must have positive extent on every axis")

    def arrays(self):
        return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)


@dataclass
class DynamicObstacle:
    """A box following a piecewise-linear center schedule.

    Before the first schedule time the obstacle is absent; after the last it
    stays at the final position.
    """
    size: tuple                  # (dx, dy, dz) extents
    times: list                  # ascending schedule times
    positions: list              # center position per schedule time

    def __post_init__(self):
        if len(self.times) != len(self.positions) or not self.times:
            raise ValueError("schedule needs matching, nonempty times/positions")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("schedule times must be non-decreasing")

    def center_at(self, t: float):
        if t < self.times[0]:
            return None
        pos = np.asarray(self.positions, dtype=float)
        if t >= self.times[-1]:
            return pos[-1]
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        t0, t1 = self.times[k], self.times[k + 1]
        f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        return pos[k] + f * (pos[k + 1] - pos[k])

    def box_at(self, t: float):
        c = self.center_at(t)
        if c is None:
            return None
        half = np.asarray(self.size, dtype=float) / 2.0
        return Box(tuple(c - half), tuple(c + half))


@dataclass
class World:
    static: list = field(default_factory=list)       # list of Box
    dynamic: list = field(default_factory=list)      # list of DynamicObstacle
    bounds: Box = Box((-50.0, -50.0, -1.0), (50.0, 50.0, 10.0))
    ground_z: float | None = None                    # sensed floor plane

    def boxes_at(self, t: float):
        boxes = list(self.static)
        for d in self.dynamic:
            b = d.box_at(t)
            if b is not None:
                boxes.append(b)
        return boxes

    def to_json(self) -> str:
        return json.dumps({
            "bounds": [list(self.bounds.lo), list(self.bounds.hi)],
            "ground_z": self.ground_z,
            "static": [[list(b.lo), list(b.hi)] for b in self.static],
            "dynamic": [{
                "size": list(d.size),
                "times": list(d.times),
                "positions": [list(p) for p in d.positions],
            } for d in self.dynamic],
        })

    @classmethod
    def from_json(cls, text: str) -> "World":
        data = json.loads(text)
        return cls(
            static=[Box(tuple(lo), tuple(hi)) for lo, hi in data["static"]],
            dynamic=[DynamicObstacle(tuple(d["size"]), list(d["times"]),
                                     [tuple(p) for p in d["positions"]])
                     for d in data["dynamic"]],
            bounds=Box(tuple(data["bounds"][0]), tuple(data["bounds"][1])),
            ground_z=data.get("ground_z"),
        )


@dataclass(frozen=True)
class SensorParams:
    h_fov: float = math.radians(86.0)
    v_fov: float = math.radians(57.0)
    max_range: float = 5.0
    h_rays: int = 64
    v_rays: int = 36
    noise_coeff: float = 0.005    # radial noise std per meter of range
    rate_hz: float = 30.0

    def __post_init__(self):
        if not (0.0 < self.h_fov < math.pi and 0.0 < self.v_fov < math.pi):
            raise ValueError("FOVs must lie in (0, pi)")
        if self.max_range <= 0:
            raise ValueError("max_range must be > 0")


@dataclass
class DroneState:
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    time: float = 0.0


def _ray_directions(sensor: SensorParams, yaw: float) -> np.ndarray:
    az = np.linspace(-sensor.h_fov / 2.0, sensor.h_fov / 2.0, sensor.h_rays)
    el = np.linspace(-sensor.v_fov / 2.0, sensor.v_fov / 2.0, sensor.v_rays)
    azg, elg = np.meshgrid(az + yaw, el, indexing="ij")
    dirs = np.stack([
        np.cos(elg) * np.cos(azg),
        np.cos(elg) * np.sin(azg),
        np.sin(elg),
    ], axis=-1)
    return dirs.reshape(-1, 3)


def _ray_box_hits(origin, dirs, box: Box):
    """Entry distance of each ray into the box (inf when missed)."""
    lo, hi = box.arrays()
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t0 = (lo - origin) * inv
        t1 = (hi - origin) * inv
    tmin = np.nanmax(np.minimum(t0, t1), axis=1)
    tmax = np.nanmin(np.maximum(t0, t1), axis=1)
    t_ent = np.where((tmax >= tmin) & (tmax >= 0.0), np.maximum(tmin, 0.0), np.inf)
    return t_ent


def sense(world: World, position, yaw: float, sensor: SensorParams,
          time: float, seed: int) -> np.ndarray:
    """Body-frame first-hit point cloud from a FOV ray grid.

    The body frame here is yaw-aligned only (the simulated camera is kept
    level). Noise is zero-mean Gaussian along each ray with std proportional
    to the hit distance; the generator is keyed on (seed, time) so identical
    queries return identical clouds.
    """
    origin = np.asarray(position, dtype=float)
    dirs = _ray_directions(sensor, yaw)
    t_hit = np.full(len(dirs), np.inf)
    for box in world.boxes_at(time):
        t_hit = np.minimum(t_hit, _ray_box_hits(origin, dirs, box))
    if world.ground_z is not None:
        dz = dirs[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_pl = (world.ground_z - origin[2]) / dz
        t_pl = np.where((dz != 0.0) & (t_pl >= 0.0), t_pl, np.inf)
        t_hit = np.minimum(t_hit, t_pl)
    hit = t_hit <= sensor.max_range
    if not np.any(hit):
        return np.zeros((0, 3))
    t = t_hit[hit]
    if sensor.noise_coeff > 0.0:
        rng = np.random.default_rng(
            np.random.SeedSequence([int(seed), int(round(time * 1e6))]))
        t = t + rng.normal(0.0, sensor.noise_coeff * t)
    pts_e = origin + t[:, None] * dirs[hit]
    # back to the yaw-aligned body frame
    rel = pts_e - origin
    c, s = math.cos(yaw), math.sin(yaw)
    body = np.stack([c * rel[:, 0] + s * rel[:, 1],
                     -s * rel[:, 0] + c * rel[:, 1],
                     rel[:, 2]], axis=1)
    return body


def step_dynamics(state: DroneState, a_n, dt: float, v_max: float) -> DroneState:
    """Exact double-integrator step with the command held over dt."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    a = np.asarray(a_n, dtype=float)
    p = state.p + state.v * dt + 0.5 * a * dt * dt
    v = state.v + a * dt
    nv = np.linalg.norm(v)
    if nv > v_max:
        v = v * (v_max / nv)
    return DroneState(p=p, v=v, a=a, yaw=state.yaw, time=state.time + dt)


def check_collision(world: World, position, radius: float, time: float) -> bool:
    """Sphere-vs-world intersection test against the time-indexed boxes."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    p = np.asarray(position, dtype=float)
    for box in world.boxes_at(time):
        lo, hi = box.arrays()
        nearest = np.clip(p, lo, hi)
        if np.linalg.norm(p - nearest) <= radius:
            return True
    return False


def step_obstacles(world: World, time: float):
    """Snapshot of all boxes present at the given time."""
    return world.boxes_at(time)


def scan_world(world: World, voxel_size: float = 0.2) -> np.ndarray:
    """Surface-voxel centers of the static boxes (known-world map seeding).

    Emits the center of every voxel on the shell of each box's covered voxel
    volume, matching what a noise-free depth sensor would accumulate.
    """
    eps = 1e-9
    pts = []
    for box in world.static:
        lo, hi = box.arrays()
        i0 = np.floor(lo / voxel_size + eps).astype(int)
        i1 = np.floor((hi - eps) / voxel_size).astype(int)
        xs = np.arange(i0[0], i1[0] + 1)
        ys = np.arange(i0[1], i1[1] + 1)
        zs = np.arange(i0[2], i1[2] + 1)
        gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
        shell = ((gx == i0[0]) | (gx == i1[0]) | (gy == i0[1]) | (gy == i1[1])
                 | (gz == i0[2]) | (gz == i1[2]))
        idx = np.stack([gx[shell], gy[shell], gz[shell]], axis=1)
        pts.append((idx + 0.5) * voxel_size)
    if not pts:
        return np.zeros((0, 3))
    return np.vstack(pts)
