"""Concurrent orchestration of the four planning loops plus the simulator.

Virtual-time mode runs everything single-threaded on a deterministic event
heap and is used for all correctness tests; wall-clock mode runs the same
loop bodies on real threads for timing measurements only.
"""
from __future__ import annotations

import heapq
import io
import json
import math
import threading
import time as time_mod
from dataclasses import dataclass, field

import numpy as np

from .geometry import min_clearance, path_length
from .map_planner import DagsParams, plan_final_path
from .mapping import LocalMapParams, VoxelMap, local_map, project_2d
from .pcl import FilterParams, Pose, filter_pipeline
from .pcp import (MotionCommand, PcpParams, compute_goal, das_search,
                  plan_motion, safety_backup, streamline)
from .sim import (DroneState, SensorParams, World, check_collision,
                  scan_world, sense, step_dynamics)


@dataclass
class LoopRates:
    filter_hz: float = 30.0
    mapping_hz: float = 10.0
    mp_hz: float = 12.0
    pcp_hz: float = 60.0
    sim_dt: float = 1.0 / 60.0

    def __post_init__(self):
        if min(self.filter_hz, self.mapping_hz, self.mp_hz, self.pcp_hz) <= 0:
            raise ValueError("all rates must be positive")
        if self.sim_dt <= 0:
            raise ValueError("sim_dt must be positive")
        if self.pcp_hz < self.mp_hz:
            raise ValueError("pcp rate must be >= mp rate")


class Blackboard:
    """Latest-value snapshot slots with per-slot version counters."""

    def __init__(self):
        self._slots = {}
        self._lock = threading.Lock()

    def publish(self, name: str, value):
        with self._lock:
            version = self._slots.get(name, (0, None))[0] + 1
            self._slots[name] = (version, value)

    def read(self, name: str):
        with self._lock:
            return self._slots.get(name, (0, None))[1]

    def read_versioned(self, name: str):
        with self._lock:
            return self._slots.get(name, (0, None))


@dataclass
class Scenario:
    world: World
    start: tuple
    goal: tuple
    seed: int = 0
    filter_params: FilterParams = field(default_factory=FilterParams)
    map_params: LocalMapParams = field(default_factory=LocalMapParams)
    dags_params: DagsParams = field(default_factory=DagsParams)
    pcp_params: PcpParams = field(default_factory=PcpParams)
    sensor: SensorParams = field(default_factory=SensorParams)
    rates: LoopRates = field(default_factory=LoopRates)
    use_dags: bool = True
    known_world: bool = False     # pre-seed the voxel map from world geometry
    freeze_map: bool = False      # skip in-flight map integration (known worlds)
    drone_radius: float = 0.15
    goal_tol: float = 0.3
    pcp_step_duration: float = 0.016   # virtual-mode PCP horizon t_avs
    timeout: float | None = None       # default 10 * distance / v_max

    def timeout_or_default(self) -> float:
        if self.timeout is not None:
            return self.timeout
        dist = float(np.linalg.norm(np.asarray(self.goal, dtype=float)
                                    - np.asarray(self.start, dtype=float)))
        return 10.0 * max(dist, 1.0) / self.pcp_params.v_max


@dataclass
class EpisodeResult:
    status: str                  # goal_reached | collision | timeout
    trajectory: list             # rows (t, x, y, z, vx, vy, vz, mode)
    events: list                 # (time, kind, payload) tuples
    metrics: dict
    timing: dict                 # wall-clock loop stats, excluded from metrics

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,x,y,z,vx,vy,vz,mode\n")
        for row in self.trajectory:
            t, x, y, z, vx, vy, vz, mode = row
            buf.write("%.6f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%s\n"
                      % (t, x, y, z, vx, vy, vz, mode))
        return buf.getvalue()

    def metrics_json(self) -> str:
        return json.dumps({"schema": 1, "status": self.status,
                           **self.metrics}, sort_keys=True)


def virtual_schedule(rates: LoopRates, duration: float):
    """Deterministic event sequence (time, loop) over a virtual duration.

    Loops fire at exact multiples of their periods; simultaneous events fire
    in the fixed order filter, mapping, mp, pcp, sim.
    """
    names = [("filter", 1.0 / rates.filter_hz),
             ("mapping", 1.0 / rates.mapping_hz),
             ("mp", 1.0 / rates.mp_hz),
             ("pcp", 1.0 / rates.pcp_hz),
             ("sim", rates.sim_dt)]
    # integer microsecond clock avoids float-accumulation drift
    heap = []
    for order, (name, period) in enumerate(names):
        heapq.heappush(heap, (0, order, name, int(round(period * 1e6))))
    end_us = int(round(duration * 1e6))
    while heap:
        t_us, order, name, period_us = heapq.heappop(heap)
        if t_us > end_us:
            continue
        yield t_us / 1e6, name
        heapq.heappush(heap, (t_us + period_us, order, name, period_us))


class _EpisodeCore:
    """Shared loop bodies for both execution modes."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.bb = Blackboard()
        self.world = scenario.world
        self.vmap = VoxelMap(scenario.map_params.voxel_size)
        if scenario.known_world:
            self.vmap.integrate(scan_world(self.world,
                                           scenario.map_params.voxel_size))
        self.state = DroneState(
            p=np.asarray(scenario.start, dtype=float).copy(),
            v=np.zeros(3), yaw=self._initial_yaw())
        self.goal = np.asarray(scenario.goal, dtype=float)
        self.events = []
        self.trajectory = []
        self.status = None
        self.wp_index = 1
        self.prev_p = self.state.p.copy()
        self.blocked_rays = set()
        self.pcp_steps = 0
        self.mp_replans = 0
        self.backup_count = 0
        self.timing = {name: [] for name in
                       ("filter", "mapping", "mp", "pcp")}
        self._lock = threading.Lock()

    def _initial_yaw(self):
        d = np.asarray(self.sc.goal, dtype=float) - np.asarray(
            self.sc.start, dtype=float)
        return math.atan2(d[1], d[0])

    def log(self, t, kind, payload=None):
        self.events.append((round(t, 6), kind, payload))

    # -- loop bodies --------------------------------------------------------

    def filter_step(self, t):
        st = self.bb.read("state") or self.state
        cloud_body = sense(self.world, st.p, st.yaw, self.sc.sensor, t,
                           self.sc.seed)
        pose = Pose(position=tuple(st.p), yaw=st.yaw)
        ground = self.world.ground_z
        if ground is not None:
            # keep the floor out of the map even with range noise on the hits
            ground = ground + 5.0 * self.sc.sensor.noise_coeff * self.sc.sensor.max_range
        pcl4 = filter_pipeline(cloud_body, pose, self.sc.filter_params,
                               ground_z=ground)
        self.bb.publish("pcl4", pcl4)

    def mapping_step(self, t):
        pcl4 = self.bb.read("pcl4")
        st = self.bb.read("state") or self.state
        if pcl4 is not None and len(pcl4) and not self.sc.freeze_map:
            self.vmap.integrate(pcl4)
        pcl_m = self.vmap.occupied_centers()
        pcl_lm = local_map(self.vmap, st.p, self.sc.map_params)
        map_1 = project_2d(pcl_lm, st.p, self.sc.map_params)
        self.bb.publish("map", (pcl_m, pcl_lm, map_1))

    def mp_step(self, t):
        snap = self.bb.read("map")
        if snap is None:
            return
        pcl_m, pcl_lm, map_1 = snap
        st = self.bb.read("state") or self.state
        current = self.bb.read("path")
        if current is not None:
            # replan only when the path actually intersects the map within the
            # drone's own footprint; the grid planner guarantees roughly half
            # a voxel of chord clearance, so gating on r_safe here would force
            # a replan on every cycle
            margin = self.sc.drone_radius + self.sc.map_params.voxel_size / 2.0
            remaining = current.waypoints[max(self.wp_index - 1, 0):]
            clear = min_clearance(remaining, pcl_m) if len(pcl_m) else np.inf
            if clear >= margin:
                return                      # suspended: path still valid
            reason = "collided"
        else:
            reason = "absent"
        result = plan_final_path(st.p, self.goal, pcl_lm, map_1,
                                 self.sc.map_params, self.sc.dags_params,
                                 use_dags=self.sc.use_dags)
        self.mp_replans += 1
        if result is None:
            self.bb.publish("path", None)
            self.log(t, "mp_replan", {"reason": reason, "ok": False})
            return
        with self._lock:
            self.wp_index = 1
            self.blocked_rays = set()
        self.bb.publish("path", result.path)
        self.bb.publish("g_l", result.g_l)
        self.log(t, "mp_replan", {"reason": reason, "ok": True,
                                  "kind": result.path.kind})

    def pcp_step(self, t, t_avs):
        sc = self.sc
        pp = sc.pcp_params
        st = self.bb.read("state") or self.state
        path = self.bb.read("path")
        self.pcp_steps += 1
        if path is None:
            self._publish_cmd(self._brake(st, t_avs), t)
            return
        wp = path.waypoints
        with self._lock:
            while self.wp_index < len(wp) - 1:
                cur = wp[self.wp_index]
                seg = cur - wp[self.wp_index - 1]
                # a waypoint counts as reached when the drone is close or has
                # crossed the plane through it, so an avoidance swing past a
                # corner never drags the drone back to the corner itself
                if (np.linalg.norm(st.p - cur) < 0.35
                        or float(np.dot(st.p - cur, seg)) > 0.0):
                    self.wp_index += 1
                    self.blocked_rays = set()
                else:
                    break
            idx = self.wp_index
        remaining = wp[idx:]
        end = wp[-1]
        if (np.linalg.norm(st.p - end) < sc.goal_tol
                and np.linalg.norm(end - self.goal) > sc.goal_tol):
            # local goal reached but not the global one: force a replan
            self.bb.publish("path", None)
            self._publish_cmd(self._brake(st, t_avs), t)
            return
        g_n = compute_goal(st.p, st.v, remaining, pp.kappa1, pp.kappa2)
        cloud = self._pcp_cloud(st.p, g_n)
        dist_goal = float(np.linalg.norm(end - st.p))
        wd = pp.waypoint_dist * min(1.0, max(dist_goal / pp.r_dec, 0.1))
        found = das_search(st.p, g_n, cloud, pp, waypoint_dist=wd,
                           excluded=self.blocked_rays)
        if found is None:
            cmd = safety_backup(st.p, st.v, self.prev_p, cloud, pp,
                                self.blocked_rays)
            self.backup_count += 1
            self.log(t, "backup_triggered", {"mode": cmd.mode})
            if cmd.mode == "backup_brake":
                self.blocked_rays.add(0)
        else:
            w_pn, ray_idx = found
            cmd = plan_motion(st.p, st.v, w_pn, t_avs, pp)
            self.log(t, "pcp_ray", {"ray": ray_idx})
        self.prev_p = st.p.copy()
        self._publish_cmd(cmd, t)

    def _pcp_cloud(self, p, g_n):
        sc = self.sc
        pp = sc.pcp_params
        parts = []
        pcl4 = self.bb.read("pcl4")
        if pcl4 is not None and len(pcl4):
            d = np.linalg.norm(pcl4 - p, axis=1)
            near = pcl4[d <= pp.r_det]
            if len(near):
                near = near[np.argsort(np.linalg.norm(near - p, axis=1),
                                       kind="stable")]
                d_ft = float(np.linalg.norm(near[-1] - p))
                near = streamline(near, p, g_n, pp.n_use, d_ft,
                                  seed=sc.seed + self.pcp_steps)
                parts.append(near)
        snap = self.bb.read("map")
        if snap is not None:
            pcl_m = snap[0]
            if len(pcl_m):
                d = np.linalg.norm(pcl_m - p, axis=1)
                parts.append(pcl_m[d <= pp.r_det])
        if not parts:
            return np.zeros((0, 3))
        cloud = np.vstack(parts)
        order = np.argsort(np.linalg.norm(cloud - p, axis=1), kind="stable")
        return cloud[order]

    def _brake(self, st, t_avs):
        nv = np.linalg.norm(st.v)
        pp = self.sc.pcp_params
        a = (-st.v / nv * min(pp.a_max, nv / t_avs)) if nv > 1e-9 else np.zeros(3)
        return MotionCommand(a_n=a, p_next=st.p + st.v * t_avs + 0.5 * a * t_avs ** 2,
                             v_next=st.v + a * t_avs, mode="hold")

    def _publish_cmd(self, cmd, t):
        self.bb.publish("cmd", cmd)

    def sim_step(self, t, dt):
        cmd = self.bb.read("cmd")
        a = cmd.a_n if cmd is not None else np.zeros(3)
        mode = cmd.mode if cmd is not None else "hold"
        self.state = step_dynamics(self.state, a, dt,
                                   self.sc.pcp_params.v_max)
        g_l = self.bb.read("g_l")
        head_to = g_l if g_l is not None else self.goal
        d = head_to - self.state.p
        if np.hypot(d[0], d[1]) > 0.2:
            self.state.yaw = math.atan2(d[1], d[0])
        self.state.time = t + dt
        self.bb.publish("state", self.state)
        self.trajectory.append((t + dt, *self.state.p, *self.state.v, mode))
        if check_collision(self.world, self.state.p, self.sc.drone_radius,
                           t + dt):
            self.status = "collision"
            self.log(t + dt, "collision", None)
        elif np.linalg.norm(self.state.p - self.goal) < self.sc.goal_tol:
            self.status = "goal_reached"
            self.log(t + dt, "goal_reached", None)

    # -- result assembly ----------------------------------------------------

    def result(self) -> EpisodeResult:
        traj = np.array([row[:7] for row in self.trajectory], dtype=float)
        length = path_length(traj[:, 1:4]) if len(traj) > 1 else 0.0
        metrics = {
            "trajectory_length": round(float(length), 9),
            "duration": round(float(traj[-1, 0]), 6) if len(traj) else 0.0,
            "mp_replans": self.mp_replans,
            "pcp_steps": self.pcp_steps,
            "backup_activations": self.backup_count,
            "collisions": 1 if self.status == "collision" else 0,
        }
        timing = {name: {
            "count": len(vals),
            "mean_ms": (1e3 * float(np.mean(vals))) if vals else 0.0,
            "max_ms": (1e3 * float(np.max(vals))) if vals else 0.0,
        } for name, vals in self.timing.items()}
        return EpisodeResult(status=self.status or "timeout",
                             trajectory=self.trajectory, events=self.events,
                             metrics=metrics, timing=timing)


def run_episode(scenario: Scenario, mode: str = "virtual_time") -> EpisodeResult:
    if mode == "virtual_time":
        return _run_virtual(scenario)
    if mode == "wall_clock":
        return _run_wall_clock(scenario)
    raise ValueError("mode must be virtual_time or wall_clock")


def _run_virtual(scenario: Scenario) -> EpisodeResult:
    core = _EpisodeCore(scenario)
    core.bb.publish("state", core.state)
    timeout = scenario.timeout_or_default()
    t_avs = scenario.pcp_step_duration
    for t, name in virtual_schedule(scenario.rates, timeout):
        tic = time_mod.perf_counter()
        if name == "filter":
            core.filter_step(t)
        elif name == "mapping":
            core.mapping_step(t)
        elif name == "mp":
            core.mp_step(t)
        elif name == "pcp":
            core.pcp_step(t, t_avs)
        else:
            core.sim_step(t, scenario.rates.sim_dt)
        if name != "sim":
            core.timing[name].append(time_mod.perf_counter() - tic)
        if core.status is not None:
            break
    return core.result()


def _run_wall_clock(scenario: Scenario) -> EpisodeResult:
    core = _EpisodeCore(scenario)
    core.bb.publish("state", core.state)
    timeout = scenario.timeout_or_default()
    stop = threading.Event()
    start_wall = time_mod.perf_counter()
    t_hist = []

    def now():
        return time_mod.perf_counter() - start_wall

    def loop(name, period, body):
        next_t = 0.0
        while not stop.is_set():
            t = now()
            if t >= timeout:
                break
            if t < next_t:
                time_mod.sleep(min(next_t - t, 0.002))
                continue
            tic = time_mod.perf_counter()
            body(t)
            dur = time_mod.perf_counter() - tic
            core.timing[name].append(dur)
            if name == "pcp":
                t_hist.append(dur)
            next_t += period
            if next_t < t:
                next_t = t + period

    from .pcp import update_t_avs

    def pcp_body(t):
        core.pcp_step(t, update_t_avs(t_hist))

    def sim_body(t):
        core.sim_step(t, scenario.rates.sim_dt)
        if core.status is not None:
            stop.set()

    rates = scenario.rates
    threads = [
        threading.Thread(target=loop, args=("filter", 1.0 / rates.filter_hz,
                                            core.filter_step)),
        threading.Thread(target=loop, args=("mapping", 1.0 / rates.mapping_hz,
                                            core.mapping_step)),
        threading.Thread(target=loop, args=("mp", 1.0 / rates.mp_hz,
                                            core.mp_step)),
        threading.Thread(target=loop, args=("pcp", 1.0 / rates.pcp_hz,
                                            pcp_body)),
    ]
    for th in threads:
        th.start()
    sim_loop = threading.Thread(
        target=lambda: _sim_driver(core, rates.sim_dt, now, timeout, stop,
                                   sim_body))
    sim_loop.start()
    sim_loop.join()
    stop.set()
    for th in threads:
        th.join()
    return core.result()


def _sim_driver(core, dt, now, timeout, stop, sim_body):
    next_t = 0.0
    while not stop.is_set():
        t = now()
        if t >= timeout:
            break
        if t < next_t:
            time_mod.sleep(min(next_t - t, 0.002))
            continue
        sim_body(t)
        next_t += dt
