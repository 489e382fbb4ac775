"""Waypoint lattices, drone assignment, flight-time budgets and simulation.

The mission clock runs in integer milliseconds so timelines replay exactly.
Drones fly one after another: the next one takes off only after the previous
one has landed and a handover gap has passed.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .core import BeaconSample, Dataset, Position, VolumeSpec
from .synthetic_rf import RfEnvironment, rssi_at

DEFAULT_EPOCH_MS = 1_625_097_600_000  # 2021-07-01T00:00:00Z
TRAJECTORY_HZ = 10


class EnduranceWarning(UserWarning):
    pass


class MissionInfeasible(ValueError):
    pass


@dataclass(frozen=True)
class Waypoint:
    position: Position
    scan_duration: float = 3.0


@dataclass(frozen=True)
class Route:
    drone_id: str
    start_position: Position
    yaw: float
    waypoints: tuple[Waypoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if not self.waypoints:
            raise ValueError("route must contain at least one waypoint")

    def __len__(self):
        return len(self.waypoints)

    def to_dict(self):
        return {"drone_id": self.drone_id, "yaw": self.yaw,
                "start": list(self.start_position.as_tuple()),
                "waypoints": [{"x": w.position.x, "y": w.position.y, "z": w.position.z,
                               "scan_duration": w.scan_duration} for w in self.waypoints]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["drone_id"], Position(*d["start"]), float(d["yaw"]),
                   tuple(Waypoint(Position(w["x"], w["y"], w["z"]),
                                  float(w.get("scan_duration", 3.0)))
                         for w in d["waypoints"]))


@dataclass(frozen=True)
class TimingModel:
    fly_seconds: float = 4.0
    scan_seconds: float = 3.0
    takeoff_seconds: float = 10.0
    land_seconds: float = 10.0
    handover_seconds: float = 5.0
    endurance_seconds: float = 372.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class HoverSimConfig:
    setpoint_period: float = 0.1
    stale_timeout: float = 0.5
    controller_gain: float = 2.0  # 1/s
    drift_velocity_sigma: float = 0.0  # m/s per sqrt(s)
    velocity_time_constant: float = 0.3  # attitude loop response, s
    dt: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.setpoint_period < self.stale_timeout:
            raise ValueError("setpoint_period must be shorter than stale_timeout")
        if self.dt <= 0 or self.velocity_time_constant <= 0:
            raise ValueError("dt and velocity_time_constant must be > 0")


# -- lattice and assignment -----------------------------------------------------------

def _axis_coords(length, n, margin):
    if n == 1:
        return [length / 2.0]
    return [float(v) for v in np.linspace(margin, length - margin, n)]


def generate_lattice(volume: VolumeSpec = VolumeSpec(), nx: int = 6, ny: int = 4,
                     nz: int = 3, margin: float = 0.3,
                     scan_duration: float = 3.0) -> list[Waypoint]:
    """Evenly spaced ``nx*ny*nz`` waypoints inside ``volume``, ``margin``
    meters clear of every face. Axes with a single point use the center."""
    if min(nx, ny, nz) < 1:
        raise ValueError("nx, ny, nz must be >= 1")
    if margin < 0 or any(length - 2 * margin <= 0 for length in volume.extents):
        raise ValueError(f"margin {margin} leaves no interior in {volume}")
    xs = _axis_coords(volume.x_len, nx, margin)
    ys = _axis_coords(volume.y_len, ny, margin)
    zs = _axis_coords(volume.z_len, nz, margin)
    return [Waypoint(Position(x, y, z), scan_duration)
            for x, y, z in itertools.product(xs, ys, zs)]


def _key(v):
    return round(v, 9)


def serpentine(waypoints) -> list[Waypoint]:
    """Order waypoints layer by layer (z up), sweeping rows along x and
    reversing direction on every row so consecutive hops stay short."""
    layers: dict[float, list[Waypoint]] = {}
    for w in waypoints:
        layers.setdefault(_key(w.position.z), []).append(w)
    out = []
    row_no = 0
    for li, z in enumerate(sorted(layers)):
        rows: dict[float, list[Waypoint]] = {}
        for w in layers[z]:
            rows.setdefault(_key(w.position.y), []).append(w)
        ys = sorted(rows, reverse=bool(li % 2))
        for y in ys:
            row = sorted(rows[y], key=lambda w: w.position.x, reverse=bool(row_no % 2))
            out.extend(row)
            row_no += 1
    return out


def _best_level_split(counts, n):
    """Cut ``counts`` (per level) into ``n`` contiguous non-empty groups with
    the smallest spread between the largest and smallest group."""
    L = len(counts)
    if L < n:
        return None
    prefix = np.concatenate([[0], np.cumsum(counts)])
    if math.comb(L - 1, n - 1) <= 200_000:
        candidates = itertools.combinations(range(1, L), n - 1)
    else:
        total = prefix[-1]
        cuts, j = [], 1
        for i in range(1, L):
            if len(cuts) < n - 1 and prefix[i] >= total * j / n:
                cuts.append(i)
                j += 1
        candidates = [tuple(cuts)] if len(cuts) == n - 1 else []
    best = None
    for cuts in candidates:
        bounds = (0,) + tuple(cuts) + (L,)
        sizes = [int(prefix[b] - prefix[a]) for a, b in zip(bounds, bounds[1:])]
        score = max(sizes) - min(sizes)
        if best is None or score < best[0]:
            best = (score, bounds)
    return best


def _drone_name(i):
    return chr(ord("A") + i) if i < 26 else f"D{i}"


def assign(waypoints, n_drones: int, yaw: float = 0.0) -> list[Route]:
    """Split waypoints into contiguous slabs, one per drone.

    The slab axis is the one whose level-respecting split balances counts
    best (x wins ties, then y). Each route is ordered by :func:`serpentine`
    and starts on the floor below its first waypoint.
    """
    if n_drones < 1:
        raise ValueError("n_drones must be >= 1")
    waypoints = list(waypoints)
    if not waypoints:
        raise ValueError("no waypoints to assign")
    best = None
    for axis in range(3):
        coord = [_key(w.position.as_tuple()[axis]) for w in waypoints]
        levels = sorted(set(coord))
        counts = [coord.count(lv) for lv in levels]
        found = _best_level_split(counts, n_drones)
        if found and (best is None or found[0] < best[0]):
            best = (found[0], axis, levels, found[1])
    groups: list[list[Waypoint]]
    if best is None:
        ordered = sorted(waypoints, key=lambda w: w.position.as_tuple())
        cuts = np.linspace(0, len(ordered), n_drones + 1).round().astype(int)
        groups = [ordered[a:b] for a, b in zip(cuts, cuts[1:])]
    else:
        _, axis, levels, bounds = best
        groups = []
        for a, b in zip(bounds, bounds[1:]):
            members = set(levels[a:b])
            groups.append([w for w in waypoints
                           if _key(w.position.as_tuple()[axis]) in members])
    routes = []
    for i, g in enumerate(groups):
        if not g:
            raise ValueError(f"more drones ({n_drones}) than waypoints ({len(waypoints)})")
        ordered = serpentine(g)
        first = ordered[0].position
        routes.append(Route(_drone_name(i), Position(first.x, first.y, 0.0), yaw,
                            tuple(ordered)))
    return routes


def estimate_time(route, timing: TimingModel = TimingModel()) -> float:
    """Takeoff + per-waypoint (fly + scan) + landing, in seconds.

    Warns with :class:`EnduranceWarning` above ``endurance_seconds``.
    """
    n = len(route.waypoints) if isinstance(route, Route) else int(route)
    if n < 1:
        raise ValueError("route must be non-empty")
    total = timing.takeoff_seconds + n * (timing.fly_seconds + timing.scan_seconds) \
        + timing.land_seconds
    if total > timing.endurance_seconds:
        warnings.warn(f"estimated {total:g} s exceeds endurance {timing.endurance_seconds:g} s",
                      EnduranceWarning, stacklevel=2)
    return total


# -- hover --------------------------------------------------------------------------------

@dataclass
class HoverResult:
    times: np.ndarray  # seconds, 10 Hz
    offsets: np.ndarray  # (n, 3) displacement from the scan position at those times
    max_displacement: float  # over every physics step
    steps: np.ndarray = field(repr=False, default=None)  # (nsteps + 1, 3)


def simulate_hover(initial_velocity, config: HoverSimConfig = HoverSimConfig(),
                   feedback: bool = True, duration: float = 3.0,
                   initial_offset=(0.0, 0.0, 0.0), rng=None) -> HoverResult:
    """Point-mass hover around a scan position.

    With feedback, a velocity command proportional to the position error is
    refreshed every ``setpoint_period`` and tracked with a first-order lag.
    Without it the drone coasts until ``stale_timeout`` and then only damps
    its velocity (attitude held level), with no pull back to the setpoint.
    """
    if duration <= 0:
        raise ValueError("duration must be > 0")
    dt = config.dt
    nsteps = int(round(duration / dt))
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if config.drift_velocity_sigma > 0:
        noise = rng.normal(0.0, config.drift_velocity_sigma * math.sqrt(dt), size=(nsteps, 3))
    else:
        noise = np.zeros((nsteps, 3))
    steps = kernels.hover_integrate(
        np.asarray(initial_offset, dtype=np.float64), np.asarray(initial_velocity, dtype=np.float64),
        noise, dt, feedback, max(1, int(round(config.setpoint_period / dt))),
        int(round(config.stale_timeout / dt)), config.controller_gain,
        config.velocity_time_constant)
    stride = max(1, int(round(1.0 / (TRAJECTORY_HZ * dt))))
    sampled = steps[::stride]
    return HoverResult(np.arange(len(sampled)) * stride * dt, sampled,
                       float(np.max(np.linalg.norm(steps, axis=1))), steps)


# -- mission ------------------------------------------------------------------------------

@dataclass
class MissionLog:
    start_epoch_ms: int
    # {"seq", "drone_id", "t_ms", "kind", "waypoint"}; a goto departs at the
    # same millisecond the previous scan ends, so order is (t_ms, seq)
    events: list[dict]
    trajectories: dict[str, list[list[float]]]  # drone -> [[t_ms, x, y, z], ...] at 10 Hz

    def to_dict(self):
        return {"start_epoch_ms": self.start_epoch_ms, "events": self.events,
                "trajectories": self.trajectories}

    def events_for(self, drone_id):
        return [e for e in self.events if e["drone_id"] == drone_id]


def _ms(seconds):
    return int(round(seconds * 1000))


def _linear_segment(traj, t0, dur_ms, a, b):
    period = 1000 // TRAJECTORY_HZ
    a = np.asarray(a.as_tuple())
    b = np.asarray(b.as_tuple())
    for t in range(0, dur_ms, period):
        p = a + (b - a) * (t / dur_ms)
        traj.append([t0 + t] + [round(float(c), 4) for c in p])


def simulate_mission(routes, timing: TimingModel, env: RfEnvironment,
                     hover: HoverSimConfig = HoverSimConfig(), seed: int = 0,
                     feedback: bool = True, force: bool = False,
                     start_epoch_ms: int = DEFAULT_EPOCH_MS,
                     arrival_velocity_sigma: float = 0.05) -> tuple[Dataset, MissionLog]:
    """Fly ``routes`` one drone after another and record beacon samples.

    At every waypoint the drone hovers for the scan window; each AP is read
    at most once, at the drone's true position at a random instant of the
    window, and only if the scan catches its beacon (``beacon_reliability``)
    and the reading clears the detection threshold. All readings of a scan are stamped when the scan ends, the
    moment the base station would receive them.
    """
    rng = np.random.default_rng(seed)
    for route in routes:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EnduranceWarning)
            need = estimate_time(route, timing)
        if need > timing.endurance_seconds:
            if not force:
                raise MissionInfeasible(
                    f"route {route.drone_id} needs {need:g} s > endurance "
                    f"{timing.endurance_seconds:g} s (use force to fly anyway)")
            warnings.warn(f"route {route.drone_id} exceeds endurance", EnduranceWarning,
                          stacklevel=2)
    samples: list[BeaconSample] = []
    events: list[dict] = []
    trajectories: dict[str, list[list[float]]] = {}
    t = 0
    for route in routes:
        traj: list[list[float]] = []
        trajectories[route.drone_id] = traj
        first = route.waypoints[0].position
        hover_point = Position(route.start_position.x, route.start_position.y, first.z)
        events.append({"drone_id": route.drone_id, "t_ms": t, "kind": "takeoff",
                       "waypoint": None})
        _linear_segment(traj, t, _ms(timing.takeoff_seconds), route.start_position, hover_point)
        t += _ms(timing.takeoff_seconds)
        here = hover_point
        for wi, wp in enumerate(route.waypoints):
            events.append({"drone_id": route.drone_id, "t_ms": t, "kind": "goto",
                           "waypoint": wi})
            _linear_segment(traj, t, _ms(timing.fly_seconds), here, wp.position)
            t += _ms(timing.fly_seconds)
            events.append({"drone_id": route.drone_id, "t_ms": t, "kind": "scan-start",
                           "waypoint": wi})
            v0 = rng.normal(0.0, arrival_velocity_sigma, size=3)
            res = simulate_hover(v0, hover, feedback, timing.scan_seconds, rng=rng)
            centre = np.asarray(wp.position.as_tuple())
            for ts, off in zip(res.times, res.offsets):
                traj.append([t + _ms(ts)] + [round(float(c), 4) for c in centre + off])
            scan_end = t + _ms(timing.scan_seconds)
            for ap in env.aps:
                caught = rng.random() < ap.beacon_reliability
                step = int(rng.integers(len(res.steps)))
                true_pos = Position(*(centre + res.steps[step]))
                reading = rssi_at(ap, true_pos, env.shadow_sigma, rng, env.detection_threshold)
                if reading is None or not caught:
                    continue
                reported = Position(*(round(c, 3) for c in true_pos.as_tuple()))
                samples.append(BeaconSample(start_epoch_ms + scan_end, reported, ap.ssid,
                                            ap.mac, reading, ap.channel))
            t = scan_end
            events.append({"drone_id": route.drone_id, "t_ms": t, "kind": "scan-end",
                           "waypoint": wi})
            here = wp.position
        ground = Position(here.x, here.y, 0.0)
        _linear_segment(traj, t, _ms(timing.land_seconds), here, ground)
        t += _ms(timing.land_seconds)
        # touchdown time, so it never coincides with the last scan-end
        events.append({"drone_id": route.drone_id, "t_ms": t, "kind": "land",
                       "waypoint": None})
        t += _ms(timing.handover_seconds)
    for seq, e in enumerate(events):
        e["seq"] = seq
    return Dataset(tuple(samples), f"simulation seed={seed}"), \
        MissionLog(start_epoch_ms, events, trajectories)


def plan_to_dict(routes) -> dict:
    return {"routes": [r.to_dict() for r in routes]}


def routes_from_dict(d) -> list[Route]:
    return [Route.from_dict(r) for r in d["routes"]]
