import warnings

import numpy as np
import pytest

from dronerem.core import Position, VolumeSpec
from dronerem.mission import (EnduranceWarning, HoverSimConfig, MissionInfeasible, Route,
                              TimingModel, Waypoint, assign, estimate_time, generate_lattice,
                              plan_to_dict, routes_from_dict, serpentine, simulate_hover,
                              simulate_mission)
from dronerem.synthetic_rf import AccessPoint, RfEnvironment

ZERO = TimingModel(takeoff_seconds=0, land_seconds=0, handover_seconds=0)


def test_lattice_count_and_margin():
    v = VolumeSpec()
    wps = generate_lattice(v, 6, 4, 3, margin=0.2)
    assert len(wps) == 72
    xyz = np.array([w.position.as_tuple() for w in wps])
    assert xyz.min(axis=0) == pytest.approx([0.2] * 3)
    assert xyz.max(axis=0) == pytest.approx([3.54, 3.0, 1.9])


def test_margin_too_large():
    with pytest.raises(ValueError, match="interior"):
        generate_lattice(VolumeSpec(), 2, 2, 2, margin=1.1)


def test_single_waypoint_sits_at_center():
    (wp,) = generate_lattice(VolumeSpec(), 1, 1, 1)
    assert wp.position.as_tuple() == pytest.approx(VolumeSpec().center.as_tuple())


def test_serpentine_alternates_rows():
    wps = serpentine(generate_lattice(VolumeSpec(), 3, 2, 1))
    xs = [round(w.position.x, 3) for w in wps]
    assert xs[:3] == sorted(xs[:3]) and xs[3:] == sorted(xs[3:], reverse=True)


@pytest.mark.parametrize("n,sizes", [(1, [72]), (2, [36, 36]), (3, [24, 24, 24])])
def test_assignment_sizes(n, sizes):
    routes = assign(generate_lattice(), n)
    assert [len(r.waypoints) for r in routes] == sizes
    assert [r.drone_id for r in routes] == ["A", "B", "C"][:n]
    all_wps = [w for r in routes for w in r.waypoints]
    assert len({w.position for w in all_wps}) == 72


def test_assignment_uses_serpentine_hops():
    for route in assign(generate_lattice(), 2):
        pts = np.array([w.position.as_tuple() for w in route.waypoints])
        hops = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        assert hops.max() < 1.5


def test_budget_arithmetic():
    assert estimate_time(36, ZERO) == 252
    assert estimate_time(36, TimingModel(handover_seconds=0)) == 272


def test_endurance_warning():
    with pytest.warns(EnduranceWarning):
        assert estimate_time(60, TimingModel()) == 440
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        estimate_time(36, TimingModel())


def test_hover_at_rest_stays_put():
    for fb in (True, False):
        assert simulate_hover((0, 0, 0), feedback=fb).max_displacement == 0


def test_hover_without_feedback_coasts_first():
    res = simulate_hover((0.2, 0, 0), feedback=False)
    assert res.max_displacement >= 0.1
    on = simulate_hover((0.2, 0, 0), feedback=True)
    assert on.max_displacement < res.max_displacement


def test_hover_samples_at_ten_hertz():
    res = simulate_hover((0.1, 0, 0), duration=3.0)
    assert len(res.times) == 31
    assert res.times[1] == pytest.approx(0.1)


def _env(n=20):
    aps = [AccessPoint(f"02:00:00:00:00:{i:02x}", f"ap{i}", 6,
                       Position(1.0 + i * 0.01, 1.0, 1.0), -40.0, 2.0)
           for i in range(n)]
    return RfEnvironment(tuple(aps), shadow_sigma=0.0)


def test_mission_counts_with_always_detected_aps():
    routes = assign(generate_lattice(), 2)
    ds, log = simulate_mission(routes, TimingModel(), _env(20), seed=1)
    assert len(ds) == 72 * 20


def test_drones_fly_in_sequence():
    routes = assign(generate_lattice(), 2)
    ds, log = simulate_mission(routes, TimingModel(), _env(3), seed=2)
    a_times = [s.timestamp for s in ds][: 36 * 3]
    b_times = [s.timestamp for s in ds][36 * 3:]
    assert max(a_times) < min(b_times)
    a_events = log.events_for("A")
    b_events = log.events_for("B")
    assert a_events[-1]["kind"] == "land"
    assert a_events[-1]["t_ms"] < b_events[0]["t_ms"]


def test_event_log_is_ordered():
    routes = assign(generate_lattice(), 2)
    _, log = simulate_mission(routes, TimingModel(), _env(2), seed=0)
    keys = [(e["t_ms"], e["seq"]) for e in log.events]
    assert keys == sorted(keys)
    assert [e["kind"] for e in log.events_for("A")][:3] == ["takeoff", "goto", "scan-start"]


def test_mission_is_seeded():
    routes = assign(generate_lattice(), 2)
    a, _ = simulate_mission(routes, TimingModel(), _env(5), seed=4)
    b, _ = simulate_mission(routes, TimingModel(), _env(5), seed=4)
    assert a.samples == b.samples


def test_infeasible_route_needs_force():
    routes = assign(generate_lattice(), 1)
    with pytest.raises(MissionInfeasible):
        simulate_mission(routes, TimingModel(), _env(1))
    with pytest.warns(EnduranceWarning):
        ds, _ = simulate_mission(routes, TimingModel(), _env(1), force=True)
    assert len(ds) == 72


def test_plan_round_trip():
    routes = assign(generate_lattice(), 2)
    assert routes_from_dict(plan_to_dict(routes)) == routes


def test_hover_config_validation():
    with pytest.raises(ValueError):
        HoverSimConfig(setpoint_period=0.6, stale_timeout=0.5)
