import json
from collections import Counter

import numpy as np
import pytest

from dronerem.core import Position
from dronerem.synthetic_rf import (AccessPoint, RfEnvironment, generate_environment,
                                   mean_rssi, rssi_at)


def ap(tx=-40.0, n=2.0, at=(0.0, 0.0, 0.0), **kw):
    return AccessPoint("02:00:00:00:00:01", "net", 6, Position(*at), tx, n, **kw)


def test_reference_distance_gives_tx_power():
    assert rssi_at(ap(), Position(1, 0, 0)) == -40


def test_ten_meters_at_exponent_two():
    assert mean_rssi(ap(n=2.0), Position(10, 0, 0)) == pytest.approx(-60.0)


def test_below_threshold_is_not_detected():
    assert rssi_at(ap(n=3.0), Position(100, 0, 0)) is None


def test_distance_floor():
    assert mean_rssi(ap(), Position(0, 0, 0)) == mean_rssi(ap(), Position(0.1, 0, 0))


def test_readings_are_clamped_integers():
    reading = rssi_at(ap(tx=-20.0, n=4.0), Position(0.1, 0, 0))
    assert reading == 0
    rng = np.random.default_rng(0)
    values = [rssi_at(ap(), Position(3, 0, 0), 2.0, rng) for _ in range(100)]
    assert all(isinstance(v, int) for v in values)
    assert len(set(values)) > 1


def test_shadowing_needs_rng():
    with pytest.raises(ValueError):
        rssi_at(ap(), Position(1, 0, 0), shadow_sigma=2.0)


def test_ap_validation():
    with pytest.raises(ValueError):
        ap(beacon_reliability=1.5)
    with pytest.raises(ValueError):
        ap(tx=-10.0)


def test_environment_is_seeded():
    assert generate_environment(3) == generate_environment(3)
    assert generate_environment(3) != generate_environment(4)


def test_seventy_three_unique_macs_fewer_ssids():
    env = generate_environment(19)
    macs = {a.mac for a in env.aps}
    assert len(macs) == 73
    assert len({a.ssid for a in env.aps}) < 73


def test_common_channels_dominate():
    env = generate_environment(0, n_aps=2000)
    counts = Counter(a.channel for a in env.aps)
    assert (counts[1] + counts[6] + counts[11]) / 2000 >= 0.8


def test_environment_json_round_trip():
    env = generate_environment(5, n_aps=10)
    assert RfEnvironment.from_dict(json.loads(env.to_json())) == env
    assert env.with_shadow_sigma(0.5).shadow_sigma == 0.5


def test_duplicate_macs_rejected():
    with pytest.raises(ValueError):
        RfEnvironment((ap(), ap()))
