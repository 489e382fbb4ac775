import numpy as np
import pytest

from dronerem.core import BeaconSample, Dataset, Position


def make_sample(mac="aa:bb:cc:dd:ee:01", rssi=-70, x=0.5, y=0.5, z=0.5, ssid="net",
                channel=6, timestamp=1000):
    return BeaconSample(timestamp, Position(x, y, z), ssid, mac, rssi, channel)


def mac_n(i: int) -> str:
    return "02:00:00:00:{:02x}:{:02x}".format(i // 256, i % 256)


def random_dataset(n_macs=4, per_mac=20, seed=0, field=False) -> Dataset:
    """Samples on a coarse lattice; with ``field`` each MAC's RSSI follows a
    smooth spatial gradient so location carries information."""
    rng = np.random.default_rng(seed)
    out = []
    for m in range(n_macs):
        base = -60 - 5 * m
        for _ in range(per_mac):
            x, y, z = (np.round(rng.uniform(0, 2, size=3), 1))
            rssi = base - (6 * x if field else 0) + rng.integers(-3, 4)
            out.append(make_sample(mac_n(m), int(np.clip(round(rssi), -100, 0)),
                                   float(x), float(y), float(z), channel=(1, 6, 11)[m % 3]))
    return Dataset(tuple(out), f"random seed={seed}")


@pytest.fixture
def small_dataset():
    return random_dataset()


@pytest.fixture(scope="session")
def default_mission():
    from dronerem.scenario import default_scenario
    scenario = default_scenario()
    ds, log = scenario.simulate()
    return scenario, ds, log


@pytest.fixture
def numpy_backend(monkeypatch):
    """Route kernel dispatch through the pure-numpy implementations."""
    from dronerem import kernels
    monkeypatch.setattr(kernels, "BACKEND", "numpy")
    yield


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
