"""Synthetic access points and log-distance RSSI observations.

Stands in for a real capture site: APs scattered in a ball around the scan
volume, a log-distance path-loss law with lognormal shadowing, integer dBm
readings and a detection floor.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import CHANNEL_MAX, CHANNEL_MIN, RSSI_MAX, RSSI_MIN, Position, VolumeSpec

MIN_DISTANCE = 0.1

# most beacons sit on the three non-overlapping 2.4 GHz channels
CHANNEL_WEIGHTS = {1: 0.30, 6: 0.32, 11: 0.28, 13: 0.05, 3: 0.03, 9: 0.02}

SHARED_SSIDS = ("CityWiFree", "CityWiFree Partner", "Homespot", "FON_FREE_INTERNET",
                "eduroam")
ISP_PREFIXES = ("telnet", "proxi", "scarlet", "orangebox", "VOO")


@dataclass(frozen=True)
class AccessPoint:
    mac: str
    ssid: str
    channel: int
    position: Position
    tx_power_ref: float  # dBm at 1 m
    path_loss_exponent: float
    # chance a scan window catches one of this AP's beacons at all
    beacon_reliability: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beacon_reliability <= 1.0:
            raise ValueError("beacon_reliability must lie in [0, 1]")
        if not CHANNEL_MIN <= self.channel <= CHANNEL_MAX:
            raise ValueError("channel out of range")
        if not -60 <= self.tx_power_ref <= -20:
            raise ValueError("tx_power_ref must lie in [-60, -20] dBm")

    def to_dict(self):
        d = asdict(self)
        d["position"] = list(self.position.as_tuple())
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["mac"], d["ssid"], int(d["channel"]), Position(*d["position"]),
                   float(d["tx_power_ref"]), float(d["path_loss_exponent"]),
                   float(d.get("beacon_reliability", 1.0)))


@dataclass(frozen=True)
class RfEnvironment:
    aps: tuple[AccessPoint, ...]
    shadow_sigma: float = 2.0
    detection_threshold: float = -95.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "aps", tuple(self.aps))
        macs = [ap.mac for ap in self.aps]
        if len(set(macs)) != len(macs):
            raise ValueError("access point MACs must be unique")
        if self.shadow_sigma < 0:
            raise ValueError("shadow_sigma must be >= 0")

    def with_shadow_sigma(self, sigma: float) -> "RfEnvironment":
        return RfEnvironment(self.aps, sigma, self.detection_threshold, self.seed)

    def to_dict(self):
        return {"shadow_sigma": self.shadow_sigma,
                "detection_threshold": self.detection_threshold,
                "seed": self.seed, "aps": [ap.to_dict() for ap in self.aps]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(AccessPoint.from_dict(a) for a in d["aps"]),
                   float(d["shadow_sigma"]), float(d["detection_threshold"]),
                   int(d.get("seed", 0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"


def mean_rssi(ap: AccessPoint, position: Position) -> float:
    """Noise-free received power in dBm, before rounding and clamping."""
    d = math.dist(ap.position.as_tuple(), position.as_tuple())
    d = max(d, MIN_DISTANCE)
    return ap.tx_power_ref - 10.0 * ap.path_loss_exponent * math.log10(d)


def rssi_at(ap: AccessPoint, position: Position, shadow_sigma: float = 0.0,
            rng: np.random.Generator | None = None,
            detection_threshold: float = -95.0) -> int | None:
    """One integer-dBm reading of ``ap`` at ``position``, or ``None`` when the
    reading falls below ``detection_threshold``."""
    value = mean_rssi(ap, position)
    if shadow_sigma > 0:
        if rng is None:
            raise ValueError("shadowing needs a random generator")
        value += rng.normal(0.0, shadow_sigma)
    reading = int(np.clip(np.rint(value), RSSI_MIN, RSSI_MAX))
    if reading < detection_threshold:
        return None
    return reading


def _random_mac(rng, taken):
    while True:
        octets = rng.integers(0, 256, size=6)
        octets[0] &= 0xFE  # unicast
        mac = ":".join(f"{int(o):02x}" for o in octets)
        if mac not in taken:
            taken.add(mac)
            return mac


def generate_environment(seed: int, n_aps: int = 73, volume: VolumeSpec = VolumeSpec(),
                         placement_radius: float = 15.0, shadow_sigma: float = 2.0,
                         detection_threshold: float = -95.0,
                         shared_ssid_fraction: float = 0.45,
                         tx_power_range=(-50.0, -35.0),
                         exponent_range=(2.5, 4.0),
                         reliable_fraction: float = 0.15,
                         reliability_beta=(0.9, 1.2)) -> RfEnvironment:
    """Draw a reproducible AP population around ``volume``.

    Positions are uniform in a ball of ``placement_radius`` around the volume
    center. Channels follow :data:`CHANNEL_WEIGHTS`. A fraction of APs
    broadcast a community SSID shared with other devices, so distinct SSIDs
    stay below distinct MACs. ``reliable_fraction`` of the APs are caught by
    every scan; the rest get a Beta-distributed catch probability, which
    produces the long tail of rarely seen MACs.
    """
    if n_aps < 1:
        raise ValueError("n_aps must be >= 1")
    rng = np.random.default_rng(seed)
    center = np.array(volume.center.as_tuple())
    channels = np.array(list(CHANNEL_WEIGHTS))
    weights = np.array(list(CHANNEL_WEIGHTS.values()))
    weights = weights / weights.sum()
    taken: set[str] = set()
    aps = []
    for _ in range(n_aps):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        r = placement_radius * rng.random() ** (1.0 / 3.0)
        pos = center + r * direction
        mac = _random_mac(rng, taken)
        if rng.random() < shared_ssid_fraction:
            ssid = SHARED_SSIDS[int(rng.integers(len(SHARED_SSIDS)))]
        else:
            prefix = ISP_PREFIXES[int(rng.integers(len(ISP_PREFIXES)))]
            ssid = f"{prefix}-{mac[-5:].replace(':', '').upper()}"
        aps.append(AccessPoint(
            mac=mac, ssid=ssid,
            channel=int(rng.choice(channels, p=weights)),
            position=Position(*(round(float(c), 3) for c in pos)),
            tx_power_ref=round(float(rng.uniform(*tx_power_range)), 2),
            path_loss_exponent=round(float(rng.uniform(*exponent_range)), 3),
            beacon_reliability=(1.0 if rng.random() < reliable_fraction
                                else round(float(rng.beta(*reliability_beta)), 4)),
        ))
    return RfEnvironment(tuple(aps), shadow_sigma, detection_threshold, seed)
