"""Domain types shared across the package.

Every type is a frozen dataclass. Positions live in the local frame of the
scan volume, with anchor 0 at the origin.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence

RSSI_MIN = -100
RSSI_MAX = 0
CHANNEL_MIN = 1
CHANNEL_MAX = 14

_MAC_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")


class ValidationError(ValueError):
    """A sample field failed validation; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not math.isfinite(value):
                raise ValidationError(name, f"non-finite coordinate {name}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def in_volume(self, volume: "VolumeSpec", tol: float = 0.0) -> bool:
        return (-tol <= self.x <= volume.x_len + tol
                and -tol <= self.y <= volume.y_len + tol
                and -tol <= self.z <= volume.z_len + tol)


@dataclass(frozen=True)
class VolumeSpec:
    x_len: float = 3.74
    y_len: float = 3.20
    z_len: float = 2.10

    def __post_init__(self):
        for name in ("x_len", "y_len", "z_len"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive length, got {value!r}")

    @property
    def extents(self) -> tuple[float, float, float]:
        return (self.x_len, self.y_len, self.z_len)

    @property
    def center(self) -> Position:
        return Position(self.x_len / 2, self.y_len / 2, self.z_len / 2)


@dataclass(frozen=True)
class BeaconSample:
    timestamp: int  # ms since Unix epoch
    position: Position
    ssid: str
    mac: str
    rssi: int
    channel: int

    @property
    def x(self) -> float:
        return self.position.x

    @property
    def y(self) -> float:
        return self.position.y

    @property
    def z(self) -> float:
        return self.position.z

    def as_record(self) -> dict:
        return {"timestamp": self.timestamp, "x": self.x, "y": self.y, "z": self.z,
                "ssid": self.ssid, "rssi": self.rssi, "mac": self.mac,
                "channel": self.channel}


FIELDS = ("timestamp", "x", "y", "z", "ssid", "rssi", "mac", "channel")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[BeaconSample, ...]
    provenance: str = ""
    # (line number, message) for records skipped by a lenient parse
    rejected: tuple[tuple[int, str], ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[BeaconSample]:
        return iter(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def subset(self, indices: Sequence[int], provenance: str | None = None) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in indices),
                       self.provenance if provenance is None else provenance)

    @property
    def macs(self) -> list[str]:
        return [s.mac for s in self.samples]

    @property
    def rssi(self) -> list[int]:
        return [s.rssi for s in self.samples]


@dataclass(frozen=True)
class AnchorLayout:
    anchors: tuple[tuple[int, Position], ...]

    def __post_init__(self):
        object.__setattr__(self, "anchors", tuple(self.anchors))
        ids = sorted(i for i, _ in self.anchors)
        if ids != list(range(8)):
            raise ValueError(f"anchor ids must be exactly 0..7, got {ids}")

    def position(self, anchor_id: int) -> Position:
        for i, p in self.anchors:
            if i == anchor_id:
                return p
        raise KeyError(anchor_id)

    @property
    def ids(self) -> list[int]:
        return [i for i, _ in self.anchors]


_TABLE_ANCHORS = (
    (0, (0.00, 0.00, 0.00)),
    (1, (0.00, 2.30, 2.10)),
    (2, (3.74, 2.31, 0.00)),
    (3, (3.74, 0.00, 2.09)),
    (4, (0.00, 0.00, 2.10)),
    (5, (0.00, 2.33, 0.00)),
    (6, (3.74, 2.30, 2.09)),
    (7, (3.74, 0.00, 0.00)),
)


def default_anchor_layout() -> AnchorLayout:
    """The eight-corner LPS anchor placement used for the reference survey."""
    return AnchorLayout(tuple((i, Position(*xyz)) for i, xyz in _TABLE_ANCHORS))


def canonical_mac(raw: str) -> str:
    if not isinstance(raw, str):
        raise ValidationError("mac", "malformed mac")
    mac = raw.strip().lower().replace("-", ":")
    if not _MAC_RE.match(mac):
        raise ValidationError("mac", f"malformed mac {raw!r}")
    return mac


def _as_int(name, value):
    if isinstance(value, bool):
        raise ValidationError(name, f"{name} must be an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise ValidationError(name, f"{name} must be an integer, got {value!r}")


def _as_float(name, value):
    if isinstance(value, bool):
        raise ValidationError(name, f"{name} must be a number")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ValidationError(name, f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ValidationError(name, f"non-finite coordinate {name}")
    return out


def validate_sample(timestamp, x, y, z, ssid, rssi, mac, channel) -> BeaconSample:
    """Build a canonical :class:`BeaconSample` from raw field values.

    Raises :class:`ValidationError` naming the first offending field.
    Passing an already valid sample's fields back through returns an equal
    sample.
    """
    ts = _as_int("timestamp", timestamp)
    if ts < 0:
        raise ValidationError("timestamp", "timestamp must be >= 0")
    pos = Position(_as_float("x", x), _as_float("y", y), _as_float("z", z))
    if ssid is None:
        ssid = ""
    if not isinstance(ssid, str):
        raise ValidationError("ssid", "ssid must be text")
    rssi_i = _as_int("rssi", rssi)
    if not RSSI_MIN <= rssi_i <= RSSI_MAX:
        raise ValidationError("rssi", "rssi out of range")
    ch = _as_int("channel", channel)
    if not CHANNEL_MIN <= ch <= CHANNEL_MAX:
        raise ValidationError("channel", "channel out of range")
    return BeaconSample(ts, pos, ssid, canonical_mac(mac), rssi_i, ch)


def revalidate(sample: BeaconSample) -> BeaconSample:
    r = sample.as_record()
    return validate_sample(*(r[f] for f in FIELDS))
