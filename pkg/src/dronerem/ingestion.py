"""Reading and writing sample files, plus the exploration statistics."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass

from .core import FIELDS, Dataset, ValidationError, validate_sample

FORMATS = ("csv", "jsonl")


class SampleParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _text(stream) -> str:
    if isinstance(stream, (bytes, bytearray)):
        return bytes(stream).decode("utf-8")
    if isinstance(stream, str):
        return stream
    data = stream.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _records(text, fmt):
    """Yield (line number, record dict or exception) in file order."""
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text, newline=""))
        try:
            header = next(reader)
        except StopIteration:
            raise SampleParseError(1, "missing csv header") from None
        if tuple(h.strip() for h in header) != FIELDS:
            raise SampleParseError(1, f"expected header {','.join(FIELDS)}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(FIELDS):
                yield line, SampleParseError(line, f"expected {len(FIELDS)} columns, got {len(row)}")
                continue
            yield line, dict(zip(FIELDS, row))
    elif fmt == "jsonl":
        for line, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                yield line, SampleParseError(line, f"invalid json: {exc.msg}")
                continue
            if not isinstance(obj, dict) or set(obj) != set(FIELDS):
                yield line, SampleParseError(line, f"expected keys {', '.join(FIELDS)}")
                continue
            yield line, obj
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def parse_samples(stream, fmt: str = "csv", strict: bool = True,
                  provenance: str = "") -> Dataset:
    """Parse a CSV or JSONL sample stream into a validated :class:`Dataset`.

    In strict mode the first bad record raises :class:`SampleParseError`
    carrying its line number. In lenient mode bad records are skipped and
    listed in ``Dataset.rejected``.
    """
    samples = []
    rejected = []
    for line, rec in _records(_text(stream), fmt):
        if isinstance(rec, Exception):
            err = rec
        else:
            try:
                samples.append(validate_sample(*(rec[f] for f in FIELDS)))
                continue
            except ValidationError as exc:
                err = SampleParseError(line, f"{exc.field}: {exc}")
        if strict:
            raise err
        rejected.append((line, str(err)))
    return Dataset(tuple(samples), provenance, tuple(rejected))


def read_samples(path, fmt: str | None = None, strict: bool = True) -> Dataset:
    path = str(path)
    if fmt is None:
        fmt = "jsonl" if path.endswith((".jsonl", ".ndjson")) else "csv"
    with open(path, "rb") as fh:
        return parse_samples(fh, fmt, strict=strict, provenance=path)


def serialize_samples(dataset: Dataset, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FIELDS)
        for s in dataset:
            writer.writerow([s.timestamp, repr(s.x), repr(s.y), repr(s.z), s.ssid,
                             s.rssi, s.mac, s.channel])
        return buf.getvalue()
    if fmt == "jsonl":
        return "".join(json.dumps(s.as_record()) + "\n" for s in dataset)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_samples(dataset: Dataset, path, fmt: str | None = None) -> None:
    path = str(path)
    if fmt is None:
        fmt = "jsonl" if path.endswith((".jsonl", ".ndjson")) else "csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_samples(dataset, fmt))


@dataclass(frozen=True)
class StatsReport:
    n_samples: int
    distinct_macs: int
    distinct_ssids: int
    distinct_channels: int
    mean_rssi: float
    median_rssi: float

    def to_dict(self) -> dict:
        return asdict(self)


def lower_median(values):
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def compute_stats(dataset: Dataset) -> StatsReport:
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    rssi = dataset.rssi
    return StatsReport(
        n_samples=len(dataset),
        distinct_macs=len({s.mac for s in dataset}),
        distinct_ssids=len({s.ssid for s in dataset}),
        distinct_channels=len({s.channel for s in dataset}),
        mean_rssi=math.fsum(rssi) / len(rssi),
        median_rssi=float(lower_median(rssi)),
    )


@dataclass(frozen=True)
class Histogram:
    key_kind: str  # "mac", "channel" or "axis-bin"
    bins: tuple[tuple[str, int], ...]
    bin_width: float | None = None
    axis: str | None = None

    @property
    def total(self) -> int:
        return sum(c for _, c in self.bins)

    def to_dict(self) -> dict:
        return {"key_kind": self.key_kind, "axis": self.axis, "bin_width": self.bin_width,
                "bins": [[label, count] for label, count in self.bins]}


def histogram(dataset: Dataset, key: str, bin_width: float = 0.5) -> Histogram:
    """Sample counts per MAC, per channel, or per coordinate bin.

    ``key`` is ``"mac"``, ``"channel"``, ``"x"``, ``"y"`` or ``"z"``. Axis bins
    are half-open ``[k*w, (k+1)*w)`` and run contiguously from 0 to the last
    occupied bin.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if key in ("mac", "channel"):
        counts = Counter(getattr(s, key) for s in dataset)
        # labels compared as their natural type so channel 11 sorts after 6
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return Histogram(key, tuple((str(k), c) for k, c in ordered))
    if key not in ("x", "y", "z"):
        raise ValueError(f"unknown histogram key {key!r}")
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    idx = []
    for s in dataset:
        v = getattr(s, key)
        if v < 0:
            raise ValueError(f"negative {key} coordinate {v}; axis bins start at 0")
        idx.append(int(math.floor(v / bin_width)))
    counts = Counter(idx)
    bins = []
    for k in range(max(idx) + 1):
        lo, hi = k * bin_width, (k + 1) * bin_width
        bins.append((f"[{lo:g},{hi:g})", counts.get(k, 0)))
    return Histogram("axis-bin", tuple(bins), bin_width, key)


def mac_location_counts(dataset: Dataset, decimals: int = 1) -> dict[str, int]:
    """Number of distinct scan positions each MAC was observed at.

    Positions are rounded to ``decimals`` places first so hover jitter around
    one waypoint collapses to a single location.
    """
    seen: dict[str, set] = {}
    for s in dataset:
        key = tuple(round(c, decimals) for c in s.position.as_tuple())
        seen.setdefault(s.mac, set()).add(key)
    return {mac: len(pos) for mac, pos in sorted(seen.items())}


def format_stats_table(report: StatsReport) -> str:
    rows = [("Samples", f"{report.n_samples}"),
            ("Distinct MAC addresses", f"{report.distinct_macs}"),
            ("Distinct SSIDs", f"{report.distinct_ssids}"),
            ("Distinct channels", f"{report.distinct_channels}"),
            ("Mean RSSI", f"{report.mean_rssi:.2f}"),
            ("Median RSSI", f"{report.median_rssi:g}")]
    width = max(len(r[0]) for r in rows)
    lines = [f"{'Characteristic':<{width}}  Value", "-" * (width + 8)]
    lines += [f"{name:<{width}}  {value}" for name, value in rows]
    return "\n".join(lines) + "\n"


def histogram_tsv(hist: Histogram) -> str:
    return "".join(f"{label}\t{count}\n" for label, count in hist.bins)
