"""Dense 3D RSSI lattices from trained models, and their file formats."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import VolumeSpec
from .preprocessing import CHANNEL_PREFIX, COORD_COLUMNS, MAC_PREFIX, FeatureMatrix, EncodingSpec

GRID_FORMAT = "dronerem.remgrid"


@dataclass(eq=False)
class RemGrid:
    volume: VolumeSpec
    resolution: float
    mac: str
    values: np.ndarray  # (nx, ny, nz) dBm
    provenance: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape

    def axis(self, i) -> np.ndarray:
        return np.arange(self.values.shape[i]) * self.resolution

    def points(self) -> np.ndarray:
        """Lattice coordinates in ix-major order, shape (nx*ny*nz, 3)."""
        gx, gy, gz = np.meshgrid(self.axis(0), self.axis(1), self.axis(2), indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


def lattice_shape(volume: VolumeSpec, resolution: float) -> tuple[int, int, int]:
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    # tolerate lengths that are an exact multiple up to float noise
    return tuple(int(math.floor(length / resolution + 1e-9)) + 1 for length in volume.extents)


def query_matrix(model, points, mac, channel=None) -> FeatureMatrix:
    """Feature rows laid out like ``model.columns`` for ``points`` heard from ``mac``."""
    n = len(points)
    X = np.zeros((n, len(model.columns)))
    mac_col = MAC_PREFIX + mac
    for j, col in enumerate(model.columns):
        if col in COORD_COLUMNS:
            X[:, j] = points[:, COORD_COLUMNS.index(col)]
        elif col == mac_col:
            X[:, j] = 1.0
        elif channel is not None and col == f"{CHANNEL_PREFIX}{channel}":
            X[:, j] = 1.0
    spec = EncodingSpec(use_coords=any(c in COORD_COLUMNS for c in model.columns),
                        use_mac_onehot=any(c.startswith(MAC_PREFIX) for c in model.columns),
                        use_channel_onehot=any(c.startswith(CHANNEL_PREFIX)
                                               for c in model.columns))
    return FeatureMatrix(tuple(model.columns), X, np.zeros(n), (mac,) * n,
                         (channel or 0,) * n, spec)


def predict_grid(model, volume: VolumeSpec, resolution: float, mac: str,
                 channel: int | None = None) -> RemGrid:
    """Evaluate ``model`` for ``mac`` at every point of the inclusive lattice
    ``{0, r, 2r, ...}`` per axis. No interpolation, no clamping."""
    shape = lattice_shape(volume, resolution)
    grid = RemGrid(volume, float(resolution), mac, np.zeros(shape))
    fm = query_matrix(model, grid.points(), mac, channel)
    values = model.predict(fm)
    grid.values = values.reshape(shape)
    grid.provenance = {"family": model.family, "trained_on": model.trained_on,
                       "fallback": bool(model.flag_unknown(fm).any())}
    return grid


def export_grid(grid: RemGrid, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "z", "mac", "rssi_pred"])
        for (x, y, z), v in zip(grid.points(), grid.values.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(z)), grid.mac, repr(float(v))])
        return buf.getvalue()
    if fmt == "json":
        v = grid.volume
        doc = {"format": GRID_FORMAT, "version": 1,
               "volume": [v.x_len, v.y_len, v.z_len], "resolution": grid.resolution,
               "mac": grid.mac, "shape": list(grid.values.shape), "order": "ix-major",
               "values": [float(x) for x in grid.values.ravel()],
               "provenance": grid.provenance}
        return json.dumps(doc) + "\n"
    raise ValueError(f"unknown grid format {fmt!r}")


def load_grid_json(text: str) -> RemGrid:
    doc = json.loads(text)
    if doc.get("format") != GRID_FORMAT:
        raise ValueError("not a dronerem grid document")
    values = np.array(doc["values"], dtype=np.float64).reshape(doc["shape"])
    return RemGrid(VolumeSpec(*doc["volume"]), float(doc["resolution"]), doc["mac"], values,
                   doc.get("provenance", {}))


def load_grid_csv(text: str, volume: VolumeSpec, resolution: float) -> RemGrid:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty grid csv")
    shape = lattice_shape(volume, resolution)
    values = np.array([float(r["rssi_pred"]) for r in rows]).reshape(shape)
    return RemGrid(volume, float(resolution), rows[0]["mac"], values)


def slice_tsv(grid: RemGrid, z: float) -> str:
    """2D heatmap at the lattice layer nearest ``z``: one row per y, one
    column per x, header row of x values."""
    iz = int(np.clip(round(z / grid.resolution), 0, grid.values.shape[2] - 1))
    xs = grid.axis(0)
    ys = grid.axis(1)
    lines = ["y\\x\t" + "\t".join(f"{x:g}" for x in xs)]
    for iy, y in enumerate(ys):
        lines.append(f"{y:g}\t" + "\t".join(f"{grid.values[ix, iy, iz]:.4f}"
                                           for ix in range(len(xs))))
    return "\n".join(lines) + "\n"
