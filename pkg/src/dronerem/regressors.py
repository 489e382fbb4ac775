"""RSSI estimators sharing one fit/predict contract.

Families: ``global_mean``, ``per_mac_mean``, ``knn``, ``per_mac_knn`` and
``mlp``. Every trained model exposes ``predict(fm)`` and
``flag_unknown(fm)`` and round-trips through :func:`model_to_dict`.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels, mlp
from .core import VolumeSpec
from .preprocessing import COORD_COLUMNS, FeatureMatrix

FAMILIES = ("global_mean", "per_mac_mean", "knn", "per_mac_knn", "mlp")
WEIGHTINGS = ("uniform", "inverse_distance")
MODEL_FORMAT = "dronerem.model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class KnnParams:
    k: int = 5
    weighting: str = "inverse_distance"
    mac_scale: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if not self.mac_scale >= 1:
            raise ValueError("mac_scale must be >= 1")


@dataclass(frozen=True)
class MlpParams:
    hidden_units: int = 16
    hidden_activation: str = "sigmoid"
    output_activation: str = "linear"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    volume: VolumeSpec = field(default_factory=VolumeSpec)

    def __post_init__(self):
        if (self.hidden_activation, self.output_activation) != ("sigmoid", "linear"):
            raise ValueError("only sigmoid hidden / linear output is supported")
        if self.hidden_units < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("hidden_units, epochs and batch_size must be >= 1")


@dataclass(frozen=True)
class RegressorSpec:
    family: str
    knn: KnnParams | None = None
    mlp: MlpParams | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        wants_knn = self.family in ("knn", "per_mac_knn")
        if wants_knn and self.knn is None:
            object.__setattr__(self, "knn", KnnParams())
        if self.family == "mlp" and self.mlp is None:
            object.__setattr__(self, "mlp", MlpParams())
        if not wants_knn and self.knn is not None:
            raise ValueError(f"knn parameters given for family {self.family}")
        if self.family != "mlp" and self.mlp is not None:
            raise ValueError(f"mlp parameters given for family {self.family}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RegressorSpec":
        knn = KnnParams(**d["knn"]) if d.get("knn") else None
        mlp_d = d.get("mlp")
        mlp_p = None
        if mlp_d:
            mlp_d = dict(mlp_d)
            mlp_d["volume"] = VolumeSpec(**mlp_d.get("volume", {}))
            mlp_p = MlpParams(**mlp_d)
        return cls(d["family"], knn, mlp_p)


# -- distance primitives -------------------------------------------------------------

def knn_distance(a, b, mac_scale: float = 1.0, mac_mask=None) -> float:
    """Euclidean distance with the MAC one-hot columns stretched by ``mac_scale``.

    Rows are given at unit one-hot scale. Without ``mac_mask`` the first three
    columns are taken as coordinates and the rest as MAC one-hots.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("rows must share a column layout")
    if mac_mask is None:
        mac_mask = np.arange(a.shape[0]) >= 3
    w = np.where(mac_mask, float(mac_scale), 1.0)
    diff = (a - b) * w
    return math.sqrt(float(np.sum(diff * diff)))


def knn_predict(train_X, train_y, query, k: int, weighting: str = "uniform") -> float:
    """Estimate one query row from its ``k`` nearest training rows.

    Ties at equal distance go to the lower training index. Inverse-distance
    weighting returns the mean of the exact matches when any neighbor sits at
    distance zero.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}")
    train_X = np.atleast_2d(np.asarray(train_X, dtype=np.float64))
    if train_X.shape[0] == 0:
        raise ValueError("empty training set")
    query = np.asarray(query, dtype=np.float64).reshape(1, -1)
    D2 = kernels.pairwise_sq_dist(query, train_X)
    idx = kernels.nearest(D2, k)
    return float(kernels.reduce_neighbors(D2, idx, train_y, k,
                                          weighting == "inverse_distance")[0])


def knn_batch(train_X, train_y, query_X, k, weighting):
    D2 = kernels.pairwise_sq_dist(query_X, train_X)
    idx = kernels.nearest(D2, k)
    return kernels.reduce_neighbors(D2, idx, train_y, k, weighting == "inverse_distance")


# -- models -------------------------------------------------------------------------------

class _Model:
    family = ""

    def __init__(self, spec: RegressorSpec, columns, trained_on=""):
        self.spec = spec
        self.columns = tuple(columns)
        self.trained_on = trained_on

    def _check_columns(self, fm: FeatureMatrix):
        if tuple(fm.columns) != self.columns:
            raise ValueError("query columns do not match the training columns")

    def flag_unknown(self, fm: FeatureMatrix) -> np.ndarray:
        return np.zeros(len(fm), dtype=bool)

    def predict(self, fm: FeatureMatrix) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> dict:
        raise NotImplementedError


class GlobalMean(_Model):
    family = "global_mean"

    def __init__(self, spec, columns, mean, trained_on=""):
        super().__init__(spec, columns, trained_on)
        self.mean = float(mean)

    @classmethod
    def fit(cls, spec, fm):
        return cls(spec, fm.columns, math.fsum(fm.y) / len(fm), fm_provenance(fm))

    def predict(self, fm):
        return np.full(len(fm), self.mean)

    def state(self):
        return {"mean": self.mean}

    @classmethod
    def from_state(cls, spec, columns, state, trained_on):
        return cls(spec, columns, state["mean"], trained_on)


class PerMacMean(_Model):
    family = "per_mac_mean"

    def __init__(self, spec, columns, means, fallback, trained_on=""):
        super().__init__(spec, columns, trained_on)
        self.means = dict(means)
        self.fallback = float(fallback)

    @classmethod
    def fit(cls, spec, fm):
        groups: dict[str, list[float]] = {}
        for mac, t in zip(fm.macs, fm.y):
            groups.setdefault(mac, []).append(float(t))
        if not groups:
            raise ValueError("per-MAC family needs at least one MAC")
        means = {m: math.fsum(v) / len(v) for m, v in sorted(groups.items())}
        return cls(spec, fm.columns, means, math.fsum(fm.y) / len(fm), fm_provenance(fm))

    def flag_unknown(self, fm):
        return np.array([m not in self.means for m in fm.macs], dtype=bool)

    def predict(self, fm):
        return np.array([self.means.get(m, self.fallback) for m in fm.macs])

    def state(self):
        return {"means": self.means, "fallback": self.fallback}

    @classmethod
    def from_state(cls, spec, columns, state, trained_on):
        return cls(spec, columns, state["means"], state["fallback"], trained_on)


def _scale_weights(columns, mac_scale, source_scale):
    mask = np.array([c.startswith("mac=") for c in columns], dtype=bool)
    return np.where(mask, mac_scale / source_scale, 1.0)


class KnnRegressor(_Model):
    """kNN over coordinates plus MAC one-hots held at ``mac_scale``."""
    family = "knn"

    def __init__(self, spec, columns, X, y, trained_on=""):
        super().__init__(spec, columns, trained_on)
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)

    @classmethod
    def fit(cls, spec, fm):
        if len(fm) == 0:
            raise ValueError("empty training set")
        w = _scale_weights(fm.columns, spec.knn.mac_scale, fm.spec.mac_scale)
        return cls(spec, fm.columns, fm.X * w, fm.y, fm_provenance(fm))

    def predict(self, fm):
        self._check_columns(fm)
        w = _scale_weights(fm.columns, self.spec.knn.mac_scale, fm.spec.mac_scale)
        return knn_batch(self.X, self.y, fm.X * w, self.spec.knn.k, self.spec.knn.weighting)

    def state(self):
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_state(cls, spec, columns, state, trained_on):
        X = np.array(state["X"], dtype=np.float64).reshape(len(state["y"]), len(columns))
        return cls(spec, columns, X, state["y"], trained_on)


class PerMacKnn(_Model):
    """One coordinate-only kNN table per MAC; unseen MACs get the global mean."""
    family = "per_mac_knn"

    def __init__(self, spec, columns, tables, fallback, trained_on=""):
        super().__init__(spec, columns, trained_on)
        self.tables = {m: (np.asarray(X, dtype=np.float64).reshape(-1, 3),
                           np.asarray(y, dtype=np.float64))
                       for m, (X, y) in tables.items()}
        self.fallback = float(fallback)

    @classmethod
    def fit(cls, spec, fm):
        coords = fm.coord_mask
        if coords.sum() != 3:
            raise ValueError("per_mac_knn needs coordinate columns")
        if len(fm) == 0:
            raise ValueError("per-MAC family needs at least one MAC")
        rows: dict[str, list[int]] = {}
        for i, mac in enumerate(fm.macs):
            rows.setdefault(mac, []).append(i)
        Xc = fm.X[:, coords]
        tables = {m: (Xc[r], fm.y[r]) for m, r in sorted(rows.items())}
        return cls(spec, fm.columns, tables, math.fsum(fm.y) / len(fm), fm_provenance(fm))

    def flag_unknown(self, fm):
        return np.array([m not in self.tables for m in fm.macs], dtype=bool)

    def predict(self, fm):
        self._check_columns(fm)
        Xc = fm.X[:, fm.coord_mask]
        out = np.full(len(fm), self.fallback)
        macs = np.array(fm.macs, dtype=object)
        for mac in sorted(set(fm.macs)):
            if mac not in self.tables:
                continue
            rows = np.flatnonzero(macs == mac)
            tX, ty = self.tables[mac]
            out[rows] = knn_batch(tX, ty, Xc[rows], self.spec.knn.k, self.spec.knn.weighting)
        return out

    def state(self):
        return {"tables": {m: {"X": X.ravel().tolist(), "y": y.tolist()}
                           for m, (X, y) in self.tables.items()},
                "fallback": self.fallback}

    @classmethod
    def from_state(cls, spec, columns, state, trained_on):
        tables = {m: (t["X"], t["y"]) for m, t in state["tables"].items()}
        return cls(spec, columns, tables, state["fallback"], trained_on)


class MlpRegressor(_Model):
    """Sigmoid hidden layer, linear output; coordinates scaled to [0, 1]."""
    family = "mlp"

    def __init__(self, spec, columns, params, history=None, trained_on=""):
        super().__init__(spec, columns, trained_on)
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.history = history or {}

    def _inputs(self, fm):
        extents = dict(zip(COORD_COLUMNS, self.spec.mlp.volume.extents))
        scale = np.array([extents.get(c, fm.spec.mac_scale if c.startswith("mac=") else 1.0)
                          for c in fm.columns])
        return fm.X / scale

    @classmethod
    def fit(cls, spec, fm, validation: FeatureMatrix | None = None):
        if len(fm) == 0:
            raise ValueError("empty training set")
        p = spec.mlp
        model = cls(spec, fm.columns, {}, None, fm_provenance(fm))
        X_val = y_val = None
        if validation is not None:
            X_val, y_val = model._inputs(validation), validation.y
        params, history = mlp.train(
            model._inputs(fm), fm.y, n_hidden=p.hidden_units, epochs=p.epochs,
            batch_size=p.batch_size, seed=p.seed, learning_rate=p.learning_rate,
            beta1=p.beta1, beta2=p.beta2, epsilon=p.epsilon, X_val=X_val, y_val=y_val)
        model.params = params
        model.history = history
        return model

    def predict(self, fm):
        self._check_columns(fm)
        out, _ = mlp.forward(self.params, self._inputs(fm))
        return out

    def state(self):
        return {"params": {k: v.tolist() for k, v in self.params.items()},
                "history": self.history}

    @classmethod
    def from_state(cls, spec, columns, state, trained_on):
        params = {k: np.array(v, dtype=np.float64) for k, v in state["params"].items()}
        return cls(spec, columns, params, state.get("history"), trained_on)


_CLASSES = {c.family: c for c in (GlobalMean, PerMacMean, KnnRegressor, PerMacKnn,
                                  MlpRegressor)}


def fm_provenance(fm: FeatureMatrix) -> str:
    return f"{len(fm)} rows x {len(fm.columns)} columns"


def fit(spec: RegressorSpec, train: FeatureMatrix, **kwargs):
    """Train the model family named by ``spec`` on ``train``."""
    if len(train) == 0:
        raise ValueError("empty training set")
    return _CLASSES[spec.family].fit(spec, train, **kwargs)


def predict(model, fm: FeatureMatrix) -> np.ndarray:
    return model.predict(fm)


def model_to_dict(model) -> dict:
    return {"format": MODEL_FORMAT, "version": MODEL_VERSION, "family": model.family,
            "spec": model.spec.to_dict(), "columns": list(model.columns),
            "trained_on": model.trained_on, "state": model.state()}


def model_from_dict(d: dict):
    if d.get("format") != MODEL_FORMAT:
        raise ValueError("not a dronerem model document")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    spec = RegressorSpec.from_dict(d["spec"])
    return _CLASSES[d["family"]].from_state(spec, d["columns"], d["state"],
                                            d.get("trained_on", ""))


def save_model(model, path, extra: dict | None = None) -> None:
    doc = model_to_dict(model)
    if extra:
        doc["provenance"] = extra
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_dict(doc), doc.get("provenance", {})
