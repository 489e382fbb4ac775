"""RMSE scoring, per-model evaluation and cross-validated grid search."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .preprocessing import FeatureMatrix
from .regressors import KnnParams, MlpParams, RegressorSpec, fit


def rmse(predictions, truths) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(truths, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty input")
    err = p - t
    return math.sqrt(math.fsum(err * err) / p.size)


@dataclass
class EvalReport:
    name: str
    family: str
    rmse: float
    n: int
    n_flagged: int = 0
    per_mac: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "family": self.family, "rmse": self.rmse,
                "n": self.n, "n_flagged": self.n_flagged, "per_mac": self.per_mac}


def evaluate(model, test: FeatureMatrix, name: str | None = None) -> EvalReport:
    """Overall and per-MAC test RMSE, plus how many rows hit a fallback."""
    if len(test) == 0:
        raise ValueError("empty test set")
    pred = model.predict(test)
    flags = model.flag_unknown(test)
    per_mac = {}
    macs = np.array(test.macs, dtype=object)
    for mac in sorted(set(test.macs)):
        rows = macs == mac
        per_mac[mac] = rmse(pred[rows], test.y[rows])
    return EvalReport(name or model.family, model.family, rmse(pred, test.y), len(test),
                      int(flags.sum()), per_mac)


# -- grid search ---------------------------------------------------------------------

_KNN_AXES = ("k", "weighting", "mac_scale")
_MLP_AXES = tuple(f for f in MlpParams.__dataclass_fields__ if f != "volume")


@dataclass(frozen=True)
class GridSpec:
    family: str
    axes: dict

    def __post_init__(self):
        if not self.axes or any(len(v) == 0 for v in self.axes.values()):
            raise ValueError("grid axes must be non-empty")
        allowed = {"knn": _KNN_AXES, "per_mac_knn": ("k", "weighting"),
                   "mlp": _MLP_AXES}.get(self.family, ())
        bad = [a for a in self.axes if a not in allowed]
        if bad:
            raise ValueError(f"axes {bad} not tunable for family {self.family}")

    def points(self) -> list[dict]:
        names = list(self.axes)
        return [dict(zip(names, combo))
                for combo in itertools.product(*(self.axes[n] for n in names))]

    def to_dict(self):
        return {"family": self.family, "axes": {k: list(v) for k, v in self.axes.items()}}


def default_knn_grid(scales=range(1, 21)) -> GridSpec:
    return GridSpec("knn", {"k": list(range(1, 21)),
                            "weighting": ["uniform", "inverse_distance"],
                            "mac_scale": [float(s) for s in scales]})


@dataclass(frozen=True)
class CvConfig:
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


def fold_ids(macs, config: CvConfig) -> np.ndarray:
    """Assign every row to a fold, stratified by MAC when each MAC has
    at least ``folds`` rows; otherwise fall back to a plain shuffle."""
    n = len(macs)
    if config.folds > n:
        raise ValueError(f"{config.folds} folds exceed {n} training rows")
    rng = np.random.default_rng(config.seed)
    groups: dict[str, list[int]] = {}
    for i, m in enumerate(macs):
        groups.setdefault(m, []).append(i)
    out = np.empty(n, dtype=np.int64)
    if min(len(v) for v in groups.values()) < config.folds:
        warnings.warn("too few samples per MAC for stratified folds; using unstratified folds",
                      stacklevel=2)
        out[rng.permutation(n)] = np.arange(n) % config.folds
        return out
    offset = 0
    for key in sorted(groups):
        members = np.array(groups[key])[rng.permutation(len(groups[key]))]
        out[members] = (offset + np.arange(len(members))) % config.folds
        offset += len(members)
    return out


@dataclass
class GridResult:
    family: str
    best: dict
    best_score: float
    table: list[dict]  # ordered by grid-point index

    def to_dict(self):
        return {"family": self.family, "best": self.best, "best_score": self.best_score,
                "table": self.table}


def spec_for_point(family: str, point: dict, base: RegressorSpec | None = None) -> RegressorSpec:
    if family in ("knn", "per_mac_knn"):
        knn = base.knn if base is not None and base.knn is not None else KnnParams()
        return RegressorSpec(family, knn=replace(knn, **point))
    if family == "mlp":
        mlp = base.mlp if base is not None and base.mlp is not None else MlpParams()
        return RegressorSpec(family, mlp=replace(mlp, **point))
    return RegressorSpec(family)


def _block_layout(train: FeatureMatrix):
    """Unit-scale MAC and channel blocks if ``train`` has the encoder's column
    layout (other columns, then MAC one-hots, then channel one-hots), else None."""
    mac = train.mac_mask
    chan = train.channel_mask
    group = np.where(mac, 1, np.where(chan, 2, 0))
    if np.any(np.diff(group) < 0):
        return None
    M = train.X[:, mac] / train.spec.mac_scale
    Ch = train.X[:, chan]
    if not (np.all((M == 0) | (M == 1)) and np.all((Ch == 0) | (Ch == 1))):
        return None
    return M, Ch


def _add_terms(D2, counts, term):
    """Add ``term`` once per differing one-hot column, one addition at a time,
    which is the order the column-by-column distance kernel sums them in."""
    out = D2
    for j in range(1, int(counts.max(initial=0)) + 1):
        out = np.where(counts >= j, out + term, out)
    return out


def _knn_fold_scores(points, train, folds, nfolds):
    """Score every kNN grid point per fold, sharing the distance work.

    The squared distance to a training row is the coordinate part plus one
    ``mac_scale**2`` term per differing MAC column (and one unit term per
    differing channel column). The coordinate part and the difference counts
    are computed once per fold; each scale then only replays the additions in
    the kernel's summation order, so the scores match refitting bit for bit.
    Returns None when ``train`` does not have the encoder's column layout.
    """
    blocks = _block_layout(train)
    if blocks is None:
        return None
    M, Ch = blocks
    rest = ~(train.mac_mask | train.channel_mask)
    X_rest = train.X[:, rest]
    enc_scale = train.spec.mac_scale
    kmax = max(p.get("k", KnnParams.k) for p in points)
    scores = np.empty((len(points), nfolds))
    for f in range(nfolds):
        tr = np.flatnonzero(folds != f)
        va = np.flatnonzero(folds == f)
        D_rest = kernels.pairwise_sq_dist(X_rest[va], X_rest[tr])
        n_mac = kernels.pairwise_sq_dist(M[va], M[tr])
        n_ch = kernels.pairwise_sq_dist(Ch[va], Ch[tr])
        y_tr = train.y[tr]
        y_va = train.y[va]
        cache = {}
        for i, p in enumerate(points):
            s = float(p.get("mac_scale", KnnParams.mac_scale))
            if s not in cache:
                # the fitted model stores each one-hot as enc_scale * (s / enc_scale)
                v = enc_scale * (s / enc_scale)
                D2 = _add_terms(_add_terms(D_rest, n_mac, v * v), n_ch, 1.0)
                cache = {s: (D2, kernels.nearest(D2, kmax))}
            D2, idx = cache[s]
            pred = kernels.reduce_neighbors(D2, idx, y_tr, p.get("k", KnnParams.k),
                                            p.get("weighting", KnnParams.weighting)
                                            == "inverse_distance")
            scores[i, f] = rmse(pred, y_va)
    return scores


def _generic_fold_scores(grid, points, train, folds, nfolds, base):
    scores = np.empty((len(points), nfolds))
    for f in range(nfolds):
        tr = train.take(np.flatnonzero(folds != f))
        va = train.take(np.flatnonzero(folds == f))
        for i, p in enumerate(points):
            model = fit(spec_for_point(grid.family, p, base), tr)
            scores[i, f] = rmse(model.predict(va), va.y)
    return scores


def grid_search(grid: GridSpec, train: FeatureMatrix, cv: CvConfig = CvConfig(),
                base: RegressorSpec | None = None) -> GridResult:
    """Pick the grid point with the lowest mean k-fold RMSE on ``train``.

    Ties go to the smaller ``k``, then the smaller ``mac_scale``, then the
    earlier grid point.
    """
    points = grid.points()
    folds = fold_ids(train.macs, cv)
    if grid.family == "knn":
        # group by scale so the per-fold neighbor cache is reused
        order = sorted(range(len(points)),
                       key=lambda i: (float(points[i].get("mac_scale", 1.0)), i))
        sub = _knn_fold_scores([points[i] for i in order], train, folds, cv.folds)
    else:
        sub = None
    if sub is not None:
        scores = np.empty_like(sub)
        scores[order] = sub
    else:
        scores = _generic_fold_scores(grid, points, train, folds, cv.folds, base)
    means = scores.mean(axis=1)
    table = [{"index": i, "point": p, "fold_scores": scores[i].tolist(),
              "mean_rmse": float(means[i])} for i, p in enumerate(points)]
    best = min(range(len(points)),
               key=lambda i: (means[i], points[i].get("k", 0),
                              points[i].get("mac_scale", 0), i))
    return GridResult(grid.family, dict(points[best]), float(means[best]), table)


def format_comparison(reports) -> str:
    width = max(len("model"), *(len(r.name) for r in reports))
    lines = [f"{'model':<{width}}  {'rmse_dbm':>9}  {'n':>5}  {'flagged':>7}"]
    for r in reports:
        lines.append(f"{r.name:<{width}}  {r.rmse:>9.4f}  {r.n:>5}  {r.n_flagged:>7}")
    return "\n".join(lines) + "\n"


def comparison_tsv(reports) -> str:
    return "".join(f"{r.name}\t{r.rmse:.6f}\n" for r in reports)
