"""Rare-MAC filtering, feature encoding and the train/test split."""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Dataset

COORD_COLUMNS = ("x", "y", "z")
MAC_PREFIX = "mac="
CHANNEL_PREFIX = "channel="


def filter_rare_macs(dataset: Dataset, min_count: int = 16) -> tuple[Dataset, int]:
    """Drop every sample whose MAC occurs fewer than ``min_count`` times."""
    if min_count < 0:
        raise ValueError("min_count must be >= 0")
    counts = Counter(s.mac for s in dataset)
    kept = tuple(s for s in dataset if counts[s.mac] >= min_count)
    return Dataset(kept, dataset.provenance), len(dataset) - len(kept)


@dataclass(frozen=True)
class EncodingSpec:
    use_coords: bool = True
    use_mac_onehot: bool = True
    use_channel_onehot: bool = False
    mac_scale: float = 1.0

    def __post_init__(self):
        if not (self.use_coords or self.use_mac_onehot or self.use_channel_onehot):
            raise ValueError("at least one feature group must be enabled")
        if not self.mac_scale >= 1:
            raise ValueError("mac_scale must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Numeric design matrix with the row metadata models need.

    ``X`` columns follow ``columns``; ``macs`` and ``channels`` hold each
    row's categorical keys even when their one-hot groups are disabled.
    """
    columns: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    macs: tuple[str, ...]
    channels: tuple[int, ...]
    spec: EncodingSpec = field(default_factory=EncodingSpec)

    def __len__(self):
        return self.X.shape[0]

    def column_mask(self, prefix: str) -> np.ndarray:
        return np.array([c.startswith(prefix) for c in self.columns], dtype=bool)

    @property
    def coord_mask(self) -> np.ndarray:
        return np.array([c in COORD_COLUMNS for c in self.columns], dtype=bool)

    @property
    def mac_mask(self) -> np.ndarray:
        return self.column_mask(MAC_PREFIX)

    @property
    def channel_mask(self) -> np.ndarray:
        return self.column_mask(CHANNEL_PREFIX)

    @property
    def mac_vocab(self) -> tuple[str, ...]:
        return tuple(c[len(MAC_PREFIX):] for c in self.columns if c.startswith(MAC_PREFIX))

    @property
    def channel_vocab(self) -> tuple[int, ...]:
        return tuple(int(c[len(CHANNEL_PREFIX):]) for c in self.columns
                     if c.startswith(CHANNEL_PREFIX))

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(self.columns, self.X[rows], self.y[rows],
                             tuple(self.macs[i] for i in rows),
                             tuple(self.channels[i] for i in rows), self.spec)

    def to_csv(self) -> str:
        header = ",".join(self.columns + ("rssi", "mac_key"))
        lines = [header]
        for row, t, mac in zip(self.X, self.y, self.macs):
            lines.append(",".join([repr(float(v)) for v in row] + [repr(float(t)), mac]))
        return "\n".join(lines) + "\n"


def encode(dataset: Dataset, spec: EncodingSpec = EncodingSpec(),
           macs=None, channels=None) -> FeatureMatrix:
    """Encode samples as ``[x, y, z][mac one-hots][channel one-hots]``.

    ``macs`` / ``channels`` pin the one-hot vocabularies, which is how a test
    set is aligned to a training set's columns. A sample whose MAC is outside
    a pinned vocabulary gets an all-zero MAC group.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    mac_vocab = tuple(sorted({s.mac for s in dataset})) if macs is None else tuple(macs)
    ch_vocab = (tuple(sorted({s.channel for s in dataset})) if channels is None
                else tuple(int(c) for c in channels))
    columns: list[str] = []
    blocks = []
    n = len(dataset)
    if spec.use_coords:
        columns += COORD_COLUMNS
        blocks.append(np.array([s.position.as_tuple() for s in dataset], dtype=np.float64))
    if spec.use_mac_onehot:
        columns += [MAC_PREFIX + m for m in mac_vocab]
        pos = {m: i for i, m in enumerate(mac_vocab)}
        block = np.zeros((n, len(mac_vocab)))
        for r, s in enumerate(dataset):
            if s.mac in pos:
                block[r, pos[s.mac]] = spec.mac_scale
        blocks.append(block)
    if spec.use_channel_onehot:
        columns += [f"{CHANNEL_PREFIX}{c}" for c in ch_vocab]
        pos = {c: i for i, c in enumerate(ch_vocab)}
        block = np.zeros((n, len(ch_vocab)))
        for r, s in enumerate(dataset):
            if s.channel in pos:
                block[r, pos[s.channel]] = 1.0
        blocks.append(block)
    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    return FeatureMatrix(tuple(columns), X, np.array(dataset.rssi, dtype=np.float64),
                         tuple(dataset.macs), tuple(s.channel for s in dataset), spec)


def encode_like(dataset: Dataset, reference: FeatureMatrix) -> FeatureMatrix:
    """Encode ``dataset`` with the columns and spec of ``reference``."""
    return encode(dataset, reference.spec, macs=reference.mac_vocab,
                  channels=reference.channel_vocab)


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.75
    seed: int = 0
    stratify_by_mac: bool = True

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")

    def to_dict(self):
        return asdict(self)


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def _allocate(sizes, fraction, target):
    """Largest-remainder allocation of ``target`` train slots over groups.

    Groups of size >= 2 get between 1 and size-1 slots; singletons get 1.
    """
    quota = [fraction * n for n in sizes]
    lo = [1 if n >= 1 else 0 for n in sizes]
    hi = [n - 1 if n >= 2 else n for n in sizes]
    alloc = [min(max(int(math.floor(q)), l), h) for q, l, h in zip(quota, lo, hi)]
    diff = target - sum(alloc)
    order = sorted(range(len(sizes)), key=lambda g: (-(quota[g] - alloc[g]), g))
    while diff > 0:
        moved = False
        for g in order:
            if diff == 0:
                break
            if alloc[g] < hi[g]:
                alloc[g] += 1
                diff -= 1
                moved = True
        if not moved:
            break
    order = sorted(range(len(sizes)), key=lambda g: (quota[g] - alloc[g], g))
    while diff < 0:
        moved = False
        for g in order:
            if diff == 0:
                break
            if alloc[g] > lo[g]:
                alloc[g] -= 1
                diff += 1
                moved = True
        if not moved:
            break
    return alloc


def split_indices(dataset: Dataset, config: SplitConfig = SplitConfig()):
    """Return sorted ``(train_idx, test_idx)`` index arrays.

    The train size is ``round(train_fraction * n)`` (halves round up). With
    stratification each MAC contributes about its share, every MAC with at
    least two samples keeps one in each side, and a single-sample MAC is
    placed in train with a warning. Those per-MAC bounds win over the target
    size in the rare case they cannot both hold.
    """
    n = len(dataset)
    if n < 2:
        raise ValueError("need at least 2 samples to split")
    rng = np.random.default_rng(config.seed)
    target = min(max(_round_half_up(config.train_fraction * n), 1), n - 1)
    if not config.stratify_by_mac:
        perm = rng.permutation(n)
        return np.sort(perm[:target]), np.sort(perm[target:])
    groups: dict[str, list[int]] = {}
    for i, s in enumerate(dataset):
        groups.setdefault(s.mac, []).append(i)
    keys = sorted(groups)
    singles = [k for k in keys if len(groups[k]) == 1]
    if singles:
        warnings.warn(f"{len(singles)} MAC(s) with a single sample placed in train: "
                      f"{', '.join(singles[:5])}", stacklevel=2)
    alloc = _allocate([len(groups[k]) for k in keys], config.train_fraction, target)
    train, test = [], []
    for key, n_train in zip(keys, alloc):
        members = np.array(groups[key])
        members = members[rng.permutation(len(members))]
        train.extend(members[:n_train])
        test.extend(members[n_train:])
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)


def split(dataset: Dataset, config: SplitConfig = SplitConfig()) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(dataset, config)
    return (dataset.subset(train_idx, f"{dataset.provenance}#train"),
            dataset.subset(test_idx, f"{dataset.provenance}#test"))
