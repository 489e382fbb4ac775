import math

import numpy as np
import pytest

from conftest import make_sample, random_dataset
from dronerem.core import Dataset
from dronerem.evaluation import (CvConfig, GridSpec, comparison_tsv, default_knn_grid,
                                 evaluate, fold_ids, format_comparison, grid_search, rmse,
                                 spec_for_point)
from dronerem.preprocessing import EncodingSpec, encode, encode_like
from dronerem.regressors import KnnParams, RegressorSpec, fit


def test_rmse_hand_values():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0
    assert rmse([3, -4], [0, 0]) == pytest.approx(math.sqrt(12.5))
    assert rmse([5], [0]) == 5


def test_rmse_rejects_bad_input():
    with pytest.raises(ValueError):
        rmse([1, 2], [1])
    with pytest.raises(ValueError):
        rmse([], [])


def test_constant_target_global_mean_is_exact():
    fm = encode(Dataset(tuple(make_sample(rssi=-70, x=i / 10) for i in range(5))))
    assert evaluate(fit(RegressorSpec("global_mean"), fm), fm).rmse == 0


def test_per_mac_mean_beats_global_mean_on_distinct_macs():
    ds = random_dataset(n_macs=5, per_mac=30, seed=1)
    fm = encode(ds)
    g = evaluate(fit(RegressorSpec("global_mean"), fm), fm)
    p = evaluate(fit(RegressorSpec("per_mac_mean"), fm), fm)
    assert p.rmse < g.rmse
    assert set(p.per_mac) == set(ds.macs)


def test_report_counts_fallback_rows():
    train = encode(Dataset((make_sample("aa:00:00:00:00:01", -60),)))
    test = encode_like(Dataset((make_sample("aa:00:00:00:00:01", -60),
                                make_sample("bb:00:00:00:00:02", -80))), train)
    rep = evaluate(fit(RegressorSpec("per_mac_mean"), train), test, "pm")
    assert rep.n == 2 and rep.n_flagged == 1 and rep.name == "pm"


def test_grid_points_are_a_cartesian_product():
    g = GridSpec("knn", {"k": [1, 2], "weighting": ["uniform", "inverse_distance"]})
    assert len(g.points()) == 4
    assert len(default_knn_grid().points()) == 20 * 2 * 20
    with pytest.raises(ValueError):
        GridSpec("knn", {"hidden_units": [4]})
    with pytest.raises(ValueError):
        GridSpec("knn", {"k": []})


def test_fold_ids_are_stratified():
    macs = ["a"] * 10 + ["b"] * 7
    f = fold_ids(macs, CvConfig(5, seed=2))
    for m in ("a", "b"):
        counts = np.bincount(f[[i for i, x in enumerate(macs) if x == m]], minlength=5)
        assert counts.max() - counts.min() <= 1


def test_fold_ids_fall_back_when_a_mac_is_small():
    with pytest.warns(UserWarning, match="unstratified"):
        f = fold_ids(["a"] * 10 + ["b"] * 2, CvConfig(5))
    assert np.bincount(f).tolist() == [3, 3, 2, 2, 2]


def test_single_point_grid():
    fm = encode(random_dataset(seed=3, field=True))
    res = grid_search(GridSpec("knn", {"k": [3]}), fm)
    assert res.best == {"k": 3}
    assert len(res.table) == 1


def test_dominating_point_wins():
    # k=1 on duplicated rows reproduces the target exactly at a neighbor
    ds = random_dataset(n_macs=2, per_mac=20, seed=4, field=True)
    doubled = Dataset(ds.samples * 2)
    fm = encode(doubled)
    res = grid_search(GridSpec("knn", {"k": [1, 40], "weighting": ["uniform"]}), fm,
                      CvConfig(5, seed=0))
    scores = {r["point"]["k"]: r["fold_scores"] for r in res.table}
    assert all(a <= b for a, b in zip(scores[1], scores[40]))
    assert res.best["k"] == 1


@pytest.mark.parametrize("enc", [EncodingSpec(), EncodingSpec(use_channel_onehot=True),
                                 EncodingSpec(mac_scale=3.0)])
def test_grid_scores_equal_refitting_exactly(enc):
    # lattice coordinates create exact distance ties, so any difference in
    # summation order would show up as a different neighbor set
    fm = encode(random_dataset(n_macs=3, per_mac=25, seed=6, field=True), enc)
    grid = GridSpec("knn", {"k": [1, 4, 9], "weighting": ["uniform", "inverse_distance"],
                            "mac_scale": [1.0, 2.5, 3.0]})
    cv = CvConfig(5, seed=1)
    res = grid_search(grid, fm, cv)
    folds = fold_ids(fm.macs, cv)
    for row in res.table:
        spec = spec_for_point("knn", row["point"])
        for f in range(5):
            tr, va = fm.take(np.flatnonzero(folds != f)), fm.take(np.flatnonzero(folds == f))
            assert row["fold_scores"][f] == rmse(fit(spec, tr).predict(va), va.y)


def test_grid_search_is_deterministic():
    fm = encode(random_dataset(seed=7, field=True))
    grid = GridSpec("knn", {"k": [1, 3, 5], "mac_scale": [1.0, 2.0]})
    assert grid_search(grid, fm, CvConfig(seed=3)).to_dict() == \
        grid_search(grid, fm, CvConfig(seed=3)).to_dict()


def test_generic_family_grid():
    fm = encode(random_dataset(seed=8, field=True))
    res = grid_search(GridSpec("per_mac_knn", {"k": [1, 5]}), fm)
    assert res.best["k"] in (1, 5)
    base = RegressorSpec("per_mac_knn", knn=KnnParams(weighting="uniform"))
    assert spec_for_point("per_mac_knn", {"k": 2}, base).knn == KnnParams(2, "uniform")


def test_comparison_formats():
    fm = encode(random_dataset())
    reps = [evaluate(fit(RegressorSpec(f), fm), fm) for f in ("global_mean", "per_mac_mean")]
    text = format_comparison(reps)
    assert text.splitlines()[0].split() == ["model", "rmse_dbm", "n", "flagged"]
    assert comparison_tsv(reps).count("\n") == 2
