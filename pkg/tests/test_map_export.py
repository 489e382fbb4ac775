import json

import numpy as np
import pytest

from conftest import random_dataset
from dronerem.core import VolumeSpec
from dronerem.map_export import (export_grid, lattice_shape, load_grid_csv, load_grid_json,
                                 predict_grid, slice_tsv)
from dronerem.preprocessing import encode
from dronerem.regressors import KnnParams, RegressorSpec, fit


@pytest.fixture(scope="module")
def trained():
    ds = random_dataset(n_macs=3, per_mac=30, seed=2, field=True)
    fm = encode(ds)
    return ds, fm


def test_lattice_dimensions():
    assert lattice_shape(VolumeSpec(), 0.5) == (8, 7, 5)
    assert lattice_shape(VolumeSpec(), 10.0) == (1, 1, 1)
    with pytest.raises(ValueError):
        lattice_shape(VolumeSpec(), 0)


def test_constant_model_fills_grid(trained):
    ds, fm = trained
    model = fit(RegressorSpec("per_mac_mean"), fm)
    mac = ds.macs[0]
    grid = predict_grid(model, VolumeSpec(), 0.5, mac)
    assert grid.shape == (8, 7, 5)
    assert np.all(grid.values == model.means[mac])
    assert grid.provenance["fallback"] is False


def test_unknown_mac_marks_fallback(trained):
    _, fm = trained
    model = fit(RegressorSpec("per_mac_mean"), fm)
    grid = predict_grid(model, VolumeSpec(), 1.0, "ff:00:00:00:00:00")
    assert grid.provenance["fallback"] is True


def test_degenerate_grid_has_one_row(trained):
    ds, fm = trained
    grid = predict_grid(fit(RegressorSpec("knn"), fm), VolumeSpec(), 10.0, ds.macs[0])
    assert grid.shape == (1, 1, 1)
    assert export_grid(grid, "csv").count("\n") == 2


def test_grid_matches_direct_prediction(trained):
    ds, fm = trained
    model = fit(RegressorSpec("knn", knn=KnnParams(3, "inverse_distance", 2.0)), fm)
    mac = ds.macs[-1]
    grid = predict_grid(model, VolumeSpec(), 0.5, mac)
    i = 5
    x, y, z = grid.points()[i]
    row = np.zeros((1, len(fm.columns)))
    row[0, :3] = (x, y, z)
    row[0, fm.columns.index("mac=" + mac)] = 1.0
    from dronerem.regressors import knn_batch
    Xs = fm.X.copy()
    Xs[:, fm.mac_mask] *= 2.0
    row[:, fm.mac_mask] *= 2.0
    assert grid.values.ravel()[i] == knn_batch(Xs, fm.y, row, 3, "inverse_distance")[0]


def test_csv_and_json_round_trip(trained):
    ds, fm = trained
    grid = predict_grid(fit(RegressorSpec("knn"), fm), VolumeSpec(), 0.5, ds.macs[0])
    csv_text = export_grid(grid, "csv")
    assert csv_text.count("\n") == 1 + 8 * 7 * 5
    back = load_grid_csv(csv_text, VolumeSpec(), 0.5)
    assert np.array_equal(back.values, grid.values)
    jback = load_grid_json(export_grid(grid, "json"))
    assert np.array_equal(jback.values, grid.values)
    assert jback.mac == grid.mac and jback.resolution == 0.5
    with pytest.raises(ValueError):
        load_grid_json(json.dumps({"format": "nope"}))
    with pytest.raises(ValueError):
        export_grid(grid, "xml")


def test_slice_picks_nearest_layer(trained):
    ds, fm = trained
    grid = predict_grid(fit(RegressorSpec("knn"), fm), VolumeSpec(), 0.5, ds.macs[0])
    lines = slice_tsv(grid, 1.1).splitlines()
    assert len(lines) == 1 + 7
    assert len(lines[1].split("\t")) == 1 + 8
    assert float(lines[1].split("\t")[1]) == pytest.approx(grid.values[0, 0, 2], abs=1e-4)
