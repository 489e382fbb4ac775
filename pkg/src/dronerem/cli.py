"""Command-line entry point: ``dronerem <subcommand> [options]``.

Option values resolve as built-in default < config file (``--config``, INI
section ``[dronerem]``) < environment (``DRONEREM_<OPTION>``, e.g.
``DRONEREM_SEED=7``) < command-line flag.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from . import evaluation as ev
from . import ingestion as ing
from . import map_export as mx
from . import mission as ms
from . import preprocessing as pp
from . import regressors as rg
from .core import VolumeSpec
from .scenario import default_scenario, load_scenario

ENV_PREFIX = "DRONEREM_"


def _int_range(text):
    """Parse ``"1-20"`` or ``"1,3,5"`` into a list of ints."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _bool(text):
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# name -> (type, default); every entry may come from file, env or flag
OPTIONS = {
    "input": (str, None),
    "format": (str, None),
    "out": (str, None),
    "seed": (int, 0),
    "lenient": (_bool, False),
    "min_count": (int, 16),
    "train_fraction": (float, 0.75),
    "stratify": (_bool, True),
    "channels": (_bool, False),
    "family": (str, "knn"),
    "k": (int, 5),
    "weighting": (str, "inverse_distance"),
    "mac_scale": (float, 1.0),
    "hidden_units": (int, 16),
    "epochs": (int, 200),
    "batch_size": (int, 32),
    "learning_rate": (float, 1e-3),
    "folds": (int, 5),
    "k_values": (str, "1-20"),
    "mac_scales": (str, "1-20"),
    "weightings": (str, "uniform,inverse_distance"),
    "model": (str, None),
    "test": (str, None),
    "mac": (str, None),
    "resolution": (float, 0.25),
    "slice": (str, None),
    "scenario": (str, None),
    "routes": (str, None),
    "lattice": (str, "6,4,3"),
    "margin": (float, 0.3),
    "n_drones": (int, 2),
    "force": (_bool, False),
    "feedback": (_bool, True),
    "histogram": (str, None),
    "bin_width": (float, 0.5),
    "json": (_bool, False),
    "plot_data": (_bool, False),
}

# destinations, not parameters: kept out of the provenance echo
_NOT_ECHOED = {"out", "config", "json", "plot_data"}


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(str(exc))
        self.stage = stage
        self.cause = exc


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    file_values = {}
    if getattr(args, "config", None):
        parser = configparser.ConfigParser()
        with open(args.config, encoding="utf-8") as fh:
            parser.read_file(fh)
        if parser.has_section("dronerem"):
            file_values = {k.replace("-", "_"): v for k, v in parser.items("dronerem")}
    cfg = {}
    for name, (typ, default) in OPTIONS.items():
        value = default
        if name in file_values:
            value = typ(file_values[name])
        env_key = ENV_PREFIX + name.upper()
        if env_key in environ:
            value = typ(environ[env_key])
        flag = getattr(args, name, None)
        if flag is not None:
            value = typ(flag)
        cfg[name] = value
    return cfg


def provenance(cfg: dict, command: str) -> dict:
    return {"tool": "dronerem", "version": __version__, "command": command,
            "config": {k: v for k, v in sorted(cfg.items()) if k not in _NOT_ECHOED}}


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _commented(text: str, prov: dict) -> str:
    """Prefix a text table or TSV with a ``#`` provenance line."""
    return "# " + json.dumps(prov, sort_keys=True, separators=(",", ":")) + "\n" + text


def _sidecar(path, prov: dict):
    """CSV data files keep their strict header; provenance goes next to them."""
    Path(str(path) + ".provenance.json").write_text(_dump(prov), encoding="utf-8")


def _emit(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _require(cfg, name):
    if not cfg.get(name):
        raise ValueError(f"--{name.replace('_', '-')} is required")
    return cfg[name]


def _read(cfg, path=None):
    return ing.read_samples(path or _require(cfg, "input"), cfg["format"],
                            strict=not cfg["lenient"])


def _encoding(cfg) -> pp.EncodingSpec:
    return pp.EncodingSpec(use_channel_onehot=cfg["channels"])


def _split_config(cfg) -> pp.SplitConfig:
    return pp.SplitConfig(cfg["train_fraction"], cfg["seed"], cfg["stratify"])


def _regressor_spec(cfg, family=None) -> rg.RegressorSpec:
    family = family or cfg["family"]
    if family in ("knn", "per_mac_knn"):
        return rg.RegressorSpec(family, knn=rg.KnnParams(cfg["k"], cfg["weighting"],
                                                         cfg["mac_scale"]))
    if family == "mlp":
        return rg.RegressorSpec(family, mlp=rg.MlpParams(
            hidden_units=cfg["hidden_units"], epochs=cfg["epochs"],
            batch_size=cfg["batch_size"], learning_rate=cfg["learning_rate"],
            seed=cfg["seed"]))
    return rg.RegressorSpec(family)


def prepare(dataset, cfg):
    """Filter rare MACs, split, and encode train/test on the train vocabulary."""
    kept, dropped = pp.filter_rare_macs(dataset, cfg["min_count"])
    train_idx, test_idx = pp.split_indices(kept, _split_config(cfg))
    train = kept.subset(train_idx)
    test = kept.subset(test_idx)
    fm_train = pp.encode(train, _encoding(cfg))
    fm_test = pp.encode_like(test, fm_train)
    return {"kept": kept, "dropped": dropped, "train_idx": train_idx, "test_idx": test_idx,
            "fm_train": fm_train, "fm_test": fm_test}


# -- subcommands ------------------------------------------------------------------------

def cmd_ingest(cfg):
    ds = _read(cfg)
    summary = {"n_samples": len(ds), "n_rejected": len(ds.rejected),
               "rejected": [{"line": ln, "error": msg} for ln, msg in ds.rejected],
               "provenance": provenance(cfg, "ingest")}
    if cfg["out"]:
        ing.write_samples(ds, cfg["out"])
        _sidecar(cfg["out"], summary["provenance"])
    sys.stdout.write(_dump(summary))


def cmd_stats(cfg):
    ds = _read(cfg)
    prov = provenance(cfg, "stats")
    if cfg["histogram"]:
        hist = ing.histogram(ds, cfg["histogram"], cfg["bin_width"])
        if cfg["plot_data"]:
            text = _commented(ing.histogram_tsv(hist), prov)
        elif cfg["json"]:
            text = _dump({"histogram": hist.to_dict(), "provenance": prov})
        else:
            width = max(len(label) for label, _ in hist.bins)
            text = _commented("".join(f"{label:<{width}}  {count:>6}\n"
                                      for label, count in hist.bins), prov)
        return _emit(text, cfg["out"])
    report = ing.compute_stats(ds)
    if cfg["json"]:
        text = _dump({"stats": report.to_dict(),
                      "mac_locations": ing.mac_location_counts(ds),
                      "provenance": prov})
    else:
        text = _commented(ing.format_stats_table(report), prov)
    _emit(text, cfg["out"])


def cmd_preprocess(cfg):
    ds = _read(cfg)
    prep = prepare(ds, cfg)
    full = pp.encode(prep["kept"], _encoding(cfg))
    out = Path(_require(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "features.csv").write_text(full.to_csv(), encoding="utf-8")
    # features.json below is the sidecar for features.csv
    sidecar = {"encoding": _encoding(cfg).to_dict(), "split": _split_config(cfg).to_dict(),
               "min_count": cfg["min_count"], "dropped": prep["dropped"],
               "n_rows": len(full), "columns": list(full.columns),
               "train_rows": prep["train_idx"].tolist(),
               "test_rows": prep["test_idx"].tolist(),
               "provenance": provenance(cfg, "preprocess")}
    (out / "features.json").write_text(_dump(sidecar), encoding="utf-8")
    sys.stdout.write(_dump({"retained": len(full), "dropped": prep["dropped"],
                            "train": len(prep["train_idx"]), "test": len(prep["test_idx"])}))


def cmd_train(cfg):
    ds = _read(cfg)
    prep = prepare(ds, cfg)
    spec = _regressor_spec(cfg)
    model = rg.fit(spec, prep["fm_train"])
    extra = provenance(cfg, "train")
    rg.save_model(model, _require(cfg, "out"), extra)
    sys.stdout.write(_dump({"family": model.family, "train_rows": len(prep["fm_train"]),
                            "model": cfg["out"]}))


def _report_text(cfg, reports, command):
    prov = provenance(cfg, command)
    if cfg["plot_data"]:
        return _commented(ev.comparison_tsv(reports), prov)
    if cfg["json"]:
        return _dump({"reports": [r.to_dict() for r in reports], "provenance": prov})
    return _commented(ev.format_comparison(reports), prov)


def cmd_evaluate(cfg):
    model, prov = rg.load_model(_require(cfg, "model"))
    if cfg["test"]:
        test = _read(cfg, cfg["test"])
        reference = None
    else:
        # rebuild the held-out split the model was trained against
        trained = dict(prov.get("config", {}))
        for key in ("min_count", "train_fraction", "seed", "stratify", "channels"):
            if key in trained:
                cfg[key] = trained[key]
        prep = prepare(_read(cfg), cfg)
        reference = prep["fm_test"]
    if reference is None:
        enc = pp.EncodingSpec(use_mac_onehot=any(c.startswith(pp.MAC_PREFIX)
                                                 for c in model.columns),
                              use_channel_onehot=any(c.startswith(pp.CHANNEL_PREFIX)
                                                     for c in model.columns))
        macs = [c[len(pp.MAC_PREFIX):] for c in model.columns if c.startswith(pp.MAC_PREFIX)]
        chans = [c[len(pp.CHANNEL_PREFIX):] for c in model.columns
                 if c.startswith(pp.CHANNEL_PREFIX)]
        reference = pp.encode(test, enc, macs=macs, channels=chans)
    report = ev.evaluate(model, reference)
    _emit(_report_text(cfg, [report], "evaluate"), cfg["out"])


def _grid_spec(cfg, family=None, scales=True) -> ev.GridSpec:
    family = family or cfg["family"]
    axes = {"k": _int_range(cfg["k_values"]),
            "weighting": [w.strip() for w in cfg["weightings"].split(",") if w.strip()]}
    if family == "knn" and scales:
        axes["mac_scale"] = [float(s) for s in _int_range(cfg["mac_scales"])]
    return ev.GridSpec(family, axes)


def cmd_grid_search(cfg):
    prep = prepare(_read(cfg), cfg)
    result = ev.grid_search(_grid_spec(cfg), prep["fm_train"],
                            ev.CvConfig(cfg["folds"], cfg["seed"]))
    prov = provenance(cfg, "grid-search")
    if cfg["json"] or cfg["out"]:
        text = _dump({"result": result.to_dict(), "provenance": prov})
    else:
        text = _commented(f"best {result.best} mean CV RMSE {result.best_score:.4f} dBm\n", prov)
    _emit(text, cfg["out"])


def _lattice(cfg):
    dims = [int(v) for v in cfg["lattice"].split(",")]
    if len(dims) != 3:
        raise ValueError("--lattice takes nx,ny,nz")
    return dims


def cmd_plan(cfg):
    scenario = load_scenario(cfg["scenario"]) if cfg["scenario"] else default_scenario()
    waypoints = ms.generate_lattice(scenario.volume, *_lattice(cfg), margin=cfg["margin"])
    routes = ms.assign(waypoints, cfg["n_drones"])
    doc = ms.plan_to_dict(routes)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ms.EnduranceWarning)
        doc["estimated_seconds"] = {r.drone_id: ms.estimate_time(r, scenario.timing)
                                    for r in routes}
    doc["warnings"] = [str(w.message) for w in caught]
    doc["provenance"] = provenance(cfg, "plan")
    _emit(_dump(doc), cfg["out"])


def _simulate(cfg):
    scenario = load_scenario(cfg["scenario"]) if cfg["scenario"] else default_scenario()
    if cfg["routes"]:
        with open(cfg["routes"], encoding="utf-8") as fh:
            routes = ms.routes_from_dict(json.load(fh))
    else:
        routes = scenario.routes()
    ds, log = ms.simulate_mission(routes, scenario.timing, scenario.environment,
                                  scenario.hover, seed=cfg["seed"], feedback=cfg["feedback"],
                                  force=cfg["force"])
    return scenario, ds, log


def cmd_simulate(cfg):
    _, ds, log = _simulate(cfg)
    out = Path(_require(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    ing.write_samples(ds, out / "samples.csv")
    _sidecar(out / "samples.csv", provenance(cfg, "simulate"))
    doc = log.to_dict()
    doc["provenance"] = provenance(cfg, "simulate")
    (out / "mission_log.json").write_text(_dump(doc), encoding="utf-8")
    sys.stdout.write(_dump({"samples": len(ds), "out": str(out)}))


def _parse_slice(text):
    axis, _, value = text.partition("=")
    if axis.strip() != "z" or not value:
        raise ValueError("--slice takes z=<meters>")
    return float(value)


def cmd_export_map(cfg):
    model, _ = rg.load_model(_require(cfg, "model"))
    mac = _require(cfg, "mac").lower()
    scenario = load_scenario(cfg["scenario"]) if cfg["scenario"] else None
    volume = scenario.volume if scenario else VolumeSpec()
    grid = mx.predict_grid(model, volume, cfg["resolution"], mac)
    prov = provenance(cfg, "export-map")
    grid.provenance["run"] = prov
    fmt = cfg["format"] or "csv"
    if cfg["slice"]:
        text = _commented(mx.slice_tsv(grid, _parse_slice(cfg["slice"])), prov)
    else:
        text = mx.export_grid(grid, fmt)
    _emit(text, cfg["out"])
    if cfg["out"] and fmt == "csv" and not cfg["slice"]:
        _sidecar(cfg["out"], {**prov, "model": grid.provenance})


def run_reproduce(cfg) -> dict:
    """Simulate, preprocess, tune, train every family, evaluate, export a map.

    Returns the in-memory artifacts; file writing is left to the caller.
    """
    stage = "simulate"
    try:
        scenario, ds, log = _simulate(cfg)
        stage = "preprocess"
        prep = prepare(ds, cfg)
        tr, te = prep["fm_train"], prep["fm_test"]
        cv = ev.CvConfig(cfg["folds"], cfg["seed"])
        stage = "grid-search"
        base_grid = ev.grid_search(_grid_spec(cfg, "knn", scales=False), tr, cv)
        full_grid = ev.grid_search(_grid_spec(cfg, "knn"), tr, cv)
        stage = "train"
        tuned = full_grid.best
        models = [
            ("global_mean", rg.RegressorSpec("global_mean")),
            ("per_mac_mean", rg.RegressorSpec("per_mac_mean")),
            ("knn", rg.RegressorSpec("knn", knn=rg.KnnParams(**base_grid.best))),
            ("knn_mac_scaled", rg.RegressorSpec("knn", knn=rg.KnnParams(**tuned))),
            ("per_mac_knn", rg.RegressorSpec("per_mac_knn", knn=rg.KnnParams(
                k=tuned["k"], weighting=tuned["weighting"]))),
            ("mlp", _regressor_spec(cfg, "mlp")),
        ]
        fitted = [(name, rg.fit(spec, tr)) for name, spec in models]
        stage = "evaluate"
        reports = [ev.evaluate(model, te, name) for name, model in fitted]
        stage = "export-map"
        counts = {}
        for mac in tr.macs:
            counts[mac] = counts.get(mac, 0) + 1
        map_mac = min(counts, key=lambda m: (-counts[m], m))
        best_model = dict(fitted)["knn_mac_scaled"]
        grid = mx.predict_grid(best_model, scenario.volume, cfg["resolution"], map_mac)
    except Exception as exc:
        raise StageError(stage, exc) from exc
    prov = provenance(cfg, "reproduce")
    grid.provenance["run"] = prov
    return {"dataset": ds, "log": log, "prep": prep, "base_grid": base_grid,
            "full_grid": full_grid, "reports": reports, "grid": grid,
            "provenance": prov}


def cmd_reproduce(cfg):
    res = run_reproduce(cfg)
    out = Path(_require(cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    prov = res["provenance"]
    ing.write_samples(res["dataset"], out / "samples.csv")
    _sidecar(out / "samples.csv", prov)
    stats = ing.compute_stats(res["dataset"])
    (out / "stats.json").write_text(_dump({"stats": stats.to_dict(),
                                           "dropped": res["prep"]["dropped"],
                                           "train": len(res["prep"]["fm_train"]),
                                           "test": len(res["prep"]["fm_test"]),
                                           "provenance": prov}), encoding="utf-8")
    (out / "grid_search.json").write_text(_dump({
        "knn": res["base_grid"].to_dict(), "knn_mac_scaled": res["full_grid"].to_dict(),
        "provenance": prov}), encoding="utf-8")
    reports = res["reports"]
    (out / "comparison.txt").write_text(_commented(ev.format_comparison(reports), prov),
                                        encoding="utf-8")
    (out / "comparison.tsv").write_text(_commented(ev.comparison_tsv(reports), prov),
                                        encoding="utf-8")
    (out / "comparison.json").write_text(_dump({"reports": [r.to_dict() for r in reports],
                                                "provenance": prov}), encoding="utf-8")
    (out / "rem.json").write_text(mx.export_grid(res["grid"], "json"), encoding="utf-8")
    sys.stdout.write(ev.format_comparison(reports))


COMMANDS = {
    "ingest": cmd_ingest, "stats": cmd_stats, "preprocess": cmd_preprocess,
    "train": cmd_train, "evaluate": cmd_evaluate, "grid-search": cmd_grid_search,
    "plan": cmd_plan, "simulate": cmd_simulate, "export-map": cmd_export_map,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dronerem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dronerem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file with a [dronerem] section")
        for opt, (typ, _) in OPTIONS.items():
            flag = "--" + opt.replace("_", "-")
            if typ is _bool:
                p.add_argument(flag, dest=opt, action="store_const", const=True, default=None)
                p.add_argument("--no-" + opt.replace("_", "-"), dest=opt,
                               action="store_const", const=False)
            else:
                p.add_argument(flag, dest=opt, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except StageError as exc:
        sys.stderr.write(json.dumps({"error": type(exc.cause).__name__, "stage": exc.stage,
                                     "message": str(exc)}) + "\n")
        return 1
    except Exception as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "stage": args.command,
                                     "message": str(exc)}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
