"""Command-line front end: ``nanomag-rc {run,relax,sweep,efficiency}``.

Configs are YAML (JSON is accepted, being a YAML subset) with a strict
schema: unknown keys are errors and ``seed`` is mandatory. Exit codes:

* 0: success
* 2: invalid config or layout (message names the field and line)
* 3: the integration diverged
* 4: relaxation or drive calibration did not converge
"""

from __future__ import annotations

import argparse
import copy
import csv
import dataclasses
import hashlib
import itertools
import json
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import yaml

from . import __version__
from .exceptions import CalibrationError, ConfigurationError, IntegrationDivergedError, LayoutParseError

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_UNCONVERGED = 0, 2, 3, 4

TASKS = ("waveform", "boolean", "eca-observer", "baseline", "efficiency")
DEFAULT_LAYOUT = {"waveform": "waveform", "boolean": "boolean35", "eca-observer": "observer200"}


class ConfigError(ConfigurationError):
    """Config validation failure tied to a dotted field path."""

    def __init__(self, field, message, line=None):
        self.field, self.line = field, line
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{field}: {message}")


# -- schema ---------------------------------------------------------------------
#
# Each leaf is (checker, default). A default of REQUIRED makes the key
# mandatory. Checkers raise ValueError with a short reason.

REQUIRED = object()


def _int(lo=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}, got {v}")
        return v
    return check


def _float(lo=None, strict=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"expected a number, got {v!r}")
        v = float(v)
        if lo is not None and (v <= lo if strict else v < lo):
            raise ValueError(f"must be {'>' if strict else '>='} {lo}, got {v}")
        return v
    return check


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"expected one of {list(options)}, got {v!r}")
        return v
    return check


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true/false, got {v!r}")
    return v


def _str(v):
    if not isinstance(v, str):
        raise ValueError(f"expected a string, got {v!r}")
    return v


def _floats(v):
    if not isinstance(v, list) or not v:
        raise ValueError("expected a non-empty list of numbers")
    return [_float(0.0)(x) for x in v]


POSITIVE = _float(0.0, strict=True)

SCHEMA = {
    "seed": (_int(0), REQUIRED),
    "task": (_choice(*TASKS), REQUIRED),
    "lambda": (_float(0.0), 1e-6),
    "output": (_str, None),
    "layout": {
        "kind": (_choice("waveform", "boolean35", "observer200", "custom"), None),
        "file": (_str, None),
        "jitter_seed": (_int(0), 0),
    },
    "physics": {
        "preset": (_str, "default-pma"),
        "ms": (POSITIVE, None),
        "ku": (_float(0.0), None),
        "input_ku": (_float(0.0), None),
        "diameter": (POSITIVE, None),
        "thickness": (POSITIVE, None),
        "pitch": (POSITIVE, None),
        "alpha": (POSITIVE, None),
        "jitter": (_float(0.0), None),
        "gamma": (POSITIVE, None),
        "dt": (POSITIVE, None),
    },
    "protocol": {
        "symbol_period": (POSITIVE, 1.25e-9),
        "pulse_duration": (POSITIVE, 0.9e-9),
        "pulse_strength": (_float(0.0), 0.2),
        "sample_offset": (POSITIVE, None),
        "polarization_tilt": (_float(0.0), 10.0),
        "calibrate": (_bool, True),
        "strengths": (_floats, None),
        "threshold": (POSITIVE, 0.9),
        "verify_length": (_int(3), 512),
    },
    "dataset": {
        "periods": (_int(2), 60),
        "width": (_int(2), 2),
        "stream_len": (_int(3), 600),
        "rule": (_int(0), 59),
        "cells": (_int(3), 24),
        "stride": (_int(1), 3),
        "steps": (_int(1), 400),
    },
    "baseline": {
        "of": (_choice("waveform", "boolean", "eca-observer"), "boolean"),
        "window": (_int(1), 2),
        "encoding": (_choice("raw", "onehot"), "raw"),
    },
    "efficiency": {
        "nmrc": {k: (POSITIVE, None) for k in ("area_per_node", "energy_per_update", "min_period", "node_count")},
        "cmos": {k: (POSITIVE, None) for k in ("area_per_node", "energy_per_update", "min_period", "node_count")},
    },
    "sweep": (None, None),
}


def _line_map(node, path=(), out=None):
    """Map dotted key paths to 1-based source lines from a composed YAML tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (str(k.value),)
            out[".".join(p)] = k.start_mark.line + 1
            _line_map(v, p, out)
    return out


def _validate(data, schema, lines, prefix=""):
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a mapping", lines.get(prefix.rstrip(".")))
    out = {}
    for key in data:
        if key not in schema:
            raise ConfigError(prefix + str(key), f"unknown key (allowed: {sorted(schema)})",
                              lines.get(prefix + str(key)))
    for key, spec in schema.items():
        path = prefix + key
        if isinstance(spec, dict):
            out[key] = _validate(data.get(key, {}) or {}, spec, lines, path + ".")
            continue
        check, default = spec
        if key not in data or data[key] is None:
            if default is REQUIRED:
                raise ConfigError(path, "is required", lines.get(path))
            out[key] = copy.deepcopy(default)
            continue
        if check is None:
            out[key] = data[key]
            continue
        try:
            out[key] = check(data[key])
        except ValueError as exc:
            raise ConfigError(path, str(exc), lines.get(path)) from None
    return out


SWEEPABLE = {"lambda"} | {f"protocol.{k}" for k in ("symbol_period", "pulse_duration", "pulse_strength",
                                                      "polarization_tilt")} \
    | {f"physics.{k}" for k in SCHEMA["physics"] if k != "preset"} | {"seed"}


def _validate_sweep(sweep, lines):
    if sweep is None:
        return None
    if not isinstance(sweep, dict):
        raise ConfigError("sweep", "expected a mapping of parameter -> list of values", lines.get("sweep"))
    grid = {}
    for key, values in sweep.items():
        path = f"sweep.{key}"
        if key not in SWEEPABLE:
            raise ConfigError(path, f"not a sweepable parameter (allowed: {sorted(SWEEPABLE)})", lines.get(path))
        if not isinstance(values, list) or not values:
            raise ConfigError(path, "expected a non-empty list", lines.get(path))
        grid[key] = values
    return grid


def parse_config(text, source="<config>"):
    """Parse and validate config text; returns a fully defaulted dict."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError("<syntax>", f"{source}: {exc.problem}", line) from None
    lines = _line_map(node) if node is not None else {}
    cfg = _validate(data if data is not None else {}, SCHEMA, lines)
    cfg["sweep"] = _validate_sweep(cfg["sweep"], lines)
    if cfg["layout"]["kind"] == "custom" and not cfg["layout"]["file"]:
        raise ConfigError("layout.file", "required when layout.kind is custom", lines.get("layout.kind"))
    p = cfg["protocol"]
    if p["pulse_duration"] >= p["symbol_period"]:
        raise ConfigError("protocol.pulse_duration", "must be shorter than protocol.symbol_period",
                          lines.get("protocol.pulse_duration"))
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def set_path(cfg, dotted, value):
    cfg = copy.deepcopy(cfg)
    *parents, leaf = dotted.split(".")
    node = cfg
    for p in parents:
        node = node[p]
    node[leaf] = value
    return cfg


# -- building blocks from a config ------------------------------------------------

def _preset(cfg):
    from .reservoir import get_preset

    overrides = {k: v for k, v in cfg["physics"].items() if k != "preset" and v is not None}
    return get_preset(cfg["physics"]["preset"], **overrides)


def _dataset(cfg, task=None):
    from .tasks import EcaConfig, gen_boolean_dataset, gen_eca_observer_dataset, gen_waveform_dataset

    task = task or cfg["task"]
    d, seed = cfg["dataset"], cfg["seed"]
    if task == "waveform":
        return gen_waveform_dataset(d["periods"], seed)
    if task == "boolean":
        try:
            return gen_boolean_dataset(d["width"], d["stream_len"], seed)
        except (ValueError, ConfigurationError) as exc:
            raise ConfigError("dataset.width", str(exc)) from None
    eca = EcaConfig(rule=d["rule"], width=d["cells"], steps=d["steps"], stride=d["stride"], seed=seed)
    return gen_eca_observer_dataset(eca)


def _layout(cfg, preset):
    from .reservoir import build_layout

    kind = cfg["layout"]["kind"] or DEFAULT_LAYOUT[cfg["task"]]
    return build_layout(kind, preset, path=cfg["layout"]["file"], seed=cfg["layout"]["jitter_seed"])


def _protocol(cfg, levels, layout, params, initial):
    from .reservoir import DEFAULT_STRENGTHS, SymbolProtocol, calibrate_drive

    p = cfg["protocol"]
    proto = SymbolProtocol(p["symbol_period"], p["pulse_duration"], p["pulse_strength"], levels,
                           p["sample_offset"], p["polarization_tilt"])
    if not p["calibrate"]:
        return proto
    strengths = p["strengths"] or DEFAULT_STRENGTHS
    return calibrate_drive(layout, proto, params, strengths=strengths, threshold=p["threshold"],
                           initial=initial, verify_length=p["verify_length"], seed=cfg["seed"])


@dataclass
class RunOutcome:
    report: object
    extra: dict


def execute(cfg):
    """Run the configured task in memory. Returns a :class:`RunOutcome`."""
    from .baseline import DelayWindowConfig, Encoding, run_baseline
    from .efficiency import CMOS_DEFAULT, NMRC_DEFAULT, ratio_report
    from .reservoir import reset
    from .tasks import run_task

    task = cfg["task"]
    if task == "efficiency":
        def metrics(base, over):
            kw = {k: v for k, v in over.items() if v is not None}
            if "node_count" in kw:
                kw["node_count"] = int(kw["node_count"])
            return dataclasses.replace(base, **kw)

        nmrc = metrics(NMRC_DEFAULT, cfg["efficiency"]["nmrc"])
        cmos = metrics(CMOS_DEFAULT, cfg["efficiency"]["cmos"])
        return RunOutcome(None, {"ratios": ratio_report(nmrc, cmos), "nmrc": nmrc, "cmos": cmos})
    if task == "baseline":
        b = cfg["baseline"]
        ds = _dataset(cfg, b["of"])
        rep = run_baseline(ds, DelayWindowConfig(b["window"], Encoding(b["encoding"])), cfg["lambda"])
        return RunOutcome(rep, {"dataset": ds})
    preset = _preset(cfg)
    params = preset.llg_params()
    ds = _dataset(cfg)
    layout = _layout(cfg, preset)
    start = reset(layout, params, seed=cfg["seed"])
    proto = _protocol(cfg, ds.levels, layout, params, start.state)
    rep = run_task(ds, layout, proto, params, cfg["lambda"], initial=start.state)
    rep.info["reset_converged"] = start.converged
    rep.info["seed"] = cfg["seed"]
    return RunOutcome(rep, {"dataset": ds, "layout": layout, "initial": start.state})


# -- artifact writing ---------------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def versions():
    import numba
    import numpy
    import scipy
    import sklearn

    return {"nanomag_rc": __version__, "python": platform.python_version(), "numpy": numpy.__version__,
            "scipy": scipy.__version__, "scikit-learn": sklearn.__version__, "numba": numba.__version__}


def write_manifest(out, cfg, files, command):
    manifest = {
        "command": command,
        "config_sha256": config_hash(cfg),
        "seed": cfg.get("seed"),
        "versions": versions(),
        "config": cfg,
        "artifacts": {os.path.basename(f): _sha256(f) for f in sorted(files)},
    }
    path = os.path.join(out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_outcome(outcome, cfg, out):
    from .efficiency import report_lines, write_csv
    from .reservoir import write_layout, write_snapshot
    from .tasks import write_eca_table, write_report

    os.makedirs(out, exist_ok=True)
    files = []
    if cfg["task"] == "efficiency":
        r = outcome.extra["ratios"]
        p = os.path.join(out, "efficiency.txt")
        with open(p, "w") as fh:
            fh.write("\n".join(report_lines(r)) + "\n")
        files.append(p)
        p = os.path.join(out, "efficiency.csv")
        write_csv(r, p, outcome.extra["nmrc"], outcome.extra["cmos"])
        files.append(p)
        return files
    files += list(write_report(outcome.report, out).values())
    ds = outcome.extra["dataset"]
    if "table" in ds.meta:
        files.append(write_eca_table(ds, os.path.join(out, "eca_table.csv")))
    if "layout" in outcome.extra:
        layout = outcome.extra["layout"]
        files.append(write_snapshot(outcome.extra["initial"], layout, os.path.join(out, "snapshot_initial.csv")))
        files.append(write_snapshot(outcome.report.transient.final_state, layout,
                                    os.path.join(out, "snapshot_final.csv")))
        p = os.path.join(out, "layout.txt")
        write_layout(layout, p)
        files.append(p)
    return files


# -- sweep --------------------------------------------------------------------------

def sweep_points(grid):
    if not grid:
        raise ConfigError("sweep", "grid is empty")
    keys = list(grid)
    return keys, [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _point_config(cfg, point):
    c = copy.deepcopy(cfg)
    c["sweep"] = None
    for key, value in point.items():
        c = set_path(c, key, value)
    if "protocol.pulse_strength" in point and c["protocol"]["calibrate"]:
        # verify exactly the swept strength instead of searching for one
        c["protocol"]["strengths"] = [float(point["protocol.pulse_strength"])]
    return c


def _run_point(args):
    cfg, point = args
    try:
        c = _point_config(cfg, point)
        _validate(c, SCHEMA, {})
        out = execute(c)
        if out.report is None:
            return {"status": "ok", "mean_accuracy": "", "pulse_strength": "",
                    "aedp_ratio": repr(out.extra["ratios"].aedp), "error": ""}
        return {"status": "ok", "mean_accuracy": f"{out.report.mean_accuracy:.9g}",
                "pulse_strength": repr(out.report.info.get("pulse_strength", "")), "aedp_ratio": "", "error": ""}
    except CalibrationError as exc:
        return {"status": "calibration-failed", "error": str(exc)}
    except IntegrationDivergedError as exc:
        return {"status": "diverged", "error": str(exc)}
    except (ConfigurationError, ValueError) as exc:
        return {"status": "invalid", "error": str(exc)}


def run_sweep(cfg, threads=1):
    """Evaluate every grid point; rows come back in grid order."""
    keys, points = sweep_points(cfg["sweep"])
    jobs = [(cfg, p) for p in points]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    rows = []
    for p, r in zip(points, results):
        row = {k: p[k] for k in keys}
        row.update({c: r.get(c, "") for c in ("status", "mean_accuracy", "pulse_strength", "aedp_ratio", "error")})
        rows.append(row)
    return keys, rows


def write_sweep(keys, rows, path):
    cols = list(keys) + ["status", "mean_accuracy", "pulse_strength", "aedp_ratio", "error"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return path


# -- relax --------------------------------------------------------------------------

def relax_layout(layout, params, seed=0, max_time=100e-9):
    """Relax from the seeded reset configuration and summarize frustration."""
    from .reservoir import aligned_pairs, reset

    res = reset(layout, params, seed=seed, max_time=max_time)
    aligned, total = aligned_pairs(res.state, layout)
    return res, {"converged": res.converged, "max_torque_per_s": res.max_torque,
                 "aligned_pairs": aligned, "neighbour_pairs": total}


def write_relaxed(res, layout, summary, out):
    from .reservoir import write_snapshot

    os.makedirs(out, exist_ok=True)
    files = []
    p = os.path.join(out, "relaxed.csv")
    with open(p, "w") as fh:
        fh.write("index,x_nm,y_nm,z_nm,m_x,m_y,m_z\n")
        for i, (spec, m) in enumerate(zip(layout.magnets, res.state.magnetizations)):
            vals = list(spec.position) + list(m)
            fh.write(f"{i}," + ",".join(format(float(v), ".9g") for v in vals) + "\n")
    files.append(p)
    files.append(write_snapshot(res.state, layout, os.path.join(out, "snapshot.csv")))
    p = os.path.join(out, "summary.txt")
    with open(p, "w") as fh:
        for k, v in summary.items():
            fh.write(f"{k}: {format(v, '.6g') if isinstance(v, float) else v}\n")
    files.append(p)
    return files


# -- entry point --------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="nanomag-rc", description="Nanomagnet reservoir computing experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        p.add_argument("--config", required=need_config, help="YAML/JSON experiment config")
        p.add_argument("--out", help="output directory (default: config 'output' or ./out)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="parallel sweep workers")

    common(sub.add_parser("run", help="run one configured experiment"))
    common(sub.add_parser("sweep", help="run the config's sweep grid"))
    p = sub.add_parser("relax", help="relax a layout and export the state")
    common(p, need_config=False)
    p.add_argument("--layout", required=True, help="layout file, or a built-in kind name")
    p.add_argument("--max-time", type=float, default=100e-9, help="relaxation budget in seconds")
    common(sub.add_parser("efficiency", help="area-energy-delay comparison"), need_config=False)
    return ap


def _resolve(args, default_task=None):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config(yaml.safe_dump({"seed": 0, "task": default_task}))
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed", "must be >= 0")
        cfg["seed"] = args.seed
    out = args.out or cfg["output"] or "out"
    return cfg, out


def main(argv=None):
    args = _parser().parse_args(argv)
    err = sys.stderr
    try:
        if args.command == "relax":
            from .reservoir import build_layout

            cfg, out = _resolve(args, "efficiency")
            preset = _preset(cfg)
            if os.path.exists(args.layout):
                from .reservoir import read_layout
                layout = read_layout(args.layout)
            else:
                layout = build_layout(args.layout, preset, seed=cfg["layout"]["jitter_seed"])
            if not args.max_time > 0:
                raise ConfigError("--max-time", "must be > 0")
            res, summary = relax_layout(layout, preset.llg_params(), cfg["seed"], args.max_time)
            files = write_relaxed(res, layout, summary, out)
            write_manifest(out, cfg, files, "relax")
            if not res.converged:
                print(f"relaxation did not converge (max torque {res.max_torque:.3g}/s)", file=err)
                return EXIT_UNCONVERGED
            print(f"aligned_pairs: {summary['aligned_pairs']} of {summary['neighbour_pairs']}")
            return EXIT_OK
        if args.command == "efficiency":
            cfg, out = _resolve(args, "efficiency")
            cfg["task"] = "efficiency"
        else:
            cfg, out = _resolve(args)
        if args.command == "sweep":
            keys, rows = run_sweep(cfg, max(1, args.threads))
            os.makedirs(out, exist_ok=True)
            files = [write_sweep(keys, rows, os.path.join(out, "sweep.csv"))]
            write_manifest(out, cfg, files, "sweep")
            print(f"{len(rows)} sweep rows -> {files[0]}")
            return EXIT_OK
        outcome = execute(cfg)
        files = write_outcome(outcome, cfg, out)
        write_manifest(out, cfg, files, args.command)
        if outcome.report is not None:
            print(f"mean_accuracy: {outcome.report.mean_accuracy:.6f}")
        else:
            print(f"aedp_ratio: {outcome.extra['ratios'].aedp:.6g}")
        return EXIT_OK
    except (LayoutParseError, ConfigurationError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_CONFIG
    except IntegrationDivergedError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_DIVERGED
    except CalibrationError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_UNCONVERGED


if __name__ == "__main__":
    sys.exit(main())
