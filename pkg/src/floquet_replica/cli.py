"""Command-line front end: bands, invariant, edge, evolve, average and accept."""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import averaging as avg
from . import evolution as evo
from .acceptance import CRITERIA, run_acceptance
from .invariants import invariant_report
from .linalg import NumericalFailure
from .parallel import set_default_threads
from .replica import EffectiveModel, ReplicaModel, band_structure, line_cut
from .ribbon import MassProfile, RibbonModel, conductivities, seeded_interface_perturbation

OUT_ENV = "FLOQUET_REPLICA_OUT"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4

DEFAULTS: dict = {
    "seed": 20240917,
    "bands": {"n": 2, "m": 1.0, "eps": 0.1, "effective": False,
              "grid": {"kind": "line", "xi_min": -3.0, "xi_max": 3.0, "count": 601, "xi2": 0.0}},
    "invariant": {"n": 1, "m0": 1.0, "eps": 0.08, "effective": None, "r_max": None, "angles": None,
                  "order": 12, "rel_tol": 1e-3},
    "edge": {"n": 0, "eps": 0.3, "m0": 1.0, "shape": "tanh", "w": 1.0, "L": 60.0, "N_y": 96,
             "effective": None, "e_win": None, "xi_max": None, "h0": 0.05, "perturb": False},
    "evolve": {"m": 1.0, "eps": [0.02, 0.04, 0.08], "taus": [1.0], "n": [0, 1, 2, 3],
               "xi_count": 40, "xi_radius": 3.0, "tol": 1e-13,
               "corrector": {"eps": [0.01, 0.02, 0.04, 0.08], "beta": 0.5, "c0": 1.0, "tau": float(np.pi)},
               "long_time": {"eps": 0.05, "n": 1}},
    "average": {"a": 0.5, "b": 1.0, "amplitude": 1.0, "L": float(4 * np.pi), "N_y": 64, "xi_x": 0.3,
                "eps": [0.02, 0.04, 0.08], "t_final": 1.0, "quad_points": 1024,
                "ribbon": {"L": 30.0, "N_y": 64, "w": 1.0}},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{path}{key}"
        if key not in out:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"'{where}' must be a mapping")
            out[key] = _merge(out[key], value, where + ".")
        else:
            out[key] = value
    return out


def _assign(config: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got '{item}'")
    key, raw = item.split("=", 1)
    parts = key.strip().split(".")
    node = config
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"unknown config key '{key}'")
        node = node[p]
    if parts[-1] not in node or isinstance(node[parts[-1]], dict):
        raise ConfigError(f"unknown config key '{key}'")
    node[parts[-1]] = yaml.safe_load(raw)


def load_config(path: str | None, overrides: list[str]) -> dict:
    config = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config root must be a mapping")
        config = _merge(config, loaded)
    for item in overrides:
        _assign(config, item)
    return config


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": _jsonable(obj.real.tolist()), "im": _jsonable(obj.imag.tolist())}
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def write_json(path: Path, payload: dict, config: dict, started: float) -> None:
    body = dict(payload)
    body["config_echo"] = config
    body["code_version"] = __version__
    body["wall_time"] = time.perf_counter() - started
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".17g")
        return str(v)

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _grid(spec: dict) -> np.ndarray:
    if spec["kind"] == "line":
        return line_cut(spec["xi_min"], spec["xi_max"], int(spec["count"]), spec["xi2"])
    if spec["kind"] == "plane":
        xs = np.linspace(spec["xi_min"], spec["xi_max"], int(spec["count"]))
        g1, g2 = np.meshgrid(xs, xs, indexing="ij")
        return np.column_stack([g1.ravel(), g2.ravel()])
    raise ConfigError("bands.grid.kind must be 'line' or 'plane'")


def cmd_bands(config: dict, out: Path, threads, started: float) -> int:
    c = config["bands"]
    model = EffectiveModel(c["m"], c["eps"]) if c["effective"] else ReplicaModel(c["n"], c["m"], c["eps"])
    bands = band_structure(model, _grid(c["grid"]), threads=threads)
    dim = bands.sheets.shape[1]
    write_csv(
        out / "bands.csv",
        ["xi1", "xi2"] + [f"E_{k + 1}" for k in range(dim)],
        (list(p) + list(e) for p, e in zip(bands.grid, bands.sheets)),
    )
    return EXIT_OK


def cmd_invariant(config: dict, out: Path, threads, started: float) -> int:
    c = config["invariant"]
    quad = {k: c[k] for k in ("r_max", "angles", "order", "rel_tol") if c[k] is not None}
    rep = invariant_report(c["n"], c["m0"], c["eps"], c["effective"], threads=threads, **quad)
    payload = {
        "n": c["n"], "eps": c["eps"], "m0": c["m0"],
        "W_plus": rep.W_plus, "W_minus": rep.W_minus, "W_diff": rep.W_diff,
        "rings": rep.ring_contributions, "outer": rep.outer_contribution,
        "error_estimate": rep.quadrature_error_estimate,
    }
    write_json(out / "invariant.json", payload, config, started)
    return EXIT_OK


def cmd_edge(config: dict, out: Path, threads, started: float) -> int:
    c = config["edge"]
    effective = c["n"] == 0 if c["effective"] is None else c["effective"]
    profile = MassProfile(shape=c["shape"], m0=c["m0"], w=c["w"])
    potential = seeded_interface_perturbation(c["eps"], c["w"], config["seed"]) if c["perturb"] else None
    model = RibbonModel(c["n"], c["eps"], profile, L=c["L"], N_y=c["N_y"], effective=effective,
                        potential=potential)
    counts, spec = conductivities(model, c["e_win"], c["xi_max"], c["h0"])
    write_csv(out / "edge.csv", ["xi_x", "E", "interface_id", "localization"], spec.retained())
    payload = {"two_pi_sigma": counts, "net": sum(counts.values()), "e_win": spec.e_win,
               "grid_points": len(spec.xi)}
    write_json(out / "sigma.json", payload, config, started)
    return EXIT_OK


def cmd_evolve(config: dict, out: Path, threads, started: float) -> int:
    c = config["evolve"]
    xi_set = evo.default_xi_set(c["xi_count"], c["xi_radius"])
    rows = evo.truncation_sweep(c["m"], c["eps"], c["taus"], c["n"], xi_set, c["tol"], threads)
    write_csv(out / "evolve_sweep.csv", ["eps", "n", "tau", "error", "bound"],
              ((r.eps, r.n, r.tau, r.error, r.bound) for r in rows))
    cc = c["corrector"]
    sc = evo.corrector_scaling(c["m"], cc["eps"], cc["beta"], cc["c0"], cc["tau"])
    lt = evo.long_time_check(c["m"], c["long_time"]["eps"], c["long_time"]["n"], xi_set=xi_set)
    payload = {
        "truncation_slopes": [{"n": n, "tau": t, "slope": s} for (n, t), s in evo.sweep_slopes(rows).items()],
        "bound_respected": all(r.pointwise_ok for r in rows),
        "corrector": asdict(sc),
        "long_time": asdict(lt),
    }
    write_json(out / "slopes.json", payload, config, started)
    return EXIT_OK


def cmd_average(config: dict, out: Path, threads, started: float) -> int:
    c = config["average"]
    model = avg.AveragingModel.default(c["amplitude"], c["L"], c["N_y"], c["xi_x"], c["a"], c["b"])
    model.drive.validate()
    data = avg.effective_data(model.drive, c["quad_points"])
    errs = avg.averaging_error(model, c["eps"], c["t_final"], quad_points=c["quad_points"])
    write_csv(out / "averaging.csv", ["eps", "t_final", "error"], ((e, c["t_final"], r) for e, r in zip(c["eps"], errs)))
    payload = {
        "Y": data.Y, "M": data.M, "h_y": data.h_y, "mass_coefficient": data.mass_coefficient,
        "B_avg": data.B_avg, "det_B": data.det_B, "degenerate": data.degenerate,
        "error_slope": evo.fit_slope(c["eps"], errs) if len(c["eps"]) > 1 else None,
    }
    if not data.degenerate:
        r = c["ribbon"]
        strip = avg.EffectiveStrip(data, MassProfile(w=r["w"]), L=r["L"], N_y=r["N_y"])
        flow, _ = conductivities(strip, xi_max=0.5)
        payload["sigma_sign"] = avg.effective_conductivity_sign(data, 1.0)
        payload["ribbon_flow"] = flow
    write_json(out / "effective.json", payload, config, started)
    return EXIT_OK


def cmd_accept(config: dict, out: Path, threads, started: float, only=None) -> int:
    results = run_acceptance(only, threads=threads, echo=print)
    passed = all(r.passed for r in results)
    payload = {"all_passed": passed, "criteria": [asdict(r) for r in results]}
    write_json(out / "acceptance_report.json", payload, config, started)
    return EXIT_OK if passed else EXIT_ACCEPTANCE


COMMANDS = {
    "bands": cmd_bands,
    "invariant": cmd_invariant,
    "edge": cmd_edge,
    "evolve": cmd_evolve,
    "average": cmd_average,
    "accept": cmd_accept,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floquet-replica", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value (dotted key, YAML value)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--out", default=None, help=f"output directory (default: ${OUT_ENV} or .)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "accept":
            p.add_argument("--only", type=int, action="append", choices=sorted(CRITERIA),
                           help="run only this criterion (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    started = time.perf_counter()
    try:
        config = load_config(args.config, args.set)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        set_default_threads(args.threads)
        out = Path(args.out or os.environ.get(OUT_ENV) or ".")
        out.mkdir(parents=True, exist_ok=True)
        fn = COMMANDS[args.command]
        if args.command == "accept":
            return fn(config, out, args.threads, started, only=args.only)
        return fn(config, out, args.threads, started)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
