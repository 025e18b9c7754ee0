"""Batch front end: config-driven sweeps with CSV/JSON artifacts.

Subcommands `scatter`, `field`, `spectrum`, `conjecture`, `selftest`
read a JSON config, run the corresponding computation and write CSV
tables plus a JSON summary.  Every output embeds the sha256 hash of the
canonicalized config for provenance.  Exit codes: 0 success, 1 invalid
config, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bie import assemble_theta
from .comparison1d import conjecture_test, write_conjecture_csv
from .geometry import build_geometry
from .greens import EnergySpec, ThresholdError, kernel_check
from .scattering import (amplitudes, asymptote_residual, field_map,
                         amplitudes_from_field, mesh_for, write_field_csv,
                         write_sweep_csv)
from .spectrum import find_bound_states, write_scan_csv, write_summary_json

DEFAULTS = {
    "mesh": {"n_nodes": 400, "nodes_per_panel": 6},
    "scatter": {"lambda_count": 9},
    "field": {"extent_factor": 30.0, "points_x1": 121, "points_x2": 5,
              "height": 1.0},
    "spectrum": {"resolution_divisor": 4000.0},
    "conjecture": {"k": 1.0, "alphas": [5.0, 10.0, 20.0, 40.0]},
    "selftest": {"kernel_tolerances": {"line_kernel_vs_k0": 1e-8,
                                       "reduced_vs_bruteforce": 1e-6,
                                       "onshell_vs_limit": 1e-4,
                                       "farfield": 1e-8,
                                       "cache_scattering": 1e-6,
                                       "cache_bound": 1e-6}},
}


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    return cfg


def _require(cfg: dict, field: str):
    if field not in cfg:
        raise ConfigError(f"missing required config field: {field!r}")
    return cfg[field]


def _geometry(cfg: dict):
    gspec = _require(cfg, "geometry")
    if isinstance(gspec, dict) and "file" in gspec:
        gspec = _load_config(gspec["file"])
    try:
        return build_geometry(gspec)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid geometry: {exc}") from exc


def _alpha(cfg: dict) -> float:
    alpha = _require(cfg, "alpha")
    if not isinstance(alpha, (int, float)) or alpha <= 0:
        raise ConfigError("field 'alpha' must be a positive number")
    return float(alpha)


def _mesh_params(cfg: dict) -> dict:
    out = dict(DEFAULTS["mesh"])
    out.update(cfg.get("mesh", {}))
    if out["n_nodes"] < 10:
        raise ConfigError("mesh.n_nodes too small")
    return out


def _lambda_values(cfg: dict, alpha: float) -> list:
    block = _require(cfg, "lambda")
    if isinstance(block, dict) and "values" in block:
        vals = [float(v) for v in block["values"]]
    elif isinstance(block, dict):
        lo = float(_require(block, "min"))
        hi = float(_require(block, "max"))
        count = int(block.get("count", DEFAULTS["scatter"]["lambda_count"]))
        if count < 1:
            raise ConfigError("lambda.count must be positive")
        vals = list(np.linspace(lo, hi, count))
    else:
        vals = [float(block)]
    thr = -alpha ** 2 / 4
    for v in vals:
        if not thr < v < 0:
            raise ConfigError(
                f"lambda value {v} outside the scattering window ({thr}, 0)")
    return vals


def _sweep_point(args):
    gspec, alpha, lam, n_nodes = args
    geom = build_geometry(gspec)
    amps = amplitudes(geom, EnergySpec(alpha, lam), n_nodes=n_nodes)
    return amps.csv_row()


def _run_scatter(cfg: dict, out: Path, jobs: int) -> dict:
    geom = _geometry(cfg)
    alpha = _alpha(cfg)
    mesh = _mesh_params(cfg)
    lams = _lambda_values(cfg, alpha)
    gspec = cfg["geometry"]
    work = [(gspec, alpha, lam, mesh["n_nodes"]) for lam in sorted(lams)]
    if jobs > 1 and not geom.is_trivial:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, work))
    else:
        rows = [_sweep_point(w) for w in work]
    path = out / "scatter.csv"
    write_sweep_csv(path, rows, header_lines=_provenance(cfg))
    defects = [r[8] for r in rows]
    return {"rows": len(rows), "max_defect": max(defects),
            "csv": path.name}


def _run_field(cfg: dict, out: Path, jobs: int) -> dict:
    geom = _geometry(cfg)
    alpha = _alpha(cfg)
    mesh = _mesh_params(cfg)
    fcfg = dict(DEFAULTS["field"])
    fcfg.update(cfg.get("field", {}))
    lam = _lambda_values(cfg, alpha)[0]
    energy = EnergySpec(alpha, lam)
    if geom.is_trivial:
        extent = fcfg["extent_factor"] / alpha + 1.0
    else:
        box = geom.bounding_box
        extent = fcfg["extent_factor"] / alpha + max(abs(box[0]), abs(box[1])) + 0.5
    x1 = np.linspace(-extent, extent, int(fcfg["points_x1"]))
    x2 = np.linspace(-fcfg["height"], fcfg["height"], int(fcfg["points_x2"]))
    amps = None
    system = None
    if not geom.is_trivial:
        system = assemble_theta(mesh_for(geom, mesh["n_nodes"]), energy)
        amps = amplitudes(geom, energy, system=system)
    fm = field_map(geom, energy, x1, x2, system=system,
                   n_nodes=mesh["n_nodes"])
    path = out / "field.csv"
    write_field_csv(path, fm, header_lines=_provenance(cfg))
    summary = {"lambda": lam, "grid": [len(x1), len(x2)], "csv": path.name,
               "skipped_points": int(fm.skipped.sum())}
    if amps is not None:
        Tf, Rf = amplitudes_from_field(fm)
        summary.update({
            "T": [amps.T.real, amps.T.imag], "R": [amps.R.real, amps.R.imag],
            "asymptote_residual": asymptote_residual(fm, amps),
            "field_extracted_T": [Tf.real, Tf.imag],
            "field_extracted_R": [Rf.real, Rf.imag]})
    return summary


def _run_spectrum(cfg: dict, out: Path, jobs: int) -> dict:
    geom = _geometry(cfg)
    alpha = _alpha(cfg)
    mesh = _mesh_params(cfg)
    block = _require(cfg, "scan")
    lo, hi = float(_require(block, "min")), float(_require(block, "max"))
    thr = -alpha ** 2 / 4
    if not lo < hi <= thr:
        raise ConfigError("scan range must lie below the threshold "
                          f"-alpha^2/4 = {thr}")
    resolution = block.get("resolution")
    scan = find_bound_states(geom, alpha, (lo, hi),
                             resolution=None if resolution is None
                             else float(resolution),
                             n_nodes=mesh["n_nodes"])
    write_scan_csv(out / "spectrum_scan.csv", scan,
                   header_lines=_provenance(cfg))
    write_summary_json(out / "spectrum.json", scan,
                       extra={"config_hash": _config_hash(cfg),
                              "version": __version__})
    return {"bound_states": [s.lambda_star for s in scan.states],
            "csv": "spectrum_scan.csv", "json": "spectrum.json"}


def _run_conjecture(cfg: dict, out: Path, jobs: int) -> dict:
    geom = _geometry(cfg)
    block = dict(DEFAULTS["conjecture"])
    block.update(cfg.get("conjecture", {}))
    k = float(block["k"])
    alphas = [float(a) for a in block["alphas"]]
    if any(not 0 < k < a / 2 for a in alphas):
        raise ConfigError("conjecture requires 0 < k < alpha/2 for every alpha")
    mesh = _mesh_params(cfg)
    report = conjecture_test(geom, k, alphas, n_nodes=mesh["n_nodes"])
    path = out / "conjecture.csv"
    write_conjecture_csv(path, report, header_lines=_provenance(cfg))
    return {"k": k, "alphas": alphas,
            "disc_phasemin": report.discrepancies, "csv": path.name}


def _run_selftest(cfg: dict, out: Path, jobs: int) -> dict:
    tols = dict(DEFAULTS["selftest"]["kernel_tolerances"])
    tols.update(cfg.get("kernel_tolerances", {}))
    report = {k: float(v) for k, v in kernel_check().items()}
    passed = {k: report[k] <= tols.get(k, np.inf) for k in report}
    payload = {"version": __version__, "config_hash": _config_hash(cfg),
               "errors": report, "tolerances": tols, "passed": passed,
               "all_passed": all(passed.values())}
    with open(out / "selftest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not payload["all_passed"]:
        raise RuntimeError("kernel self-test exceeded tolerances: " + ", ".join(
            k for k, ok in passed.items() if not ok))
    return payload


_TASKS = {"scatter": _run_scatter, "field": _run_field,
          "spectrum": _run_spectrum, "conjecture": _run_conjecture,
          "selftest": _run_selftest}


def _provenance(cfg: dict) -> list:
    return [f"leakywire {__version__}", f"config_hash {_config_hash(cfg)}"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leakywire",
        description="Leaky-wire scattering and spectrum batch runner.")
    parser.add_argument("--show-defaults", action="store_true",
                        help="print the defaults table as JSON and exit")
    sub = parser.add_subparsers(dest="task")
    for name in _TASKS:
        p = sub.add_parser(name, help=f"run the {name} task")
        p.add_argument("--config", required=(name != "selftest"),
                       help="path to the JSON run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for sweep points")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.show_defaults:
        json.dump(DEFAULTS, sys.stdout, indent=2, sort_keys=True)
        print()
        return 0
    if args.task is None:
        parser.print_help()
        return 1
    try:
        cfg = _load_config(args.config) if args.config else {}
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = _TASKS[args.task](cfg, out, max(1, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ThresholdError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    payload = {"task": args.task, "version": __version__,
               "config_hash": _config_hash(cfg), "summary": summary}
    with open(out / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
