"""Batch experiment runner.

Ingests JSON configuration files, dispatches the computational modules, and
emits reproducible JSON or CSV reports.  Every report embeds the resolved
parameter set and the tool version so any run can be replayed; outputs are
written atomically (temp file + rename) and floats are rounded to 12
significant digits in both formats, so a JSON and a CSV report of the same
run carry identical values.

Exit codes: 0 success, 1 a theorem check exceeded its tolerance, 2 input
error, 3 numerical/geometric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .asymptotics import (RadiusGrid, kp_threshold, laurent_fit,
                          reference_mean_width, verify_capoyleas_pach,
                          verify_csikos, verify_lift_identity,
                          verify_ww_proposition)
from .ball_volumes import BallSystem, mc_ball_volume
from .configurations import (PointConfiguration, load_configuration,
                             random_expansion, save_configuration)
from .errors import GeometryError, InputError, KpvError, NumericalError
from .meanwidth import calibrate, mean_width_edge_sum_3d, mean_width_exact_2d, \
    mean_width_quadrature
from .truncated_volume import FitWindow

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


@dataclass
class ExperimentSpec:
    """One resolved experiment: command, input files, scalar parameters."""

    command: str
    inputs: list[str] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    output: str | None = None
    fmt: str = "json"


def _round12(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round12(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _round12(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _flatten(prefix: str, obj, rows: list):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, obj))


def _write_report(report: dict, path: str | None, fmt: str):
    report = _round12(report)
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        rows: list = []
        _flatten("", report, rows)
        lines = ["key,value"]
        for key, val in rows:
            sval = json.dumps(val) if isinstance(val, str) else str(val)
            lines.append(f"{key},{sval}")
        text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".kpv-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_configs(spec: ExperimentSpec, expected: int) -> list[PointConfiguration]:
    if len(spec.inputs) != expected:
        raise InputError(
            f"command {spec.command!r} needs {expected} --config file(s), "
            f"got {len(spec.inputs)}")
    return [load_configuration(path) for path in spec.inputs]


def _radii(spec: ExperimentSpec, default_scale: float) -> list[float]:
    params = spec.parameters
    if params.get("r") is not None:
        return [float(v) for v in np.atleast_1d(params["r"])]
    if params.get("r_grid") is not None:
        lo, hi, count = params["r_grid"]
        return [float(v) for v in np.geomspace(lo, hi, int(count))]
    return [default_scale]


def _parse_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, count = text.split(":")
        return float(lo), float(hi), int(count)
    except ValueError as exc:
        raise InputError(f"bad grid spec {text!r}, expected MIN:MAX:COUNT") from exc


# ---------------------------------------------------------------------------
# command implementations (each returns (results dict, exit code))
# ---------------------------------------------------------------------------

def _cmd_meanwidth(spec: ExperimentSpec):
    (config,) = _load_configs(spec, 1)
    params = spec.parameters
    method = params.get("method") or "auto"
    nodes = int(params.get("nodes") or 100_000)
    seed = int(params.get("seed") or 0)
    params.update(method=method, nodes=nodes, seed=seed)
    if method == "auto":
        value, err, used = reference_mean_width(config, nodes=nodes, seed=seed)
        res = {"value": value, "stderr": err, "method": used, "nodes_used": nodes}
    elif method == "exact2d":
        r = mean_width_exact_2d(config)
        res = {"value": r.value, "stderr": r.stderr, "method": r.method,
               "nodes_used": r.nodes_used}
    elif method == "quadrature":
        r = mean_width_quadrature(config, nodes=nodes, seed=seed)
        res = {"value": r.value, "stderr": r.stderr, "method": r.method,
               "nodes_used": r.nodes_used}
    elif method in ("edge_sum", "edge_sum_3d"):
        r = mean_width_edge_sum_3d(config, calibrate(3, 3))
        res = {"value": r.value, "stderr": r.stderr, "method": r.method,
               "nodes_used": r.nodes_used}
    else:
        raise InputError(f"unknown mean-width method {method!r}")
    return res, EXIT_OK


def _cmd_volume(spec: ExperimentSpec):
    (config,) = _load_configs(spec, 1)
    params = spec.parameters
    method = params.get("method") or "voronoi_ode"
    radii = _radii(spec, max(1.0, config.diameter))
    params["method"] = method
    out = {"method": method, "radii": radii, "volumes": []}
    if method == "voronoi_ode":
        system = BallSystem(config, r_max=max(radii) * (1 + 1e-9))
        for r in radii:
            out["volumes"].append({
                "r": r,
                "union": system.union_volume(r),
                "intersection": system.intersection_volume(r)})
    elif method == "monte_carlo":
        samples = int(params.get("samples") or 1_000_000)
        seed = int(params.get("seed") or 0)
        params.update(samples=samples, seed=seed)
        for k, r in enumerate(radii):
            u, su = mc_ball_volume(config, r, "union", samples, seed + k)
            i, si = mc_ball_volume(config, r, "intersection", samples, seed + k)
            out["volumes"].append({
                "r": r, "union": u, "union_stderr": su,
                "intersection": i, "intersection_stderr": si})
    else:
        raise InputError(f"unknown volume method {method!r}")
    return out, EXIT_OK


def _cmd_boundary(spec: ExperimentSpec):
    (config,) = _load_configs(spec, 1)
    radii = _radii(spec, max(1.0, config.diameter))
    system = BallSystem(config, r_max=max(radii) * (1 + 1e-9))
    rows = []
    for r in radii:
        rows.append({"r": r,
                     "union_boundary": system.union_boundary(r),
                     "intersection_boundary": system.intersection_boundary(r)})
    return {"boundaries": rows}, EXIT_OK


def _cmd_asymptotics(spec: ExperimentSpec):
    (config,) = _load_configs(spec, 1)
    params = spec.parameters
    n = config.dimension
    terms = int(params.get("terms") or min(4, n + 1))
    scale = max(config.diameter, 1e-2)
    if params.get("window") is not None:
        lo, hi, count = params["window"]
        window = FitWindow(r_min=lo, r_max=hi, count=int(count))
    else:
        probe = BallSystem(config, r_max=2.0 * scale)
        bp = float(probe.breakpoints[-1]) if probe.breakpoints.size else 0.0
        R = 10.0 * max(bp, scale)
        window = FitWindow(r_min=R, r_max=100.0 * R)
    system = BallSystem(config, r_max=window.r_max * (1 + 1e-6))
    res = {"window": [window.r_min, window.r_max, window.count], "terms": terms}
    for name, fn in (("union", system.union_volume),
                     ("intersection", system.intersection_volume)):
        fit = laurent_fit(fn, n, terms, window)
        res[name] = {"powers": list(fit.powers),
                     "coefficients": fit.coefficients.tolist(),
                     "residual_norm": fit.residual_norm,
                     "condition_estimate": fit.condition_estimate}
    return res, EXIT_OK


def _cmd_verify(spec: ExperimentSpec):
    (config,) = _load_configs(spec, 1)
    params = spec.parameters
    claim = params.get("claim") or "all"
    seed = int(params.get("seed") or 0)
    samples = int(params.get("samples") or 2_000_000)
    params.update(claim=claim, seed=seed, samples=samples)
    reports = []
    if claim in ("capoyleas-pach", "all"):
        reports.append(verify_capoyleas_pach(config))
    if claim in ("csikos", "all"):
        reports.extend(verify_csikos(config))
    if claim in ("ww", "all"):
        reports.append(verify_ww_proposition(config))
    if claim in ("lift", "all"):
        scale = max(1.0, config.diameter)
        radii = params.get("r") or [2.0 * scale, 5.0 * scale]
        reports.extend(verify_lift_identity(config, radii, samples=samples, seed=seed))
    if not reports:
        raise InputError(f"unknown claim {claim!r}")
    tol_override = params.get("tol")
    records = []
    all_pass = True
    for rep in reports:
        rec = rep.to_dict()
        if tol_override is not None:
            rec["tolerance"] = float(tol_override)
            rec["pass"] = rec["gap"] <= float(tol_override)
        records.append(rec)
        all_pass &= bool(rec["pass"])
    return {"checks": records, "all_pass": all_pass}, (
        EXIT_OK if all_pass else EXIT_VERIFY_FAILED)


def _cmd_threshold(spec: ExperimentSpec):
    p, q = _load_configs(spec, 2)
    params = spec.parameters
    diam = max(p.diameter, q.diameter, 1e-2)
    if params.get("r_grid") is not None:
        lo, hi, count = params["r_grid"]
        grid = RadiusGrid(lo, hi, int(count))
    else:
        grid = RadiusGrid(diam, 1000.0 * diam, 24)
    result = kp_threshold(p, q, grid)
    return result.to_dict(), EXIT_OK


def _cmd_generate(spec: ExperimentSpec):
    (config,) = _load_configs(spec, 1)
    params = spec.parameters
    seed = int(params["seed"]) if params.get("seed") is not None else 0
    magnitude = (float(params["magnitude"])
                 if params.get("magnitude") is not None else 0.1)
    params.update(seed=seed, magnitude=magnitude)
    out = spec.output
    if out is None:
        raise InputError("generate needs --out PREFIX for the pair files")
    expanded = random_expansion(config, seed=seed, magnitude=magnitude)
    meta = {"seed": seed, "magnitude": magnitude, "tool": f"kpv {__version__}"}
    p_path, q_path = f"{out}_p.json", f"{out}_q.json"
    save_configuration(config, p_path, metadata={**meta, "role": "base"})
    save_configuration(expanded, q_path, metadata={**meta, "role": "expansion"})
    return {"p_file": p_path, "q_file": q_path, "seed": seed,
            "magnitude": magnitude}, EXIT_OK


_COMMANDS = {
    "meanwidth": _cmd_meanwidth,
    "volume": _cmd_volume,
    "boundary": _cmd_boundary,
    "asymptotics": _cmd_asymptotics,
    "verify": _cmd_verify,
    "threshold": _cmd_threshold,
    "generate": _cmd_generate,
}


def run(spec: ExperimentSpec) -> int:
    """Execute one experiment spec and write its report.

    Reports are only written when the computation itself succeeds (a failed
    theorem check still writes a report and returns 1).
    """
    if spec.command not in _COMMANDS:
        raise InputError(f"unknown command {spec.command!r}")
    results, code = _COMMANDS[spec.command](spec)
    report = {
        "tool": "kpv",
        "version": __version__,
        "command": spec.command,
        "parameters": {"inputs": list(spec.inputs), **{
            k: v for k, v in spec.parameters.items() if v is not None}},
        "results": results,
    }
    _write_report(report, spec.output if spec.command != "generate" else None,
                  spec.fmt)
    return code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpv",
        description="Ball-volume laboratory: volumes, mean widths, asymptotics, "
                    "and large-radius rearrangement inequalities.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("claim", nargs="?", default=None,
                        help="verify sub-claim: capoyleas-pach | csikos | ww | lift | all")
    parser.add_argument("--config", action="append", default=[],
                        help="input configuration file (repeatable)")
    parser.add_argument("--r", action="append", type=float, default=None)
    parser.add_argument("--r-grid", dest="r_grid", type=_parse_grid, default=None,
                        metavar="MIN:MAX:COUNT")
    parser.add_argument("--method", default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--nodes", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--magnitude", type=float, default=None)
    parser.add_argument("--terms", type=int, default=None)
    parser.add_argument("--window", type=_parse_grid, default=None,
                        metavar="MIN:MAX:COUNT")
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", dest="fmt", choices=("json", "csv"),
                        default="json")
    return parser


def spec_from_argv(argv) -> ExperimentSpec:
    args = _build_parser().parse_args(argv)
    parameters = {
        "claim": args.claim, "r": args.r, "r_grid": args.r_grid,
        "method": args.method, "samples": args.samples, "nodes": args.nodes,
        "seed": args.seed, "magnitude": args.magnitude, "terms": args.terms,
        "window": args.window, "tol": args.tol,
    }
    return ExperimentSpec(command=args.command, inputs=list(args.config),
                          parameters=parameters, output=args.out, fmt=args.fmt)


def main(argv=None) -> int:
    try:
        spec = spec_from_argv(sys.argv[1:] if argv is None else argv)
        return run(spec)
    except InputError as exc:
        print(f"kpv: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GeometryError, NumericalError) as exc:
        print(f"kpv: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KpvError as exc:
        print(f"kpv: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
