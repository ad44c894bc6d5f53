"""Command-line entry point.

Subcommands::

    liequad simulate --config cfg.json
    liequad example {1,2} [--horizon T]
    liequad analyze traj.csv --report inv,asym,bounds [--verify]
    liequad dual traj.csv --b B

Exit codes: 0 ok, 1 usage or input error, 2 numerical failure, 3 failed
verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import Q_MIN, BracketConvention, angle_lift
from .asymptotics import (
    estimate_alpha,
    nonnull_correction,
    null_bound_series,
    uncorrected_error,
)
from .duality import duality_pipeline
from .dynamics import POLAR_LAYOUT, QuadraticState, polar_jet
from .errors import LieQuadError, NumericalFailure, UndersampledRotation
from .integrate import (
    DEFAULT_DT_OBS,
    SolverSettings,
    Trajectory,
    integrate_quadratic,
    reconstruct_group,
    stereographic_rows,
)
from .invariants import bound_tolerance, check_growth_bounds, drift_report, invariant_series

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3

TRAJ_COLUMNS = ["t", "v1", "v2", "dv1", "dv2", "ddv1", "ddv2", "q", "theta", "c1", "c2"]
GROUP_COLUMNS = ["t", "w", "x", "y", "z", "sx", "sy", "sz"]
POLAR_COLUMNS = ["t", *POLAR_LAYOUT]
OUTPUTS = {"trajectory", "group", "polar", "invariants", "asymptotics", "duality", "bounds"}
CONFIG_FIELDS = {"C", "v0", "dv0", "ddv0", "t_span", "solver", "kappa", "observation_dt",
                 "outputs"}
REQUIRED_FIELDS = {"C", "v0", "dv0", "ddv0", "t_span"}
SOLVER_FIELDS = {"method", "step", "atol", "rtol", "max_steps"}
REPORTS = {"inv": "invariants", "invariants": "invariants", "asym": "asymptotics",
           "asymptotics": "asymptotics", "bounds": "bounds"}

EXAMPLES = {
    1: {"C": 1.0, "v0": [4.0, -1.75], "dv0": [-0.1, 2.5], "ddv0": [-5.0, -5.0]},
    2: {"C": 0.0, "v0": [2.0, -1.0], "dv0": [2.0, -1.0], "ddv0": [0.0, 5.0]},
}


class UsageError(LieQuadError):
    """Malformed configuration, arguments or input file."""


@dataclass
class SimulationConfig:
    C: float
    v0: complex
    dv0: complex
    ddv0: complex
    t_span: tuple
    solver: SolverSettings = field(default_factory=SolverSettings)
    kappa: float = 1.0
    observation_dt: float = DEFAULT_DT_OBS
    outputs: frozenset = frozenset({"trajectory"})


def _number(name, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise UsageError(f"{name} must be a finite number, got {value!r}")
    return float(value)


def _pair(name, value) -> complex:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise UsageError(f"{name} must be a pair of numbers, got {value!r}")
    return complex(_number(f"{name}[0]", value[0]), _number(f"{name}[1]", value[1]))


def parse_config(doc: dict) -> SimulationConfig:
    """Validate a configuration document; unknown or missing fields are errors."""
    if not isinstance(doc, dict):
        raise UsageError("configuration must be a JSON object")
    unknown = set(doc) - CONFIG_FIELDS
    if unknown:
        raise UsageError(f"unknown configuration fields: {sorted(unknown)}")
    missing = REQUIRED_FIELDS - set(doc)
    if missing:
        raise UsageError(f"missing configuration fields: {sorted(missing)}")
    span = doc["t_span"]
    if not isinstance(span, (list, tuple)) or len(span) != 2:
        raise UsageError("t_span must be a pair of numbers")
    t0, t1 = _number("t_span[0]", span[0]), _number("t_span[1]", span[1])
    if t0 == t1:
        raise UsageError("t_span is degenerate")
    solver = doc.get("solver", {})
    if isinstance(solver, str):
        solver = {"method": solver}
    if not isinstance(solver, dict):
        raise UsageError("solver must be an object or a method name")
    bad = set(solver) - SOLVER_FIELDS
    if bad:
        raise UsageError(f"unknown solver fields: {sorted(bad)}")
    try:
        settings = SolverSettings(**solver)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid solver settings: {exc}") from exc
    dt = _number("observation_dt", doc.get("observation_dt", DEFAULT_DT_OBS))
    if dt <= 0:
        raise UsageError("observation_dt must be positive")
    kappa = _number("kappa", doc.get("kappa", 1.0))
    if kappa == 0:
        raise UsageError("kappa must be nonzero")
    outputs = doc.get("outputs", ["trajectory"])
    if not isinstance(outputs, (list, tuple)) or not set(outputs) <= OUTPUTS:
        raise UsageError(f"outputs must be a subset of {sorted(OUTPUTS)}")
    return SimulationConfig(
        C=_number("C", doc["C"]), v0=_pair("v0", doc["v0"]), dv0=_pair("dv0", doc["dv0"]),
        ddv0=_pair("ddv0", doc["ddv0"]), t_span=(t0, t1), solver=settings, kappa=kappa,
        observation_dt=dt, outputs=frozenset(outputs))


# -- file output ---------------------------------------------------------------

def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else "%.17g" % x


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def theta_column(v: np.ndarray) -> np.ndarray:
    """Lifted angle, NaN where ``|v| <= q_min``."""
    out = np.full(v.shape, np.nan)
    ok = np.abs(v) > Q_MIN
    if np.any(ok):
        try:
            out[ok] = angle_lift(v[ok])
        except UndersampledRotation:
            out[ok] = np.unwrap(np.angle(v[ok]))
    return out


def trajectory_csv(traj: Trajectory) -> str:
    v, dv, ddv = traj.complex_arrays()
    ser = invariant_series(traj)
    theta = theta_column(v)
    rows = zip(traj.times, v.real, v.imag, dv.real, dv.imag, ddv.real, ddv.imag, np.abs(v),
               theta, ser["c1"], ser["c2"])
    return _csv_text(TRAJ_COLUMNS, rows)


def group_csv(g) -> str:
    proj = stereographic_rows(g.points)
    rows = (tuple([t, *p, *s]) for t, p, s in zip(g.times, g.points, proj))
    return _csv_text(GROUP_COLUMNS, rows)


def polar_csv(traj: Trajectory) -> str:
    v, dv, ddv = traj.complex_arrays()
    with np.errstate(divide="ignore", invalid="ignore"):
        q, dq, ddq, w, dw = polar_jet(v, dv, ddv)
    theta = theta_column(v)
    bad = np.abs(v) <= Q_MIN
    cols = [np.where(bad, np.nan, c) for c in (q, dq, ddq, theta, w, dw)]
    return _csv_text(POLAR_COLUMNS, zip(traj.times, *cols))


def meta_json(traj: Trajectory) -> str:
    keep = {k: traj.meta[k] for k in sorted(traj.meta) if k != "backend"}
    return json.dumps(keep, indent=2, sort_keys=True) + "\n"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


# -- file input ----------------------------------------------------------------

def load_trajectory(path: Path, C: float | None = None, kappa: float | None = None) -> Trajectory:
    """Read a trajectory CSV and its ``.meta.json`` sidecar."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != TRAJ_COLUMNS:
        raise UsageError(f"{path}: header must be {','.join(TRAJ_COLUMNS)}")
    try:
        data = np.array([[float(x) for x in r[:7]] for r in rows[1:]], dtype=float)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{path}: malformed row ({exc})") from exc
    if data.ndim != 2 or data.shape[0] < 2 or not np.all(np.isfinite(data)):
        raise UsageError(f"{path}: need at least two finite rows")
    if not np.all(np.diff(data[:, 0]) > 0):
        raise UsageError(f"{path}: times are not strictly increasing")
    meta = {}
    side = Path(path).with_suffix(".meta.json")
    if side.exists():
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{side}: {exc}") from exc
    if C is not None:
        meta["C"] = C
    if kappa is not None:
        meta["kappa"] = kappa
    if "C" not in meta:
        raise UsageError(f"{path}: no sidecar {side.name}; pass --C")
    return Trajectory(data[:, 0], data[:, 1:7], "complex", meta)


# -- pipelines -----------------------------------------------------------------

def simulate(cfg: SimulationConfig) -> Trajectory:
    s0 = QuadraticState(cfg.t_span[0], cfg.v0, cfg.dv0, cfg.ddv0)
    meta_conv = BracketConvention(cfg.kappa)
    return integrate_quadratic(s0, cfg.C, cfg.t_span, cfg.solver, cfg.observation_dt, meta_conv)


def asymptotics_report(traj: Trajectory) -> dict:
    est = estimate_alpha(traj)
    out = {"estimate": est.to_dict()}
    if traj.C != 0.0 and math.isfinite(est.c7):
        rows = []
        for r in (est.t_last / 4.0, est.t_last / 2.0):
            _, _, err = nonnull_correction(traj, est, r=r)
            rows.append({"r": r, "corrected_error": err,
                         "uncorrected_error": uncorrected_error(traj, est, r)})
        out["nonnull_correction"] = rows
    return out


def bounds_outputs(traj: Trajectory, out_dir: Path, prefix: str = "") -> int:
    """Write growth-bound and null-bound reports; returns the number of failures."""
    rep = drift_report(traj)
    viol = check_growth_bounds(traj, rep)
    summary = {"tolerance": bound_tolerance(rep.c2_0), "growth_violations": [list(v) for v in viol]}
    failures = len(viol)
    if traj.C == 0.0:
        est = estimate_alpha(traj)
        for series in null_bound_series(traj, est):
            write_atomic(out_dir / f"{prefix}bounds_{series.name}.csv", series.to_csv())
            d = series.to_dict()
            d.pop("rows")
            summary[series.name] = d
            failures += series.n_flagged
    write_atomic(out_dir / f"{prefix}bounds.json", _dump(summary))
    return failures


def write_outputs(traj: Trajectory, outputs, out_dir: Path, prefix: str = "") -> int:
    """Emit the requested files; returns the verification failure count."""
    failures = 0
    if "trajectory" in outputs:
        write_atomic(out_dir / f"{prefix}trajectory.csv", trajectory_csv(traj))
        write_atomic(out_dir / f"{prefix}trajectory.meta.json", meta_json(traj))
    if "polar" in outputs:
        write_atomic(out_dir / f"{prefix}polar.csv", polar_csv(traj))
    group = None
    if outputs & {"group", "invariants", "duality"}:
        group = reconstruct_group(traj) if traj.initial_index == 0 else None
    if "group" in outputs and group is not None:
        write_atomic(out_dir / f"{prefix}group.csv", group_csv(group))
    if "invariants" in outputs:
        rep = drift_report(traj, group=group)
        rep.bound_violations = check_growth_bounds(traj, rep)
        write_atomic(out_dir / f"{prefix}invariants.json", rep.to_json() + "\n")
    if "asymptotics" in outputs:
        write_atomic(out_dir / f"{prefix}asymptotics.json", _dump(asymptotics_report(traj)))
    if "duality" in outputs:
        report, _, _ = duality_pipeline(traj, 1.0, x=group)
        write_atomic(out_dir / f"{prefix}duality.json", report.to_json() + "\n")
    if "bounds" in outputs:
        failures += bounds_outputs(traj, out_dir, prefix)
    return failures


def run_simulate(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load config {args.config}: {exc}") from exc
    if args.tol is not None:
        solver = doc.get("solver", {})
        solver = {"method": solver} if isinstance(solver, str) else dict(solver)
        solver.update(atol=args.tol, rtol=args.tol)
        doc["solver"] = solver
    if args.kappa is not None:
        doc["kappa"] = args.kappa
    cfg = parse_config(doc)
    traj = simulate(cfg)
    write_outputs(traj, cfg.outputs, Path(args.out_dir))
    return EXIT_OK


def run_example(args) -> int:
    if args.n not in EXAMPLES:
        raise UsageError(f"unknown example {args.n}; choose 1 or 2")
    if not args.horizon > 0:
        raise UsageError("horizon must be positive")
    doc = dict(EXAMPLES[args.n], t_span=[0.0, args.horizon])
    if args.tol is not None:
        doc["solver"] = {"atol": args.tol, "rtol": args.tol}
    if args.kappa is not None:
        doc["kappa"] = args.kappa
    cfg = parse_config(doc)
    traj = simulate(cfg)
    write_outputs(traj, {"trajectory", "polar", "group"}, Path(args.out_dir),
                  prefix=f"example{args.n}_")
    return EXIT_OK


def run_analyze(args) -> int:
    which = set()
    for item in args.report.split(","):
        item = item.strip()
        if item not in REPORTS:
            raise UsageError(f"unknown report {item!r}; choose from inv, asym, bounds")
        which.add(REPORTS[item])
    traj = load_trajectory(Path(args.trajectory), args.C, args.kappa)
    out_dir = Path(args.out_dir)
    failures = 0
    if "invariants" in which:
        rep = drift_report(traj)
        rep.bound_violations = check_growth_bounds(traj, rep)
        failures += len(rep.bound_violations)
        write_atomic(out_dir / "invariants.json", rep.to_json() + "\n")
    if "asymptotics" in which:
        write_atomic(out_dir / "asymptotics.json", _dump(asymptotics_report(traj)))
    if "bounds" in which:
        failures += bounds_outputs(traj, out_dir)
    if args.verify and failures:
        print(f"verification failed: {failures} violation(s)", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def run_dual(args) -> int:
    if not (math.isfinite(args.b) and args.b != 0.0):
        raise UsageError("b must be finite and nonzero")
    traj = load_trajectory(Path(args.trajectory), args.C, args.kappa)
    if traj.initial_index != 0:
        raise UsageError("the dual pipeline needs a forward trajectory")
    report, _, _ = duality_pipeline(traj, args.b)
    write_atomic(Path(args.out_dir) / "duality.json", report.to_json() + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liequad", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", default=".", help="directory for emitted files")
        sp.add_argument("--tol", type=float, default=None, help="adaptive atol = rtol override")
        sp.add_argument("--kappa", type=float, default=None, help="bracket scale override")

    sp = sub.add_parser("simulate", help="integrate a configuration")
    sp.add_argument("--config", required=True)
    common(sp)
    sp.set_defaults(func=run_simulate)

    sp = sub.add_parser("example", help="reproduce a built-in example")
    sp.add_argument("n", type=int)
    sp.add_argument("--horizon", type=float, default=80.0)
    common(sp)
    sp.set_defaults(func=run_example)

    sp = sub.add_parser("analyze", help="reports on a trajectory CSV")
    sp.add_argument("trajectory")
    sp.add_argument("--report", default="inv,asym,bounds")
    sp.add_argument("--verify", action="store_true", help="exit 3 on any flagged violation")
    sp.add_argument("--C", type=float, default=None, help="constant when no sidecar exists")
    common(sp)
    sp.set_defaults(func=run_analyze)

    sp = sub.add_parser("dual", help="duality transform of a trajectory CSV")
    sp.add_argument("trajectory")
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--C", type=float, default=None, help="constant when no sidecar exists")
    common(sp)
    sp.set_defaults(func=run_dual)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (LieQuadError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
