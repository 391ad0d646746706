"""Command-line entry point: ``tsslab <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure or blow-up,
3 criterion not applicable to the given parameters.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    CROSS_TERM_COLUMNS,
    Trajectory,
    energy_residual,
    fit_quasi_energy_constant,
    ls_norm,
)
from .exceptions import BlowUpError, ConfigurationError, DomainError, InvariantViolation, UsageError
from .hausdorff import HausdorffCoverEstimator, SyntheticSpec, dimension_bound, synthesize
from .model import RunConfig, simulate
from .odi import DEFAULT_ETAS, OdiConstantEstimator, check_term_estimates, doubling_constant, exponents
from .spectral import write_snapshot

logger = logging.getLogger("tsslab")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_INAPPLICABLE = 3

OUTPUT_ROOT_ENV = "TSSLAB_OUTPUT_ROOT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- report helpers -------------------------------------------------------------


def _clean(obj):
    """Make ``obj`` strict-JSON: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(report):
    return json.dumps(_clean(report), indent=2) + "\n"


def _emit(report, out, summary):
    text = _dump(report)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
        print(summary)
    else:
        sys.stdout.write(text)


def _parse_overrides(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _load_config(args):
    overrides = _parse_overrides(args.set)
    if args.config:
        if not Path(args.config).is_file():
            raise UsageError(f"config file not found: {args.config}")
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.from_mapping(overrides)


def _load_trajectory(path):
    if not Path(path).is_file():
        raise UsageError(f"trajectory file not found: {path}")
    return Trajectory.from_csv(path).validate()


def _output_dir(config, explicit):
    if explicit:
        return Path(explicit)
    if config.output_dir:
        return Path(config.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
    return Path(root) / f"run-{config.config_hash()}"


def _write_gnuplot(path, header, rows):
    lines = ["# " + " ".join(header)]
    for row in rows:
        lines.append(" ".join("nan" if not np.isfinite(x) else repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


# -- simulate ---------------------------------------------------------------------


def _snapshot_writer(out_dir):
    def write(state, step):
        path = out_dir / f"snapshot_{step:08d}.txt"
        write_snapshot(path, state.grid, {"n": state.n, "c": state.c, "u": state.u}, state.t)
        return str(path.name)

    return write


def _run_one(config, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.cfg").write_text(config.to_text())
    writer = _snapshot_writer(out_dir) if config.snapshot_stride else None
    run = simulate(config, output_dir=out_dir, snapshot_writer=writer)
    final = out_dir / "final.txt"
    write_snapshot(final, run.state.grid, {"n": run.state.n, "c": run.state.c, "u": run.state.u}, run.state.t)
    return run


def _simulation_report(run, out_dir):
    traj = run.trajectory
    return {
        "command": "simulate",
        "config_hash": run.config.config_hash(),
        "output_dir": str(out_dir),
        "status": "blow-up" if run.blew_up else "ok",
        "steps": run.steps,
        "t_final": run.state.t,
        "samples": len(traj),
        "violations": [str(v) for v in run.violations[:10]],
        "violation_count": len(run.violations),
        "y_max": float(np.max(traj["y"])) if len(traj) else math.nan,
        "mass": float(traj["mass"][-1]) if len(traj) else math.nan,
        "error": str(run.error) if run.error else None,
    }


def cmd_simulate(args):
    config = _load_config(args)
    out_dir = _output_dir(config, args.output)
    run = _run_one(config, out_dir)
    report = _simulation_report(run, out_dir)
    (out_dir / "report.json").write_text(_dump(report))
    if args.gnuplot:
        traj = run.trajectory
        _write_gnuplot(out_dir / "trajectory.dat", traj.columns, zip(*(traj[k] for k in traj.columns)))
    print(f"simulate: {report['status']} after {run.steps} steps, trajectory {out_dir / 'trajectory.csv'}")
    return EXIT_NUMERICAL if run.blew_up else EXIT_OK


# -- analyze ------------------------------------------------------------------------


def cmd_analyze(args):
    traj = _load_trajectory(args.trajectory)
    report = {
        "command": "analyze",
        "config_hash": traj.metadata.get("config_hash"),
        "trajectory": str(args.trajectory),
        "samples": len(traj),
        "t_range": [float(traj.t[0]), float(traj.t[-1])],
        "columns": {},
        "omitted": [],
    }
    for name in traj.columns:
        if name == "t":
            continue
        v = traj[name]
        finite = v[np.isfinite(v)]
        report["columns"][name] = {
            "min": float(finite.min()) if finite.size else math.nan,
            "max": float(finite.max()) if finite.size else math.nan,
            "final": float(v[-1]),
        }
    for col in ("y", "z"):
        if col in traj:
            report[f"L1_{col}"] = ls_norm(traj, col, 1.0)
    if "mass" in traj:
        m = traj["mass"]
        report["mass_drift"] = float(np.max(np.abs(m - m[0])) / abs(m[0])) if m[0] else float(np.max(np.abs(m)))
    try:
        report["energy_residual_relative"] = energy_residual(traj, 0, len(traj) - 1, relative=True)
    except UsageError as exc:
        report["omitted"].append(f"energy balance: {exc}")
    try:
        report["quasi_energy_K"] = fit_quasi_energy_constant(traj)
    except UsageError as exc:
        report["omitted"].append(f"quasi-energy: {exc}")
    _emit(report, args.out, f"analyze: {len(traj)} samples, report {args.out}")
    return EXIT_OK


# -- verify-odi -------------------------------------------------------------------------


def _exponent_report(p, alpha):
    table = exponents(p, alpha)
    exact = {k: str(v) for k, v in asdict(table).items()}
    return {"exact": exact, "float": table.as_dict()}


def cmd_verify_odi(args):
    traj = _load_trajectory(args.trajectory)
    column = args.column
    report = {
        "command": "verify-odi",
        "config_hash": traj.metadata.get("config_hash"),
        "trajectory": str(args.trajectory),
        "sigma": args.sigma,
        "omitted": [],
    }
    if column not in traj:
        report["omitted"].append(f"K_emp: trajectory has no {column!r} column")
    else:
        est = OdiConstantEstimator(sigma=args.sigma).fit(traj[column], h=traj.h)
        report["K_emp"] = est.K_
        report["window_exponent"] = est.window_exponent_
        report["doubling_constant"] = est.doubling_constant_
    missing = [c for c in CROSS_TERM_COLUMNS if c not in traj]
    if missing:
        report["omitted"].append(f"term constants: missing columns {', '.join(missing)}")
    else:
        try:
            table = check_term_estimates(traj, etas=args.etas)
            report["term_constants"] = {f"eta={eta:g}": consts for eta, consts in table.items()}
        except UsageError as exc:
            report["omitted"].append(f"term constants: {exc}")
    report["exponents"] = _exponent_report(Fraction(args.p), Fraction(args.alpha))
    k = report.get("K_emp", "omitted")
    _emit(report, args.out, f"verify-odi: sigma={args.sigma:g} K_emp={k}")
    return EXIT_OK


# -- estimate-dimension --------------------------------------------------------------------


def _default_deltas(traj):
    span = float(traj.t[-1] - traj.t[0])
    return [span / 10 * 0.5**k for k in range(5)]


def cmd_estimate_dimension(args):
    try:
        d_bound = dimension_bound(Fraction(repr(args.s)), Fraction(repr(args.a)))
    except DomainError as exc:
        raise DomainError(
            f"{exc}; the covering criterion needs windows C z^(-a) that shrink faster "
            "than z^(-s) is integrable, i.e. a > s"
        ) from None
    traj = _load_trajectory(args.trajectory)
    column = args.column
    if column not in traj:
        column = "z" if "z" in traj else column
    traj.require(column)
    z = traj[column]
    if np.any(~np.isfinite(z)) or np.any(z < 1):
        raise UsageError(f"column {column!r} must be finite and >= 1")

    C = args.C
    C_source = "given"
    if C is None:
        K = OdiConstantEstimator(sigma=args.a + 1.0).fit(z, h=traj.h).K_
        C = float(doubling_constant(K, args.a + 1.0)) if K > 0 else math.inf
        C_source = f"doubling window of K_emp={K!r} at sigma={args.a + 1.0:g}"
    seed_below = args.seed_below
    if seed_below is None and "cap" in traj.metadata:
        seed_below = float(traj.metadata["cap"])
    tail = args.tail
    if tail is None and "tail" in traj.metadata:
        tail = float(traj.metadata["tail"])
    deltas = args.deltas or _default_deltas(traj)

    est = HausdorffCoverEstimator(
        s=args.s, a=args.a, C=C, deltas=tuple(deltas), d=args.d,
        seed_below=seed_below, tail=tail, column=column,
    ).fit(traj.t, z)
    body = est.report()
    header = {
        "d": float(d_bound),
        "d_exact": str(d_bound),
        "s": args.s,
        "a": args.a,
        "C": C,
        "C_source": C_source,
        "exponent": body.pop("exponent"),
    }
    for key in ("s", "a", "C", "d"):
        body.pop(key)
    report = {
        "command": "estimate-dimension",
        "header": header,
        "config_hash": traj.metadata.get("config_hash"),
        "trajectory": str(args.trajectory),
        "seed_below": seed_below,
        "tail": tail,
        **body,
    }
    if args.gnuplot:
        rows = [(r["delta"], r["premeasure"]) for r in body["premeasure_table"]]
        _write_gnuplot(args.gnuplot, ["delta", "premeasure"], rows)
    lines = [f"d = {float(d_bound):g}  (s = {args.s:g}, a = {args.a:g}, C = {C:g})"]
    lines += [f"  delta = {r['delta']:.6g}  premeasure = {r['premeasure']:.6g}" for r in body["premeasure_table"]]
    lines.append(f"verdict: {body['verdict']}")
    _emit(report, args.out, "\n".join(lines))
    return EXIT_OK


# -- sweep-epsilon -------------------------------------------------------------------------


def _sweep_member(config, out_dir):
    try:
        run = _run_one(config, out_dir)
        return {"eps": config.eps, "status": "blow-up" if run.blew_up else "ok",
                "output_dir": str(out_dir), "error": str(run.error) if run.error else None}
    except Exception as exc:  # reported, not raised: the sweep stays partial
        return {"eps": config.eps, "status": "failed", "output_dir": str(out_dir), "error": str(exc)}


def _final_fields(out_dir):
    from .spectral import read_snapshot

    _, fields, _ = read_snapshot(Path(out_dir) / "final.txt")
    return fields


def cmd_sweep_epsilon(args):
    if len(args.eps) < 2:
        raise UsageError("sweep-epsilon needs at least two eps values")
    base = _load_config(args)
    root = _output_dir(base, args.output)
    configs = [replace(base, eps=float(e), output_dir="") for e in args.eps]
    dirs = [root / f"eps-{i}-{e!r}" for i, e in enumerate(args.eps)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            members = list(pool.map(_sweep_member, configs, dirs))
    else:
        members = [_sweep_member(c, d) for c, d in zip(configs, dirs)]

    pairs = []
    for i in range(len(members) - 1):
        a, b = members[i], members[i + 1]
        entry = {"eps_a": a["eps"], "eps_b": b["eps"]}
        if a["status"] != "ok" or b["status"] != "ok":
            entry["status"] = "skipped: member run failed"
            pairs.append(entry)
            continue
        ta = Trajectory.from_csv(Path(a["output_dir"]) / "trajectory.csv")
        tb = Trajectory.from_csv(Path(b["output_dir"]) / "trajectory.csv")
        m = min(len(ta), len(tb))
        entry["y_sup"] = float(np.max(np.abs(ta["y"][:m] - tb["y"][:m])))
        fa, fb = _final_fields(a["output_dir"]), _final_fields(b["output_dir"])
        for name in ("n", "c"):
            entry[f"{name}_sup"] = float(np.max(np.abs(fa[name] - fb[name])))
        ukeys = sorted(k for k in fa if k.startswith("u"))
        entry["u_sup"] = float(max(np.max(np.abs(fa[k] - fb[k])) for k in ukeys))
        entry["status"] = "ok"
        pairs.append(entry)
    ys = [p["y_sup"] for p in pairs if "y_sup" in p]
    complete = len(ys) == len(pairs)
    report = {
        "command": "sweep-epsilon",
        "config_hash": base.config_hash(),
        "eps": [float(e) for e in args.eps],
        "runs": members,
        "pairs": pairs,
        "y_sup_decreasing": bool(complete and all(b < a for a, b in zip(ys, ys[1:]))),
        "complete": complete and all(m["status"] == "ok" for m in members),
    }
    (root / "sweep.json").parent.mkdir(parents=True, exist_ok=True)
    (root / "sweep.json").write_text(_dump(report))
    summary = "\n".join(
        [f"sweep-epsilon: {len(members)} runs under {root}"]
        + [f"  d({p['eps_a']:g}, {p['eps_b']:g}) = {p.get('y_sup', 'n/a')}" for p in pairs]
    )
    _emit(report, args.out, summary)
    return EXIT_OK if report["complete"] else EXIT_NUMERICAL


# -- synth -----------------------------------------------------------------------------------


def cmd_synth(args):
    spec = SyntheticSpec(
        T=args.T, h=args.h, beta=args.beta, baseline=args.baseline, cap=args.cap,
        points=tuple(args.points or ()), cantor_level=args.cantor_level,
        cantor_ratio=args.cantor_ratio, cantor_left=args.cantor_left,
        cantor_length=args.cantor_length, s=args.s, tail=args.tail,
    )
    st = synthesize(spec)
    traj = st.to_trajectory()
    traj.metadata["config_hash"] = hashlib.sha256(repr(spec).encode()).hexdigest()[:16]
    traj.to_csv(args.out)
    print(f"synth: {len(traj)} samples, {st.singular_points.size} singular points -> {args.out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------


def _add_config_args(p):
    p.add_argument("--config", help="plain-text key = value file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--output", help=f"output directory (default: ${OUTPUT_ROOT_ENV}/run-<hash>)")


def build_parser():
    parser = _Parser(prog="tsslab", description="Regularized chemotaxis-fluid runs and singular-set analysis.")
    parser.add_argument("--version", action="version", version=f"tsslab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one simulation and record its trajectory")
    _add_config_args(p)
    p.add_argument("--gnuplot", action="store_true", help="also write trajectory.dat")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="summarize a trajectory file")
    p.add_argument("trajectory")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-odi", help="empirical ODI constants of a trajectory")
    p.add_argument("trajectory")
    p.add_argument("--sigma", type=float, default=3.0)
    p.add_argument("--column", default="y")
    p.add_argument("--p", default="3", help="integrability exponent p (rational allowed)")
    p.add_argument("--alpha", default="1", help="integrability exponent alpha (rational allowed)")
    p.add_argument("--etas", type=float, nargs="+", default=list(DEFAULT_ETAS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_odi)

    p = sub.add_parser("estimate-dimension", help="cover the candidate singular set and tabulate pre-measures")
    p.add_argument("trajectory")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--C", type=float, default=None, help="window constant (default: from K_emp)")
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--d", type=float, default=None, help="pre-measure exponent (default 1 - s/a)")
    p.add_argument("--column", default="y")
    p.add_argument("--seed-below", type=float, default=None, dest="seed_below")
    p.add_argument("--tail", type=float, default=None)
    p.add_argument("--gnuplot", metavar="PATH", help="write the pre-measure table as a data file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate_dimension)

    p = sub.add_parser("sweep-epsilon", help="compare runs across regularization parameters")
    _add_config_args(p)
    p.add_argument("--eps", type=float, nargs="+", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_epsilon)

    p = sub.add_parser("synth", help="write a synthetic z trajectory with known singular set")
    p.add_argument("--out", required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1e-4)
    p.add_argument("--beta", type=float, default=0.6)
    p.add_argument("--baseline", type=float, default=1.0)
    p.add_argument("--cap", type=float, default=1e4)
    p.add_argument("--points", type=float, nargs="*")
    p.add_argument("--cantor-level", type=int, default=None, dest="cantor_level")
    p.add_argument("--cantor-ratio", type=float, default=1.0 / 3.0, dest="cantor_ratio")
    p.add_argument("--cantor-left", type=float, default=0.1, dest="cantor_left")
    p.add_argument("--cantor-length", type=float, default=0.5, dest="cantor_length")
    p.add_argument("--s", type=float, default=None, help="request an L^s certificate")
    p.add_argument("--tail", type=float, default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except (BlowUpError, InvariantViolation, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
