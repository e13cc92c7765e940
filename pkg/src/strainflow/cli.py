"""Command-line entry point: ``strainflow <command> ...`` or ``python -m strainflow``.

Exit codes: 0 success, 1 invalid configuration, 2 mismatch with the
predicted limits (or Lyapunov violations in a guaranteed regime),
3 non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .classify import default_jobs, format_matrix, run_matrix, set_path, sweep
from .config import load_config, parse_params
from .lyapunov import DomainError, audit_monotonicity, compute_weights, functional
from .model import ValidationError, compute_R0, discretize, equilibria, state_distance
from .simulator import simulate
from .spectral import stability_report

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH, EXIT_NOCONV = 0, 1, 2, 3


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(rows, header, out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    return text


def trajectory_table(traj, params, functionals=()):
    """Header and rows: t, S, per-strain mass and force, distances to equilibria, Lyapunov values."""
    grid = traj.grid
    eqs = equilibria(params, grid)
    header = ["t", "S"]
    for name in params.names:
        header += [f"mass_{name}", f"foi_{name}"]
    header += [f"dist_{e.label}" for e in eqs]
    header += list(functionals)
    weights = compute_weights(params, grid) if functionals else None
    evals = [functional(f, params) for f in functionals]
    rows = []
    for j in range(len(traj)):
        st = traj.state(j)
        row = [traj.times[j], traj.s[j]]
        for k in range(params.n_strains):
            row += [traj.masses[j, k], traj.forces[j, k]]
        row += [state_distance(st, e.state, grid) for e in eqs]
        for f in evals:
            try:
                row.append(f(st, params, grid, weights))
            except DomainError:
                row.append(None)
        rows.append(row)
    return header, rows


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    traj = simulate(cfg.initial_state(), cfg.params, cfg.grid, cfg.sim)
    header, rows = trajectory_table(traj, cfg.params)
    text = write_csv(rows, header, args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_equilibria(args) -> int:
    cfg = load_config(args.config)
    p, grid = cfg.params, cfg.grid
    d = discretize(p, grid)
    for k, name in enumerate(p.names):
        print(f"strain {name}: r = {d.r[k]!r}  R0 = {d.R0[k]!r}")
    print(f"{'equilibrium':<16}{'S':>22}" + "".join(f"{'mass_' + n:>22}" for n in p.names))
    for eq in equilibria(p, grid):
        masses = eq.state.masses(grid)
        print(f"{eq.label:<16}{eq.state.s!r:>22}" + "".join(f"{m!r:>22}" for m in masses))
    return EXIT_OK


def cmd_lyapunov(args) -> int:
    cfg = load_config(args.config)
    traj = simulate(cfg.initial_state(), cfg.params, cfg.grid, cfg.sim)
    trace = audit_monotonicity(traj, args.functional, cfg.params, tol=args.tol)
    rows = [[t, v if np.isfinite(v) else None] for t, v in zip(trace.times, trace.values)]
    text = write_csv(rows, ["t", args.functional], args.out)
    if not args.out:
        sys.stdout.write(text)
    status = "guaranteed" if trace.guaranteed else "no guarantee"
    print(f"# {args.functional}: regime {status}; tol {trace.tol!r}; "
          f"{len(trace.violations)} violations; {len(trace.domain_exits)} points outside domain",
          file=sys.stderr)
    for t, inc in trace.violations:
        print(f"# violation at t={t!r}: increase {inc!r}", file=sys.stderr)
    if trace.violations and trace.guaranteed:
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_spectral(args) -> int:
    cfg = load_config(args.config)
    R0 = compute_R0(cfg.params, cfg.grid)
    print("R0: " + ", ".join(f"{n}={v!r}" for n, v in zip(cfg.params.names, R0)))
    for v in stability_report(cfg.params, cfg.grid):
        print(f"{v.label}: {v.verdict}")
        for name, own, res in v.factors:
            kind = "own" if own else "invasion"
            root = "none" if res.root is None else repr(res.root)
            print(f"    {kind} mode of {name}: f(0)={res.value_at_zero!r} root={root} ({res.verdict})")
    return EXIT_OK


MATRIX_HEADER = ["config", "regime", "ic_class", "predicted", "observed", "alpha", "alpha_score",
                 "final_distance", "converged", "match", "note"]


def matrix_rows(rows):
    return [[r.label, r.regime, r.ic_class, r.predicted, r.observed, r.alpha, r.alpha_score,
             r.final_distance, r.converged, r.match, r.note] for row in rows for r in row]


def _status(results) -> int:
    if any(r.converged and not r.match for r in results):
        return EXIT_MISMATCH
    if any(not r.converged for r in results):
        return EXIT_NOCONV
    return EXIT_OK


def cmd_matrix(args) -> int:
    paths = sorted(Path(args.config_dir).glob("*.json"))
    if not paths:
        raise ValidationError(f"no *.json configs in {args.config_dir}")
    docs = []
    for p in paths:
        load_config(p)
        docs.append(json.loads(p.read_text()))
    rows = run_matrix(docs, jobs=args.jobs, labels=[p.stem for p in paths])
    text = write_csv(matrix_rows(rows), MATRIX_HEADER, args.out)
    if not args.out:
        sys.stdout.write(text)
    print(format_matrix(rows), file=sys.stderr)
    return _status([r for row in rows for r in row])


def parse_range(spec: str):
    try:
        lo, hi, steps = spec.split(":")
        return np.linspace(float(lo), float(hi), int(steps))
    except ValueError:
        raise ValidationError(f"--range must be lo:hi:steps, got {spec!r}") from None


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = parse_range(args.range)
    results = sweep(cfg.raw, args.param, values, jobs=args.jobs)
    rows = []
    for v, r in zip(values, results):
        R0 = compute_R0(parse_params(set_path(cfg.raw, args.param, float(v))), cfg.grid)
        rows.append([float(v), *R0, r.regime, r.ic_class, r.predicted, r.observed,
                     r.alpha, r.final_distance, r.converged])
    header = (["value"] + [f"R0_{n}" for n in cfg.params.names]
              + ["regime", "ic_class", "predicted", "observed", "alpha", "final_distance", "converged"])
    text = write_csv(rows, header, args.out)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK if all(r.converged for r in results) else EXIT_NOCONV


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strainflow", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory and emit CSV")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("equilibria", help="print R0 values and equilibria")
    p.add_argument("config")
    p.set_defaults(fn=cmd_equilibria)

    p = sub.add_parser("lyapunov", help="Lyapunov trace and violation report")
    p.add_argument("config")
    p.add_argument("--functional", default="L0")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_lyapunov)

    p = sub.add_parser("spectral", help="local stability report")
    p.add_argument("config")
    p.set_defaults(fn=cmd_spectral)

    p = sub.add_parser("matrix", help="regime x initial-condition convergence table")
    p.add_argument("config_dir")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_matrix)

    p = sub.add_parser("sweep", help="1-D parameter sweep of the classified limit")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="dotted path into the config, e.g. lambda")
    p.add_argument("--range", required=True, help="lo:hi:steps")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", None) is None and hasattr(args, "jobs"):
        args.jobs = default_jobs()
    try:
        return args.fn(args)
    except (ValidationError, KeyError, ValueError, FileNotFoundError) as exc:
        print(f"strainflow: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
