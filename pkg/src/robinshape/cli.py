"""Command-line interface: ``robinshape {eig,oracle,optimize,verify,sweep}``.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import analytic, diagnostics
from .config import FORMAT_VERSION, config_to_dict, parse_run_config
from .errors import SolverError
from .fem import assemble, degenerate_pairs, robin_eigs, spectrum_to_csv
from .mesh import (
    Disk,
    DomainSpec,
    boundary_length,
    build_mesh,
    disjoint_union,
    measure,
    spec_area,
    spec_from_json,
    spec_to_json,
)
from .optimize import OptRun, beta_sweep, optimize

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(out: str | None, name: str, text: str, stdout: bool = False):
    if out is None:
        if stdout:
            sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text, encoding="utf-8", newline="\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


# --- commands ------------------------------------------------------------------


def cmd_eig(args) -> int:
    spec = spec_from_json(_read(args.domain))
    if args.resolution is not None:
        spec = spec.with_resolution(args.resolution)
    mesh = build_mesh(spec)
    result = robin_eigs(assemble(mesh), args.beta, args.k)
    pairs = [[i + 1, j + 1] for i, j in degenerate_pairs(result.eigenvalues)]
    report = {
        "version": FORMAT_VERSION,
        "beta": args.beta,
        "k": args.k,
        "resolution": spec.resolution,
        "n_vertices": mesh.n_vertices,
        "n_triangles": int(len(mesh.triangles)),
        "n_boundary_edges": int(len(mesh.boundary_edges)),
        "n_components": mesh.n_components,
        "measure_mesh": measure(mesh),
        "measure_exact": spec_area(spec),
        "boundary_length": boundary_length(mesh),
        "degenerate_pairs": pairs,
        "max_residual": float(np.max(result.residuals)),
    }
    _write(args.out, "spectrum.csv", spectrum_to_csv(result.eigenvalues, result.residuals), stdout=True)
    _write(args.out, "report.json", _dump(report))
    for i, j in pairs:
        print(f"degenerate: lambda_{i} = lambda_{j}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.radii is not None and args.radius is not None:
        raise InputError("give either --radius or --radii, not both")
    radii = args.radii if args.radii is not None else [args.radius if args.radius is not None else 1.0]
    if not radii:
        raise InputError("--radii must not be empty")
    cfg = analytic.BallConfig(args.dimension, tuple(radii), args.beta)
    lam = analytic.ball_union_spectrum(cfg, args.k)
    _write(args.out, "spectrum.csv", spectrum_to_csv(lam), stdout=True)
    return EXIT_OK


def _history_csv(run: OptRun) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eval", "value"])
    for i, v in run.history:
        w.writerow([i, f"{v:.17g}"])
    return buf.getvalue()


def cmd_optimize(args) -> int:
    cfg = parse_run_config(_read(args.config), seed=args.seed)
    out = args.out or cfg.out
    run = optimize(cfg.problem, workers=args.workers)
    doc = {"version": FORMAT_VERSION, "config": config_to_dict(cfg), "result": run.to_dict()}
    if isinstance(run.shape, analytic.BallConfig):
        # planar ball unions are also emitted as a domain spec; 3-D radii live in run.json
        if run.shape.dimension == 2:
            disks = disjoint_union([DomainSpec((Disk(r),)) for r in run.shape.radii])
            _write(out, "best_domain.json", spec_to_json(disks) + "\n")
    elif run.shape is not None:
        _write(out, "best_domain.json", spec_to_json(run.shape) + "\n")
    _write(out, "run.json", _dump(doc), stdout=True)
    _write(out, "history.csv", _history_csv(run))
    return EXIT_OK


def cmd_verify(args) -> int:
    opts = {"beta": args.beta, "dimension": args.dimension, "seed": args.seed, "workers": args.workers}
    for key in ("k", "resolution", "n_trials", "budget"):
        if getattr(args, key) is not None:
            opts[key] = getattr(args, key)
    reports = diagnostics.run_suite(args.suite, **opts)
    lines = "".join(r.summary_line() + "\n" for r in reports)
    sys.stdout.write(lines)
    ok = diagnostics.suite_passed(reports)
    _write(args.out, "summary.txt", lines)
    _write(args.out, "checks.json", _dump({"version": FORMAT_VERSION, "suite": args.suite, "passed": ok,
                                           "checks": [r.to_dict() for r in reports]}))
    # a failed boolean check is a numerical failure of the verified property
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_sweep(args) -> int:
    cfg = parse_run_config(_read(args.config), seed=args.seed)
    if not cfg.betas:
        raise InputError("sweep config needs a non-empty 'betas' list")
    out = args.out or cfg.out
    rows, crossover = beta_sweep(cfg.problem, cfg.betas, workers=args.workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beta", "balls_value", "connected_value", "winner"])
    for r in rows:
        w.writerow([f"{r.beta:.17g}", f"{r.balls_value:.17g}", f"{r.connected_value:.17g}", r.winner])
    _write(out, "sweep.csv", buf.getvalue(), stdout=True)
    doc = {
        "version": FORMAT_VERSION,
        "config": config_to_dict(cfg),
        "rows": [[r.beta, r.balls_value, r.connected_value, r.winner] for r in rows],
        "crossover": list(crossover) if crossover else None,
    }
    _write(out, "sweep.json", _dump(doc))
    return EXIT_OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robinshape", description="Robin Laplacian spectra and spectral shape optimization.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eig", help="FEM eigenvalues of a domain JSON")
    e.add_argument("domain", help="domain spec JSON file")
    e.add_argument("--beta", type=float, required=True)
    e.add_argument("--k", type=_positive_int, required=True)
    e.add_argument("--resolution", type=_positive_int, default=None, help="override the resolution in the domain file")
    e.add_argument("--out", default=None, help="output directory (default: CSV to stdout)")
    e.set_defaults(func=cmd_eig)

    o = sub.add_parser("oracle", help="analytic spectrum of a ball or union of balls")
    o.add_argument("--radius", type=float, default=None)
    o.add_argument("--radii", type=_float_list, default=None, help="comma-separated radii")
    o.add_argument("--dimension", type=int, choices=(2, 3), default=2)
    o.add_argument("--beta", type=float, required=True)
    o.add_argument("--k", type=_positive_int, required=True)
    o.add_argument("--out", default=None)
    o.set_defaults(func=cmd_oracle)

    for name, func, helptext in (
        ("optimize", cmd_optimize, "optimize a shape family from a run config"),
        ("sweep", cmd_sweep, "compare ball unions with connected domains over a beta list"),
    ):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("config", help="run config JSON file")
        c.add_argument("--seed", type=int, default=None, help="override the config seed")
        c.add_argument("--workers", type=_positive_int, default=1)
        c.add_argument("--out", default=None)
        c.set_defaults(func=func)

    v = sub.add_parser("verify", help="run a diagnostics suite")
    v.add_argument("suite", choices=diagnostics.SUITES)
    v.add_argument("--beta", type=float, default=1.0)
    v.add_argument("--k", type=_positive_int, default=None)
    v.add_argument("--dimension", type=int, choices=(2, 3), default=3)
    v.add_argument("--resolution", type=_positive_int, default=None)
    v.add_argument("--n-trials", dest="n_trials", type=int, default=None)
    v.add_argument("--budget", type=_positive_int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=_positive_int, default=1)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)  # argparse exits with 2 on bad usage
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
