"""Command-line entry point: ``mingraph <subcommand> ...``.

Exit codes: 0 success, 1 input error, 2 non-convergence, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import gridio
from .errors import DomainError, InvalidInputError, NonConvergenceError, PreconditionError
from .graphgeom import Domain
from .homotopy import classify_lambda, trace, trace_to_csv
from .majorization import l_majorizes, weak_hull_test
from .solver import BoundaryData, ExperimentConfig, SolverConfig, solve_dirichlet, uniqueness_experiment
from .svkit import area_density, classify_region, h_value, psi, singular_values, SingularValueVector
from .variation import second_variation_terms

log = logging.getLogger("mingraph")

EXIT_OK, EXIT_INPUT, EXIT_NONCONV, EXIT_INTERNAL = 0, 1, 2, 3

_CONFIG_SECTIONS = {"domain", "boundary", "solver", "experiment"}


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from None


def _matrix(text):
    rows = [_floats(r) for r in text.split(";")]
    if not rows or len({len(r) for r in rows}) != 1 or not rows[0]:
        raise InvalidInputError("matrix rows must be non-empty and of equal length")
    return np.array(rows)


def _lambda(text):
    v = np.array(_floats(text))
    if v.size == 0:
        raise InvalidInputError("empty singular value vector")
    return SingularValueVector.from_unsorted(v)


def load_config(path):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InvalidInputError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_SECTIONS
    if unknown:
        raise InvalidInputError(f"unknown config sections: {sorted(unknown)}")
    for key in ("domain", "boundary"):
        if key not in cfg:
            raise InvalidInputError(f"config is missing the '{key}' section")
    try:
        domain = Domain.from_dict(cfg["domain"])
        boundary = BoundaryData.from_dict(cfg["boundary"])
        solver = SolverConfig.from_dict(cfg.get("solver", {}))
        experiment = ExperimentConfig.from_dict(cfg.get("experiment", {}))
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed config: {exc}") from None
    return domain, boundary, solver, experiment


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_svd(args):
    J = _matrix(args.matrix)
    lam, frames = singular_values(J)
    _emit(gridio.dumps({
        "lambda": lam.values, "rank": frames.rank,
        "domain_frame": frames.domain_frame, "target_frame": frames.target_frame,
        "region": classify_region(lam, args.tol).to_dict(),
    }), args.out)


def cmd_region(args):
    _emit(gridio.dumps(classify_region(_lambda(args.lam), args.tol).to_dict()), args.out)


def cmd_density(args):
    lam = _lambda(args.lam).values
    tail = lam[1:]
    H = float(h_value(tail)) if np.all(tail < 1.0) else None
    _emit(gridio.dumps({"m": lam.size, "phi": float(area_density(lam)),
                        "psi": float(psi(lam)), "H": H}), args.out)


def cmd_majorize(args):
    x, y = np.array(_floats(args.x)), np.array(_floats(args.y))
    rep = l_majorizes(x, y, args.l, args.tol).to_dict()
    if args.hull:
        rep["weak_hull"] = weak_hull_test(x, y, args.tol)
    _emit(gridio.dumps(rep), args.out)


def cmd_trace(args):
    f0, f1 = gridio.read_gridmap(args.f0), gridio.read_gridmap(args.f1)
    tr = trace(f0, f1, args.simplex, np.linspace(0.0, 1.0, args.samples))
    _emit(trace_to_csv(tr, classify_lambda(tr, args.tol)), args.out)


def cmd_variation(args):
    f = gridio.read_gridmap(args.f)
    V = gridio.read_gridmap(args.V, f.domain)
    _emit(gridio.dumps(second_variation_terms(f, V).to_dict()), args.out)


def cmd_solve(args):
    domain, boundary, solver, experiment = load_config(args.config)
    if args.seed is not None:
        solver.seed = args.seed
    try:
        res = solve_dirichlet(domain, boundary, None, solver, experiment.noise)
        fmap, rec, code = res.map, res.record, EXIT_OK
    except NonConvergenceError as err:
        log.error("%s", err)
        fmap, rec, code = err.best, err.record, EXIT_NONCONV
    gridio.write_gridmap(fmap, args.out)
    report = gridio.dumps(rec.to_dict())
    _emit(report, args.report)
    return code


def cmd_experiment(args):
    domain, boundary, solver, experiment = load_config(args.config)
    if args.seed is not None:
        solver.seed = args.seed
    rep = uniqueness_experiment(domain, boundary, experiment, solver)
    _emit(gridio.dumps(rep.to_dict()), args.out)
    if rep.verdict is None:
        log.error("%s", rep.reason)
        return EXIT_NONCONV
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="mingraph", description="Minimal graphs of higher codimension: singular-value tools and a Dirichlet solver.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="write output here instead of stdout")
        return sp

    sp = add("svd", cmd_svd, "singular values, frames and region verdict of a matrix")
    sp.add_argument("--matrix", required=True, help='rows separated by ";", entries by ","')
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("region", cmd_region, "classify a singular value vector")
    sp.add_argument("--lambda", dest="lam", required=True)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("density", cmd_density, "area density, psi and H of a vector")
    sp.add_argument("--lambda", dest="lam", required=True)

    sp = add("majorize", cmd_majorize, "l-majorization report for x against y")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--l", type=int, default=None)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--hull", action="store_true", help="also run the weak-majorization hull test")

    sp = add("trace", cmd_trace, "homotopy trace CSV at one simplex")
    sp.add_argument("f0")
    sp.add_argument("f1")
    sp.add_argument("--simplex", type=int, default=0)
    sp.add_argument("--samples", type=int, default=101)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("variation", cmd_variation, "first/second variation report of f along V")
    sp.add_argument("f")
    sp.add_argument("V")

    sp = sub.add_parser("solve", help="solve the Dirichlet problem from a config")
    sp.set_defaults(func=cmd_solve)
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True, help="grid map CSV (domain sidecar written next to it)")
    sp.add_argument("--report", help="convergence JSON (default stdout)")
    sp.add_argument("--seed", type=int)

    sp = add("experiment", cmd_experiment, "run the uniqueness experiment from a config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int)
    return p


def main(argv=None):
    # diagnostics always reach the current error stream, whatever the root logger does
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    log.addHandler(handler)
    log.propagate = False
    try:
        return _run(argv)
    finally:
        log.removeHandler(handler)


def _run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        code = args.func(args)
    except (InvalidInputError, DomainError, PreconditionError, OSError) as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except NonConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_NONCONV
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
