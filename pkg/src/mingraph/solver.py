"""Dirichlet solver for the discrete area functional and the uniqueness experiment."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .errors import InvalidInputError, NonConvergenceError, StallError
from .graphgeom import Domain, GridMap, area_and_gradient_of, area_of, singular_field
from .homotopy import gradient_vanishing_diagnostic
from .svkit import ConstraintSet, in_closure_psi_form
from .variation import area_along

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    max_iters: int = 20000
    grad_tol: float = 1e-8
    shrink: float = 0.5
    armijo: float = 1e-4
    memory: int = 10
    seed: int = 0
    max_backtracks: int = 60

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise InvalidInputError("grad_tol must be positive")
        if not 0 < self.shrink < 1:
            raise InvalidInputError("shrink factor must lie in (0, 1)")
        if not 0 < self.armijo <= 0.5:
            raise InvalidInputError("sufficient-decrease constant must lie in (0, 0.5]")
        if self.max_iters < 1 or self.memory < 0 or self.max_backtracks < 1:
            raise InvalidInputError("max_iters, memory and max_backtracks must be positive")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown solver keys: {sorted(unknown)}")
        return cls(**d)


# --- boundary data ---------------------------------------------------------------

_FAMILIES = ("affine", "sinusoidal", "scherk", "zero", "explicit")


@dataclass
class BoundaryData:
    """Prescribed values on the boundary nodes.

    Families (``params`` in brackets):

    * ``affine``      φ(x) = A x + c                              [A (n x m), c]
    * ``sinusoidal``  φ(x) = L (x - x_c) + amplitude (cos kθ, sin kθ, 0, ...)
                      with θ the polar angle of the first two coordinates
                      around the box centre x_c               [amplitude, k, n, L]
    * ``scherk``      φ(x, y) = log(cos(a y) / cos(a x)) / a      [a]
    * ``zero``        φ = 0                                       [n]
    * ``explicit``    per-boundary-node values in node order      [values]
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidInputError(f"unknown boundary family {self.family!r}")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"family", "params"}
        if unknown:
            raise InvalidInputError(f"unknown boundary keys: {sorted(unknown)}")
        return cls(d["family"], dict(d.get("params", {})))

    def to_dict(self):
        return {"family": self.family, "params": self.params}

    def evaluate(self, x):
        """Evaluate the family at points x of shape (N, m)."""
        p = self.params
        m = x.shape[1]
        if self.family == "affine":
            A = np.atleast_2d(np.asarray(p["A"], dtype=float))
            c = np.asarray(p.get("c", np.zeros(A.shape[0])), dtype=float)
            if A.shape[1] != m:
                raise InvalidInputError("affine matrix has the wrong number of columns")
            return x @ A.T + c
        if self.family == "zero":
            return np.zeros((x.shape[0], int(p.get("n", 1))))
        if self.family == "sinusoidal":
            n = int(p.get("n", 2))
            amp = float(p.get("amplitude", 0.5))
            k = float(p.get("k", 2))
            center = np.asarray(p["center"], dtype=float) if "center" in p else None
            if center is None:
                raise InvalidInputError("sinusoidal boundary needs a centre (filled in from the domain)")
            y = x - center
            theta = np.arctan2(y[:, 1] if m > 1 else np.zeros(len(y)), y[:, 0])
            out = np.zeros((x.shape[0], n))
            out[:, 0] = amp * np.cos(k * theta)
            if n > 1:
                out[:, 1] = amp * np.sin(k * theta)
            if "L" in p:
                L = np.atleast_2d(np.asarray(p["L"], dtype=float))
                if L.shape != (n, m):
                    raise InvalidInputError("linear part L must be n x m")
                out += y @ L.T
            return out
        if self.family == "scherk":
            if m != 2:
                raise InvalidInputError("scherk boundary needs a 2-d domain")
            a = float(p.get("a", 1.0))
            if np.any(np.abs(a * x) >= np.pi / 2):
                raise InvalidInputError("scherk data undefined outside |a x|, |a y| < pi/2")
            return (np.log(np.cos(a * x[:, 1]) / np.cos(a * x[:, 0])) / a)[:, None]
        raise InvalidInputError("explicit boundary data cannot be evaluated off the grid")

    def values_on(self, domain):
        """(N_boundary, n) values on the boundary nodes, in node order."""
        mask = domain.boundary_mask
        if self.family == "explicit":
            v = np.asarray(self.params["values"], dtype=float)
            if v.ndim == 1:
                v = v[:, None]
            if v.shape[0] != int(mask.sum()):
                raise InvalidInputError("explicit boundary data has the wrong number of nodes")
            return v
        bd = self
        if self.family == "sinusoidal" and "center" not in self.params:
            center = np.asarray(domain.origin) + 0.5 * np.asarray(domain.extents)
            bd = BoundaryData(self.family, {**self.params, "center": center.tolist()})
        return bd.evaluate(domain.nodes[mask])


def affine_extension(domain, bvals):
    """Least-squares affine fit to the boundary data, evaluated on every node."""
    xb = domain.nodes[domain.boundary_mask]
    X = np.hstack([xb, np.ones((xb.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(X, bvals, rcond=None)
    full = np.hstack([domain.nodes, np.ones((domain.n_nodes, 1))]) @ coef
    full[domain.boundary_mask] = bvals
    return full


def initial_map(domain, bvals, seed, noise=0.25):
    """Affine extension plus seeded uniform noise on interior nodes."""
    base = affine_extension(domain, bvals)
    osc = float(np.max(bvals.max(axis=0) - bvals.min(axis=0))) if bvals.size else 0.0
    rng = np.random.default_rng(seed)
    interior = ~domain.boundary_mask
    base[interior] += noise * osc * rng.uniform(-1.0, 1.0, size=(int(interior.sum()), bvals.shape[1]))
    return base


# --- optimizer ------------------------------------------------------------------

@dataclass
class ConvergenceRecord:
    converged: bool
    status: str
    iterations: int
    evaluations: int
    final_area: float
    grad_sup: float
    resets: int
    area_history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("area_history")
        return d


@dataclass
class SolveResult:
    map: GridMap
    record: ConvergenceRecord


def _two_loop(g, pairs):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    s, y, _ = pairs[-1]
    q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def minimize_area(values, domain, config):
    """L-BFGS with backtracking on interior node values; boundary rows untouched."""
    values = np.array(values, dtype=float)
    interior = ~domain.boundary_mask
    shape = values[interior].shape

    def evaluate(x):
        values[interior] = x.reshape(shape)
        a, g = area_and_gradient_of(values, domain)
        return a, g[interior].ravel()

    x = values[interior].ravel().copy()
    a, g = evaluate(x)
    evals, resets = 1, 0
    history = [a]
    pairs = []
    it = 0
    status = "max_iters"
    while True:
        gsup = float(np.max(np.abs(g), initial=0.0))
        if gsup < config.grad_tol:
            status = "converged"
            break
        if it >= config.max_iters:
            break
        it += 1

        d = _two_loop(g, pairs) if pairs else -g
        slope = float(np.dot(g, d))
        if slope >= 0:
            pairs.clear()
            resets += 1
            d, slope = -g, -float(np.dot(g, g))

        accepted = False
        for attempt in range(2):
            step = 1.0
            for _ in range(config.max_backtracks):
                xn = x + step * d
                an, gn = evaluate(xn)
                evals += 1
                if an <= a + config.armijo * step * slope:
                    accepted = True
                    break
                step *= config.shrink
            if accepted or not pairs:
                break
            # quasi-Newton direction failed: drop the memory, retry plain descent
            pairs.clear()
            resets += 1
            d, slope = -g, -float(np.dot(g, g))
        if not accepted:
            values[interior] = x.reshape(shape)
            status = "stalled"
            break

        s, y = xn - x, gn - g
        sy = float(np.dot(s, y))
        if config.memory > 0 and sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
            if len(pairs) > config.memory:
                pairs.pop(0)
        x, a, g = xn, an, gn
        history.append(a)

    values[interior] = x.reshape(shape)
    rec = ConvergenceRecord(status == "converged", status, it, evals, a,
                            float(np.max(np.abs(g), initial=0.0)), resets, history)
    return values, rec


def solve_dirichlet(domain, boundary, init=None, config=None, noise=0.25):
    """Minimize the discrete graph area with the given boundary values.

    ``init`` is a GridMap (its boundary rows are overwritten by the data), an
    integer seed for the randomized affine start, or None for ``config.seed``.
    Raises NonConvergenceError / StallError carrying the best iterate.
    """
    config = config or SolverConfig()
    bvals = boundary.values_on(domain)
    mask = domain.boundary_mask
    if isinstance(init, GridMap):
        if init.domain != domain:
            raise InvalidInputError("initial map lives on a different domain")
        if init.n != bvals.shape[1]:
            raise InvalidInputError("initial map has the wrong target dimension")
        start = init.values.copy()
        start[mask] = bvals
    else:
        seed = config.seed if init is None else int(init)
        start = initial_map(domain, bvals, seed, noise)
    vals, rec = minimize_area(start, domain, config)
    out = GridMap(domain, vals)
    if rec.status == "stalled":
        raise StallError(f"line search stalled after {rec.iterations} iterations "
                         f"(grad sup {rec.grad_sup:.3e})", best=out, record=rec)
    if not rec.converged:
        raise NonConvergenceError(f"no convergence in {rec.iterations} iterations "
                                  f"(grad sup {rec.grad_sup:.3e})", best=out, record=rec)
    return SolveResult(out, rec)


# --- uniqueness experiment --------------------------------------------------------

@dataclass
class ExperimentConfig:
    n_inits: int = 5
    constraint: str = "SupOne"
    uniqueness_tol: float = 1e-6
    noise: float = 0.25
    seeds: Optional[list] = None
    homotopy_samples: int = 11
    vanishing_tol: float = 1e-6
    audit_tol: float = 1e-12

    def __post_init__(self):
        if self.n_inits < 2:
            raise InvalidInputError("n_inits must be at least 2")
        ConstraintSet(self.constraint)
        if self.seeds is not None and len(self.seeds) != self.n_inits:
            raise InvalidInputError("seeds must list one seed per initialization")
        if self.homotopy_samples < 3:
            raise InvalidInputError("need at least 3 homotopy samples")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidInputError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ExperimentReport:
    runs: list
    pairs: list
    verdict: Optional[bool]
    reason: str

    def to_dict(self):
        return {"runs": self.runs, "pairs": self.pairs, "verdict": self.verdict, "reason": self.reason}


def thread_count():
    try:
        return max(1, int(os.environ.get("MINGRAPH_THREADS", "1")))
    except ValueError:
        return 1


def audit(f, constraint, tol=1e-12):
    lam = singular_field(f)
    c = ConstraintSet(constraint)
    measure = c.measure(lam)
    return {
        "constraint": c.kind.value,
        "max_measure": float(measure.max()),
        "threshold": c.threshold,
        "in_set": bool(np.all(measure <= c.threshold + tol)),
        "max_singular_value": float(lam.max()),
        "simplices_outside_closure": int((~in_closure_psi_form(lam)).sum()),
    }


def uniqueness_experiment(domain, boundary, exp=None, config=None):
    """Solve from several random starts and compare the solutions pairwise."""
    exp = exp or ExperimentConfig()
    config = config or SolverConfig()
    seeds = list(exp.seeds) if exp.seeds is not None else [config.seed + i for i in range(exp.n_inits)]

    def run(seed):
        try:
            res = solve_dirichlet(domain, boundary, int(seed), config, exp.noise)
            return res.map, res.record, None
        except NonConvergenceError as err:
            return err.best, err.record, str(err)

    workers = min(thread_count(), len(seeds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]

    runs, failed = [], []
    for seed, (fmap, rec, err) in zip(seeds, results):
        entry = {"seed": int(seed), "final_area": rec.final_area, "iterations": rec.iterations,
                 "grad_sup": rec.grad_sup, "converged": err is None, "status": rec.status,
                 "audit": audit(fmap, exp.constraint, exp.audit_tol)}
        if err is not None:
            entry["error"] = err
            failed.append(int(seed))
        runs.append(entry)

    ts = np.linspace(0.0, 1.0, exp.homotopy_samples)
    pairs = []
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            f0, f1 = results[i][0], results[j][0]
            dist = float(np.max(np.abs(f0.values - f1.values)))
            areas = area_along(f0, f1, ts)
            second = np.diff(areas, 2)
            van = gradient_vanishing_diagnostic(f0, f1, 0.5, exp.vanishing_tol)
            pairs.append({"runs": [i, j], "sup_distance": dist, "areas": areas,
                          "min_second_difference": float(second.min()),
                          "max_p_squared": van.max_p_squared})

    if failed:
        return ExperimentReport(runs, pairs, None, f"non-convergent runs (seeds {failed})")
    close = all(p["sup_distance"] < exp.uniqueness_tol for p in pairs)
    audited = all(r["audit"]["in_set"] for r in runs)
    verdict = close and audited
    if verdict:
        reason = "all solutions agree and stay in the constraint set"
    elif not audited:
        reason = "a converged solution leaves the constraint set"
    else:
        reason = "solutions differ beyond uniqueness_tol"
    return ExperimentReport(runs, pairs, verdict, reason)
