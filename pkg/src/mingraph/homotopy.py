"""Singular values along straight-line homotopies and the confinement checks.

Along ``f_t = (1 - t) f0 + t f1`` the differential at a fixed point is
``J(t) = (1 - t) J0 + t J1``, so each partial sum ``S_k(t)`` of singular values
(a Ky Fan norm of J(t)) is convex in t. Freezing singular frames at one
parameter t0 gives the linear lower bounds ``F_k(t) = sum_{i<=k} <J(t) a_i, b_i>``
touching ``S_k`` at t0. The checks below measure all of this numerically.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInputError, PreconditionError
from .graphgeom import GridMap, jacobian, jacobians_of
from .majorization import MAJ_TOL, partial_sums
from .svkit import (
    ConstraintSet, RegionStatus, REGION_TOL, classify_region, svd_batch,
)
from .variation import p_matrices

LINEARITY_TOL = 1e-8


@dataclass
class HomotopyTrace:
    ts: np.ndarray
    J0: np.ndarray
    J1: np.ndarray
    lambdas: np.ndarray      # (T, m), descending
    mus: np.ndarray          # (T, m), chord between lambdas[0] and lambdas[-1]
    F: np.ndarray            # (T, m)
    S: np.ndarray            # (T, m)
    t0_index: int
    simplex_id: Optional[int] = None
    continued: Optional[np.ndarray] = None   # (T, 2) branch-continued values, m == 2 only

    @property
    def m(self):
        return self.lambdas.shape[1]

    @property
    def t0(self):
        return float(self.ts[self.t0_index])

    def jacobian_at(self, t):
        return (1.0 - t) * self.J0 + t * self.J1

    def lambda_at(self, t):
        return svd_batch(self.jacobian_at(t))[0]


def _chord(ts, t1, t2, y1, y2):
    w = ((ts - t1) / (t2 - t1))[..., None]
    return (1.0 - w) * y1[..., None, :] + w * y2[..., None, :]


def _trace_arrays(J0, J1, ts, t0_index):
    """Batched core: J0, J1 of shape (B, n, m); returns lam, F, S of shape (B, T, m)."""
    ts = np.asarray(ts, dtype=float)
    Jt = (1.0 - ts)[None, :, None, None] * J0[:, None] + ts[None, :, None, None] * J1[:, None]
    lam, A, B, _ = svd_batch(Jt)
    m, n = J0.shape[-1], J0.shape[-2]
    q = min(m, n)
    a0 = A[:, t0_index]                       # (B, m, m)
    b0 = B[:, t0_index]                       # (B, n, n)
    # <J(t) a_i, b_i> for i < q; entries beyond n have no partner direction
    diag = np.einsum("btai,bai->bti", np.einsum("btkj,bji->btki", Jt, a0[:, :, :q]), b0[:, :, :q])
    pairs = np.zeros(lam.shape)
    pairs[..., :q] = diag
    return lam, np.cumsum(pairs, axis=-1), np.cumsum(lam, axis=-1)


def _continue_branches(lam):
    out = lam.copy()
    for k in range(2, len(out)):
        guess = 2 * out[k - 1] - out[k - 2]
        if np.abs(out[k][::-1] - guess).sum() < np.abs(out[k] - guess).sum():
            out[k] = out[k][::-1]
    return out


def trace_jacobians(J0, J1, ts=None, t0=None, simplex_id=None):
    """Trace of the homotopy between two linear maps (n x m matrices)."""
    J0 = np.asarray(J0, dtype=float)
    J1 = np.asarray(J1, dtype=float)
    if J0.shape != J1.shape or J0.ndim != 2:
        raise InvalidInputError("J0 and J1 must be matrices of the same shape")
    ts = np.linspace(0.0, 1.0, 101) if ts is None else np.asarray(ts, dtype=float)
    if ts.ndim != 1 or ts.size < 2 or np.any(np.diff(ts) <= 0) or ts[0] < 0 or ts[-1] > 1:
        raise InvalidInputError("ts must be strictly increasing inside [0, 1]")
    if t0 is None:
        t0_index = ts.size // 2
    else:
        t0_index = int(np.argmin(np.abs(ts - t0)))
    lam, F, S = _trace_arrays(J0[None], J1[None], ts, t0_index)
    lam, F, S = lam[0], F[0], S[0]
    mus = _chord(ts, ts[0], ts[-1], lam[0], lam[-1])
    cont = _continue_branches(lam) if lam.shape[1] == 2 else None
    return HomotopyTrace(ts, J0, J1, lam, mus, F, S, t0_index, simplex_id, cont)


def _check_pair(f0, f1):
    if f0.domain != f1.domain:
        raise InvalidInputError("maps live on different domains")
    if f0.n != f1.n:
        raise InvalidInputError("maps have different target dimensions")
    mask = f0.boundary_mask
    if np.max(np.abs(f0.values[mask] - f1.values[mask]), initial=0.0) > 1e-12:
        raise InvalidInputError("maps disagree on the boundary")


def trace(f0, f1, simplex_id, ts=None, t0=None):
    """Trace at one simplex of the homotopy between two grid maps."""
    _check_pair(f0, f1)
    return trace_jacobians(jacobian(f0, simplex_id), jacobian(f1, simplex_id), ts, t0, simplex_id)


# --- majorization along the segment ------------------------------------------

@dataclass
class Prop1Report:
    t1: float
    t2: float
    majorization_slack: float
    majorizes: bool
    equality_level: int
    linearity_residual: Optional[float]
    F_linearity_residual: float
    F_t0_gap: float
    F_minus_S_max: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def _interior(ts, t1, t2):
    return (ts > t1) & (ts < t2)


def check_prop1(tr, t1=None, t2=None, tol=MAJ_TOL):
    """Majorization of lambda(t) by the chord, equality propagation and F_k identities."""
    ts = tr.ts
    t1 = float(ts[0]) if t1 is None else float(t1)
    t2 = float(ts[-1]) if t2 is None else float(t2)
    if not (ts[0] <= t1 < t2 <= ts[-1]):
        raise InvalidInputError("need ts[0] <= t1 < t2 <= ts[-1]")
    l1, l2 = tr.lambda_at(t1), tr.lambda_at(t2)
    inner = _interior(ts, t1, t2)
    lam = tr.lambdas[inner]
    mu = _chord(ts[inner], t1, t2, l1, l2)

    if lam.shape[0]:
        gap = partial_sums(mu) - partial_sums(lam)         # (T', m)
        slack = float(gap.min())
        eq = np.abs(gap) <= tol
        levels = np.where(eq.all(axis=1), eq.shape[1], np.argmin(eq, axis=1))
        level = int(levels.max())
    else:
        slack, level = 0.0, 0

    lin_res = None
    if level >= 1:
        lin_res = float(np.abs(lam[:, :level] - mu[:, :level]).max())

    win = (ts >= t1) & (ts <= t2)
    Fw, tw = tr.F[win], ts[win]
    Fchord = _chord(tw, tw[0], tw[-1], Fw[0], Fw[-1])
    F_lin = float(np.abs(Fw - Fchord).max())
    F_gap = float(np.abs(tr.F[tr.t0_index] - tr.S[tr.t0_index]).max())
    F_over = float((tr.F - tr.S).max())

    scale = 1.0 + float(np.abs(tr.lambdas).max())
    passed = (
        slack >= -tol
        and F_lin <= tol * scale
        and F_over <= tol * scale
        and F_gap <= tol * scale
        and (lin_res is None or lin_res <= LINEARITY_TOL * scale)
    )
    return Prop1Report(t1, t2, slack, slack >= -tol, level, lin_res, F_lin, F_gap, F_over, bool(passed))


def prop1_batch(J0, J1, ts, t0_index=None):
    """Vectorized majorization and F_k measurements for many (J0, J1) pairs.

    Returns per pair: minimum majorization slack over interior samples,
    F_k deviation from linearity, max(F_k - S_k), and |F_k(t0) - S_k(t0)|.
    """
    ts = np.asarray(ts, dtype=float)
    if t0_index is None:
        t0_index = ts.size // 2
    lam, F, S = _trace_arrays(np.asarray(J0, float), np.asarray(J1, float), ts, t0_index)
    mu = _chord(ts, ts[0], ts[-1], lam[:, 0], lam[:, -1])
    gap = partial_sums(mu) - partial_sums(lam)
    slack = gap[:, 1:-1].min(axis=(1, 2))
    Fchord = _chord(ts, ts[0], ts[-1], F[:, 0], F[:, -1])
    F_lin = np.abs(F - Fchord).max(axis=(1, 2))
    F_over = (F - S).max(axis=(1, 2))
    F_gap = np.abs(F[:, t0_index] - S[:, t0_index]).max(axis=-1)
    return slack, F_lin, F_over, F_gap


# --- confinement to the closed region -----------------------------------------

@dataclass
class Prop2Report:
    statuses: list
    all_in_closure: bool
    boundary_samples_big: int
    linearity_residual: Optional[float]
    linear_ok: bool
    pairwise_checked: int
    pairwise_violations: int
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def _endpoint_ok(lam, constraint, tol):
    if constraint is None or constraint == "region":
        return classify_region(lam, tol).status is not RegionStatus.EXTERIOR
    if not isinstance(constraint, ConstraintSet):
        constraint = ConstraintSet(constraint)
    return bool(constraint.contains(lam, tol))


def check_prop2(tr, constraint=None, tol=1e-8):
    """Closure confinement, boundary-forced linearity and the pairwise product bound.

    ``constraint`` is a :class:`ConstraintSet` (or its kind name); ``None`` or
    ``"region"`` only requires the endpoints to lie in the closed region.
    """
    ts = tr.ts
    lam0, lam1 = tr.lambdas[0], tr.lambdas[-1]
    if not (_endpoint_ok(lam0, constraint, tol) and _endpoint_ok(lam1, constraint, tol)):
        raise PreconditionError("homotopy endpoints are not in the given set")

    inner = _interior(ts, ts[0], ts[-1])
    statuses, big = [], 0
    for lam in tr.lambdas[inner]:
        v = classify_region(lam, tol)
        statuses.append(v.status.value)
        if v.status is RegionStatus.BOUNDARY and lam[0] > 1.0:
            big += 1
    all_in = RegionStatus.EXTERIOR.value not in statuses

    lin_res, lin_ok = None, True
    if big:
        lin_res = float(np.abs(tr.lambdas - tr.mus).max())
        lin_ok = lin_res <= LINEARITY_TOL * (1.0 + float(np.abs(tr.lambdas).max()))

    checked = violations = 0
    if tr.m >= 2:
        for lam, mu in zip(tr.lambdas[inner], tr.mus[inner]):
            if mu[0] > 1.0 > mu[1]:
                checked += 1
                bound = (0.5 * (mu[0] + mu[1])) ** 2
                if lam[0] * lam[1] > min(bound, 1.0) + tol:
                    violations += 1
    passed = all_in and lin_ok and violations == 0
    return Prop2Report(statuses, all_in, big, lin_res, lin_ok, checked, violations, passed)


def exterior_count_batch(J0, J1, ts, tol=1e-8):
    """Number of interior samples classified exterior, per (J0, J1) pair."""
    from .svkit import max_pair_product, psi
    ts = np.asarray(ts, dtype=float)
    lam, _, _ = _trace_arrays(np.asarray(J0, float), np.asarray(J1, float), ts, ts.size // 2)
    lam = lam[:, 1:-1]
    ext = (max_pair_product(lam) > 1.0 + tol) | (psi(lam) < -tol)
    return ext.sum(axis=1)


# --- Lambda_k classification --------------------------------------------------

@dataclass
class LambdaClassification:
    ts: np.ndarray
    level: np.ndarray     # smallest k with t in Lambda_k, values in 1..m+1

    def member(self, k):
        """Boolean mask of samples lying in Lambda_k."""
        return self.level <= k


def classify_lambda(tr, tol=REGION_TOL):
    m = tr.m
    levels = []
    for lam in tr.lambdas:
        if classify_region(lam, tol).status is RegionStatus.INTERIOR:
            levels.append(1)
            continue
        k = next((k for k in range(2, m + 1) if lam[k - 1] < 1.0 - tol), m + 1)
        levels.append(k)
    return LambdaClassification(tr.ts.copy(), np.array(levels, dtype=int))


def trace_to_csv(tr, classification=None):
    if classification is None:
        classification = classify_lambda(tr)
    m = tr.m
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"{p}_{i + 1}" for p in ("lambda", "mu", "F", "S") for i in range(m)] + ["lambda_class"])
    for k, t in enumerate(tr.ts):
        row = [repr(float(t))]
        for arr in (tr.lambdas, tr.mus, tr.F, tr.S):
            row += [repr(float(x)) for x in arr[k]]
        row.append(str(int(classification.level[k])))
        w.writerow(row)
    return buf.getvalue()


# --- vanishing of the variation's differential ----------------------------------

@dataclass
class VanishingReport:
    t: float
    max_p_squared: float
    argmax_simplex: int
    passed: bool
    per_simplex: np.ndarray = field(repr=False)

    def to_dict(self):
        return {"t": self.t, "max_p_squared": self.max_p_squared,
                "argmax_simplex": self.argmax_simplex, "passed": self.passed}


def gradient_vanishing_diagnostic(f0, f1, t=0.5, tol=1e-6):
    """Max over simplices of ``sum p_ia^2`` for V = f1 - f0 in the frames of f_t."""
    _check_pair(f0, f1)
    if not 0.0 < t < 1.0:
        raise InvalidInputError("t must lie in (0, 1)")
    dom = f0.domain
    Vv = f1.values - f0.values
    Jt = jacobians_of((1.0 - t) * f0.values + t * f1.values, dom)
    K = jacobians_of(Vv, dom)
    P, _ = p_matrices(Jt, K)
    per = (P**2).sum(axis=(1, 2))
    k = int(np.argmax(per))
    return VanishingReport(float(t), float(per[k]), k, bool(per[k] <= tol), per)
