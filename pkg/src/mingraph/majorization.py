"""Partial-sum orderings of vectors.

``x`` is l-majorized by ``y`` when the first ``l`` partial sums of the
descending rearrangement of ``x`` are bounded by those of ``y``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

MAJ_TOL = 1e-9


@dataclass(frozen=True)
class MajorizationReport:
    l: int
    holds: bool
    equal_upto: int
    partial_sums_x: np.ndarray
    partial_sums_y: np.ndarray

    @property
    def slack(self):
        """Smallest ``S_k(y) - S_k(x)`` over k <= l; negative means a violation."""
        return float(np.min(self.partial_sums_y[: self.l] - self.partial_sums_x[: self.l]))

    def to_dict(self):
        return {
            "l": self.l,
            "holds": self.holds,
            "equal_upto": self.equal_upto,
            "slack": self.slack,
            "partial_sums_x": self.partial_sums_x.tolist(),
            "partial_sums_y": self.partial_sums_y.tolist(),
        }


def descending(x):
    """Descending rearrangement along the last axis; ties keep their order."""
    x = np.asarray(x, dtype=float)
    return np.take_along_axis(x, np.argsort(-x, axis=-1, kind="stable"), axis=-1)


def partial_sums(x):
    return np.cumsum(descending(x), axis=-1)


def _check(x, y, l):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise InvalidInputError("vectors must have the same length")
    m = x.shape[-1]
    if not 1 <= l <= m:
        raise InvalidInputError(f"l must lie in [1, {m}], got {l}")
    return x, y


def _equal_prefix(dx, dy, tol):
    eq = np.abs(dx - dy) <= tol
    # number of leading True entries
    return int(np.argmin(eq)) if not eq.all() else eq.size


def l_majorizes(x, y, l=None, tol=MAJ_TOL):
    """Report whether ``x`` is l-majorized by ``y`` (``x <=_l y``)."""
    if l is None:
        l = np.shape(x)[-1]
    x, y = _check(x, y, l)
    sx, sy = partial_sums(x), partial_sums(y)
    holds = bool(np.all(sx[:l] <= sy[:l] + tol))
    return MajorizationReport(l, holds, _equal_prefix(sx[:l], sy[:l], tol), sx, sy)


def asymp_l(x, y, l, tol=MAJ_TOL):
    """True iff the first ``l`` descending partial sums of x and y coincide."""
    x, y = _check(x, y, l)
    return bool(np.all(np.abs(partial_sums(x)[:l] - partial_sums(y)[:l]) <= tol))


def majorization_slack(x, y):
    """Batched ``min_k (S_k(y) - S_k(x))`` over all k."""
    return np.min(partial_sums(y) - partial_sums(x), axis=-1)


def weak_hull_test(x, z, tol=MAJ_TOL):
    """Is ``x`` in the convex hull of ``{(d_i z_pi(i))}: d_i in {0,1}, pi a permutation}``?

    For non-negative vectors this hull is exactly the set of vectors weakly
    sub-majorized by ``z``, so the test reduces to partial-sum inequalities.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise InvalidInputError("vectors must have the same length")
    if np.any(x < 0) or np.any(z < 0):
        raise InvalidInputError("weak_hull_test requires non-negative entries")
    return bool(np.all(partial_sums(x) <= partial_sums(z) + tol))
