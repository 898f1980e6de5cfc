"""Singular values of small matrices and the convexity region of the area density.

The area density of a graph is ``prod(sqrt(1 + lam_i**2))`` where ``lam`` is the
descending vector of singular values of the differential. The region ``M`` is
the open set of non-negative vectors with all pairwise products below one and
``psi(lam) > 0``; on its closure the density is convex.

Everything here works on single vectors as well as on stacks (leading batch
axes), because the homotopy and grid code call these in bulk.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, InvalidInputError

RANK_TOL = 1e-10
REGION_TOL = 1e-9
_MAX_SWEEPS = 60


@dataclass(frozen=True)
class SingularValueVector:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise InvalidInputError("singular value vector must be a non-empty 1-d array")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidInputError("singular values must be finite and non-negative")
        if np.any(np.diff(v) > 0):
            raise InvalidInputError("singular values must be sorted in descending order")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_unsorted(cls, values):
        v = np.asarray(values, dtype=float)
        return cls(v[_desc_order(v)])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values.tolist())


@dataclass(frozen=True)
class SingularFrames:
    """Orthonormal frames with ``J @ domain_frame[:, i] == values[i] * target_frame[:, i]``.

    Frames are stored column-wise: ``domain_frame`` is m x m, ``target_frame``
    is n x n.
    """

    domain_frame: np.ndarray
    target_frame: np.ndarray
    rank: int


class RegionStatus(str, enum.Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    EXTERIOR = "Exterior"


class BoundaryCase(str, enum.Enum):
    TWO_ONES = "TwoOnes"
    PAIRWISE_PRODUCT_ONE = "PairwiseProductOne"
    H_EQUALITY = "HEquality"


@dataclass(frozen=True)
class RegionVerdict:
    status: RegionStatus
    boundary_case: Optional[BoundaryCase]
    psi: float
    h_lhs: Optional[float]
    max_pair_product: float = field(default=0.0)

    def to_dict(self):
        return {
            "status": self.status.value,
            "boundary_case": None if self.boundary_case is None else self.boundary_case.value,
            "psi": self.psi,
            "h_lhs": self.h_lhs,
            "max_pair_product": self.max_pair_product,
        }


class ConstraintKind(str, enum.Enum):
    SUP_ONE = "SupOne"
    SUM_LINEAR = "SumLinear"
    SUM_SQUARES = "SumSquares"
    SUM_SQRT = "SumSqrt"


_THRESHOLDS = {
    ConstraintKind.SUP_ONE: 1.0,
    ConstraintKind.SUM_LINEAR: 2.0,
    ConstraintKind.SUM_SQUARES: 2.0,
    ConstraintKind.SUM_SQRT: 2.0,
}


@dataclass(frozen=True)
class ConstraintSet:
    """One of the four symmetric convex sets for which uniqueness is guaranteed."""

    kind: ConstraintKind

    def __post_init__(self):
        try:
            kind = ConstraintKind(self.kind)
        except ValueError:
            names = [k.value for k in ConstraintKind]
            raise InvalidInputError(f"unknown constraint set {self.kind!r}, expected one of {names}") from None
        object.__setattr__(self, "kind", kind)

    @property
    def threshold(self):
        return _THRESHOLDS[self.kind]

    def measure(self, lam):
        """The quantity compared against ``threshold`` (batched over leading axes)."""
        lam = _as_array(lam)
        if self.kind is ConstraintKind.SUP_ONE:
            return lam.max(axis=-1)
        if self.kind is ConstraintKind.SUM_LINEAR:
            return lam.sum(axis=-1)
        if self.kind is ConstraintKind.SUM_SQUARES:
            return (lam**2).sum(axis=-1)
        return np.sqrt(1.0 + lam**2).sum(axis=-1)

    def contains(self, lam, tol=0.0):
        return self.measure(lam) <= self.threshold + tol


def _as_array(lam):
    return np.asarray(getattr(lam, "values", lam), dtype=float)


def _desc_order(v):
    # stable: equal entries keep their original order
    return np.argsort(-v, axis=-1, kind="stable")


def svd_batch(J, rank_tol=RANK_TOL):
    """One-sided cyclic Jacobi SVD of a stack of n x m matrices.

    Returns ``(lam, A, B, rank)`` with ``lam`` of shape (..., m) sorted
    descending, domain frames ``A`` (..., m, m), target frames ``B`` (..., n, n)
    and integer ranks. Columns are rotated pairwise in a fixed (p, q) order
    until every pair is orthogonal to machine precision, so results are
    reproducible bit for bit.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim < 2:
        raise InvalidInputError("expected an n x m matrix (or a stack of them)")
    if not np.all(np.isfinite(J)):
        raise InvalidInputError("matrix has non-finite entries")
    batch = J.shape[:-2]
    n, m = J.shape[-2:]
    if n < 1 or m < 1:
        raise InvalidInputError("matrix must have at least one row and one column")

    W = J.reshape((-1, n, m)).copy()
    V = np.broadcast_to(np.eye(m), (W.shape[0], m, m)).copy()
    eps = np.finfo(float).eps
    for _ in range(_MAX_SWEEPS):
        rotated = False
        for p in range(m - 1):
            for q in range(p + 1, m):
                wp, wq = W[:, :, p], W[:, :, q]
                alpha = np.einsum("bi,bi->b", wp, wp)
                beta = np.einsum("bi,bi->b", wq, wq)
                gamma = np.einsum("bi,bi->b", wp, wq)
                active = np.abs(gamma) > eps * np.sqrt(alpha * beta)
                if not active.any():
                    continue
                rotated = True
                g = np.where(active, gamma, 1.0)
                with np.errstate(over="ignore"):
                    # |zeta| -> inf gives t = 0, i.e. no rotation
                    zeta = (beta - alpha) / (2.0 * g)
                    sgn = np.where(zeta >= 0, 1.0, -1.0)
                    t = sgn / (np.abs(zeta) + np.hypot(1.0, zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                c = np.where(active, c, 1.0)[:, None]
                s = np.where(active, s, 0.0)[:, None]
                W[:, :, p], W[:, :, q] = c * wp - s * wq, s * wp + c * wq
                vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
                V[:, :, p], V[:, :, q] = c * vp - s * vq, s * vp + c * vq
        if not rotated:
            break

    norms = np.sqrt(np.einsum("bij,bij->bj", W, W))
    order = _desc_order(norms)
    lam = np.take_along_axis(norms, order, axis=-1)
    A = np.take_along_axis(V, order[:, None, :], axis=-1)
    W = np.take_along_axis(W, order[:, None, :], axis=-1)
    rank = (lam > rank_tol).sum(axis=-1)

    q = min(m, n)
    live = lam[:, :q] > rank_tol
    Bcols = np.where(live[:, None, :], W[:, :, :q] / np.where(live, lam[:, :q], 1.0)[:, None, :], 0.0)
    # Householder QR of [b_1..b_r, 0.., I] completes the target frame; its
    # leading columns reproduce the b_i up to sign.
    M = np.concatenate([Bcols, np.broadcast_to(np.eye(n), (W.shape[0], n, n))], axis=-1)
    Q, _ = np.linalg.qr(M)
    sign = np.where(np.einsum("bki,bki->bi", Q[:, :, :q], Bcols) < 0, -1.0, 1.0)
    Q[:, :, :q] *= sign[:, None, :]
    B = Q

    return (
        lam.reshape(batch + (m,)),
        A.reshape(batch + (m, m)),
        B.reshape(batch + (n, n)),
        rank.reshape(batch),
    )


def singular_values(J, rank_tol=RANK_TOL):
    """Singular value vector and frames of a single n x m matrix."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2:
        raise InvalidInputError("expected a 2-d matrix")
    lam, A, B, rank = svd_batch(J, rank_tol)
    return SingularValueVector(lam), SingularFrames(A, B, int(rank))


def reconstruct(lam, frames):
    """Rebuild ``J = sum_i lam_i b_i a_i^T`` from a decomposition."""
    lam = _as_array(lam)
    A, B = frames.domain_frame, frames.target_frame
    q = min(A.shape[0], B.shape[0])
    return (B[:, :q] * lam[:q]) @ A[:, :q].T


def area_density(lam):
    """Pointwise area integrand ``prod_i sqrt(1 + lam_i^2)`` (>= 1)."""
    lam = _as_array(lam)
    return np.sqrt(np.prod(1.0 + lam**2, axis=-1))


def psi(lam):
    """``prod(1 - x_i^2) + sum_i x_i^2 prod_{j != i}(1 - x_j^2)``.

    Non-negative on the closure of the convexity region, zero on its boundary.
    """
    lam = _as_array(lam)
    c = 1.0 - lam**2
    m = lam.shape[-1]
    total = np.prod(c, axis=-1)
    for i in range(m):
        others = np.delete(c, i, axis=-1)
        total = total + lam[..., i] ** 2 * np.prod(others, axis=-1)
    return total


def h_value(tail):
    """``H(x_2, ..., x_m) = sum 1/(1 - x_i^2)``, defined for entries in [0, 1)."""
    x = _as_array(tail)
    if np.any(x >= 1.0):
        raise DomainError("H is only defined for entries strictly below 1")
    if np.any(x < 0):
        raise DomainError("H is only defined for non-negative entries")
    return np.sum(1.0 / (1.0 - x**2), axis=-1)


def max_pair_product(lam):
    """Largest ``lam_i * lam_j`` with i < j (the two largest entries, lam >= 0)."""
    lam = _as_array(lam)
    if lam.shape[-1] < 2:
        return np.zeros(lam.shape[:-1])
    top = -np.sort(-lam, axis=-1)[..., :2]
    return top[..., 0] * top[..., 1]


def in_closure_psi_form(lam):
    """Closure membership through pairwise products and ``psi`` (batched)."""
    lam = _as_array(lam)
    return (max_pair_product(lam) <= 1.0) & (psi(lam) >= 0.0)


def in_closure_h_form(lam):
    """Closure membership through the case split on the largest singular value.

    Either ``lam_1 <= 1``, or ``lam_1 > 1``, ``lam_2 < 1``, ``lam_1 lam_2 <= 1``
    and ``1/(1 - lam_1^2) + H(lam_2, ..., lam_m) <= m - 1``.
    """
    lam = -np.sort(-_as_array(lam), axis=-1)
    m = lam.shape[-1]
    l1 = lam[..., 0]
    if m == 1:
        return np.ones(l1.shape, dtype=bool)
    l2 = lam[..., 1]
    big = (l1 > 1.0) & (l2 < 1.0) & (l1 * l2 <= 1.0)
    tail = np.where(big[..., None], lam[..., 1:], 0.0)
    lead = np.where(big, 1.0 / (1.0 - np.where(big, l1, 2.0) ** 2), 0.0)
    return (l1 <= 1.0) | (big & (lead + h_value(tail) <= m - 1))


def boundary_indicators(lam):
    """Distances of the defining indicators from their critical values.

    Returns an array (batched) holding ``min(|lam_1 lam_2 - 1|, |psi|, |lam_1 - 1|)``;
    the two closure tests can only disagree where this is tiny.
    """
    lam = -np.sort(-_as_array(lam), axis=-1)
    out = np.minimum(np.abs(max_pair_product(lam) - 1.0), np.abs(psi(lam)))
    out = np.minimum(out, np.abs(lam[..., 0] - 1.0))
    if lam.shape[-1] >= 2:
        out = np.minimum(out, np.abs(lam[..., 1] - 1.0))
    return out


def h_lhs(lam):
    """``1/(1 - lam_1^2) + H(lam_2, ...)`` or None where undefined."""
    lam = _as_array(lam)
    if lam[0] == 1.0 or np.any(lam[1:] >= 1.0):
        return None
    return float(1.0 / (1.0 - lam[0] ** 2) + h_value(lam[1:]))


def classify_region(lam, tol=REGION_TOL):
    """Interior / boundary / exterior verdict for a singular value vector."""
    lam = _as_array(lam)
    lam = lam[_desc_order(lam)]
    m = lam.size
    p = float(psi(lam))
    prod = float(max_pair_product(lam))
    hl = h_lhs(lam)
    if m == 1:
        # no pairwise constraint; psi = 1 identically
        return RegionVerdict(RegionStatus.INTERIOR, None, p, hl, prod)

    if prod < 1.0 - tol and p > tol:
        return RegionVerdict(RegionStatus.INTERIOR, None, p, hl, prod)
    if prod > 1.0 + tol or p < -tol:
        return RegionVerdict(RegionStatus.EXTERIOR, None, p, hl, prod)

    l1, l2 = lam[0], lam[1]
    if l1 <= 1.0 + tol:
        case = BoundaryCase.TWO_ONES
    elif abs(l1 * l2 - 1.0) <= tol:
        case = BoundaryCase.PAIRWISE_PRODUCT_ONE
    else:
        case = BoundaryCase.H_EQUALITY
    return RegionVerdict(RegionStatus.BOUNDARY, case, p, hl, prod)


def in_constraint_set(lam, c):
    if not isinstance(c, ConstraintSet):
        c = ConstraintSet(c)
    return bool(c.contains(lam))
