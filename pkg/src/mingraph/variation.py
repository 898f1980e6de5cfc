"""First and second variation of the discrete graph area.

With ``f_t = f + t V`` the differential moves linearly, ``J(t) = J + t K``.
In singular frames of J (``J a_i = lam_i b_i``) write ``p[i, a] = <K a_i, b_a>``.
The second derivative of the area splits into

* (I)   the quadratic form in the diagonal entries p[i, i], i < rank,
* (II)  the pairs (i, j), i < j < rank,
* (III) every remaining entry, each with weight 1/(1 + lam^2) of its paired
        image direction,

plus a term from ``nabla_V V`` and a curvature term, both identically zero for
straight-line variations into flat R^n. All terms are integrated against the
graph volume element ``sqrt(det g) dx``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InvalidInputError
from .graphgeom import GridMap, area_of, area_and_gradient_of, jacobians_of, sqrt_dets
from .svkit import svd_batch, RANK_TOL

FD_STEP = 1e-3
FD_REL_TOL = 1e-5


@dataclass
class VariationReport:
    A0: float
    Aprime: float
    I: float
    II: float
    III: float
    IV: float
    V: float
    Asecond_analytic: float
    Asecond_fd: float
    fd_stencil: int = 3

    def to_dict(self):
        d = asdict(self)
        d.pop("fd_stencil")
        return d

    @property
    def rel_err(self):
        scale = max(abs(self.Asecond_fd), 1e-300)
        if self.Asecond_fd == 0.0 and self.Asecond_analytic == 0.0:
            return 0.0
        return abs(self.Asecond_analytic - self.Asecond_fd) / scale


def _values(x, domain):
    v = x.values if isinstance(x, GridMap) else np.asarray(x, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != domain.n_nodes:
        raise InvalidInputError("variation field does not match the domain")
    return v


def p_matrices(J, K, frames=None):
    """Batched p[s, i, a] = <K_s a_i, b_a> with frames of J (computed if omitted)."""
    lam, A, B, rank = svd_batch(J) if frames is None else frames
    return np.einsum("sai,sab->sib", np.einsum("sab,sbi->sai", K, A), B), (lam, A, B, rank)


def p_matrix(f, V, simplex_id):
    """m x n matrix of p-values on one simplex."""
    dom = f.domain
    if not 0 <= simplex_id < dom.mesh.count:
        raise InvalidInputError("simplex id out of range")
    J = jacobians_of(f.values, dom)[simplex_id]
    K = jacobians_of(_values(V, dom), dom)[simplex_id]
    P, _ = p_matrices(J[None], K[None])
    return P[0]


def term_densities(lam, P, rank, diag_denominator="squared"):
    """Per-simplex integrands of (I), (II), (III), each of shape (S,).

    ``diag_denominator="one_plus_lambda"`` weights the diagonal entries of (I)
    by ``(1 + lam_i)^-2`` instead of ``(1 + lam_i^2)^-2``. Only useful for
    checking the two candidate weights against finite differences.
    """
    S, m, n = P.shape
    q = min(m, n)
    G = 1.0 + lam**2                                        # (S, m)
    idx_i = np.arange(m)[None, :, None]
    idx_a = np.arange(n)[None, None, :]
    r = np.asarray(rank).reshape(S, 1, 1)
    live = (np.arange(q)[None, :] < r[:, :, 0])              # (S, q)

    d = np.where(live, np.einsum("sii->si", P[:, :q, :q]), 0.0)
    Gq, lq = G[:, :q], lam[:, :q]
    if diag_denominator == "squared":
        diag = (d**2 / Gq**2).sum(axis=1)
    elif diag_denominator == "one_plus_lambda":
        diag = (d**2 / (1.0 + lq) ** 2).sum(axis=1)
    else:
        raise ValueError(diag_denominator)
    c = lq * d / Gq
    term1 = diag + c.sum(axis=1) ** 2 - (c**2).sum(axis=1)

    Pq = P[:, :q, :q]
    Pt = np.swapaxes(Pq, 1, 2)
    pair = (Pq**2 + Pt**2 - 2.0 * lq[:, :, None] * lq[:, None, :] * Pq * Pt) / (Gq[:, :, None] * Gq[:, None, :])
    upper = (np.arange(q)[:, None] < np.arange(q)[None, :])[None]
    both_live = live[:, :, None] & live[:, None, :]
    term2 = np.where(upper & both_live, pair, 0.0).sum(axis=(1, 2))

    # image-direction weights: G of the paired index, 1 beyond m
    Ga = np.ones((S, n))
    Ga[:, :q] = Gq
    in_r_i = idx_i < r
    in_r_a = idx_a < r
    coef = np.where(in_r_a, 1.0 / Ga[:, None, :], 1.0 / G[:, :, None])
    term3 = np.where(in_r_i & in_r_a, 0.0, coef * P**2).sum(axis=(1, 2))
    return term1, term2, term3


def first_variation_density(lam, P):
    q = min(P.shape[1], P.shape[2])
    d = np.einsum("sii->si", P[:, :q, :q])
    return (lam[:, :q] * d / (1.0 + lam[:, :q] ** 2)).sum(axis=1)


def _fd_second(f_vals, V_vals, domain, h, stencil):
    A = lambda s: area_of(f_vals + s * V_vals, domain)
    if stencil == 3:
        return (A(h) - 2.0 * A(0.0) + A(-h)) / (h * h)
    return (-A(2 * h) + 16.0 * A(h) - 30.0 * A(0.0) + 16.0 * A(-h) - A(-2 * h)) / (12.0 * h * h)


def second_variation_terms(f, V, frames=None, h=FD_STEP, diag_denominator="squared"):
    """Analytic decomposition of A''(0) along ``f + tV`` plus a finite-difference check."""
    dom = f.domain
    Vv = _values(V, dom)
    if np.any(Vv[dom.boundary_mask] != 0.0):
        raise InvalidInputError("variation field must vanish on the boundary")
    J = jacobians_of(f.values, dom)
    K = jacobians_of(Vv, dom)
    P, (lam, A, B, rank) = p_matrices(J, K, frames)
    dv = sqrt_dets(J) * dom.mesh.volume
    t1, t2, t3 = term_densities(lam, P, rank, diag_denominator)
    I = math.fsum((t1 * dv).tolist())
    II = math.fsum((t2 * dv).tolist())
    III = math.fsum((t3 * dv).tolist())
    IV = 0.0    # nabla_V V = 0 along straight lines in R^n
    Vterm = 0.0  # flat target, no curvature
    analytic = I + II + III + IV + Vterm
    aprime = math.fsum((first_variation_density(lam, P) * dv).tolist())

    fd = _fd_second(f.values, Vv, dom, h, 3)
    stencil = 3
    if abs(fd - analytic) > FD_REL_TOL * max(abs(fd), abs(analytic)):
        fd = _fd_second(f.values, Vv, dom, h, 5)
        stencil = 5
    return VariationReport(area_of(f.values, dom), aprime, I, II, III, IV, Vterm, analytic, fd, stencil)


def aprime_from_gradient(f, V):
    """<area gradient, V>: the first variation through the assembled gradient."""
    _, g = area_and_gradient_of(f.values, f.domain)
    return float(np.sum(g * _values(V, f.domain)))


def area_along(f0, f1, ts):
    """Areas of the straight-line homotopy ``(1 - t) f0 + t f1`` at each t."""
    if f0.domain != f1.domain:
        raise InvalidInputError("maps live on different domains")
    if f0.n != f1.n:
        raise InvalidInputError("maps have different target dimensions")
    mask = f0.boundary_mask
    if np.max(np.abs(f0.values[mask] - f1.values[mask]), initial=0.0) > 1e-12:
        raise InvalidInputError("maps disagree on the boundary")
    return [area_of((1.0 - t) * f0.values + t * f1.values, f0.domain) for t in ts]


def local_terms_hold_sign_conditions(lam, tol=0.0):
    """Per-simplex check of the pairwise-product and psi conditions."""
    from .svkit import max_pair_product, psi
    return (max_pair_product(lam) <= 1.0 + tol) & (psi(lam) >= -tol)
