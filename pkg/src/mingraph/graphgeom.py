"""Piecewise-linear maps on simplicially split boxes and their graph area.

Every grid cell is cut into m! simplices (Freudenthal/Kuhn split: one simplex
per ordering of the coordinate axes), so the differential of the interpolant
is constant on each simplex and the area integrand is integrated exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInputError
from .svkit import svd_batch, RANK_TOL


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``origin + [0, extents]`` sampled by ``resolution`` nodes per axis."""

    extents: tuple
    resolution: tuple
    origin: tuple = None

    def __post_init__(self):
        ext = tuple(float(e) for e in self.extents)
        res = tuple(int(r) for r in self.resolution)
        org = tuple(0.0 for _ in ext) if self.origin is None else tuple(float(o) for o in self.origin)
        if len(ext) not in (1, 2, 3):
            raise InvalidInputError("domain dimension must be 1, 2 or 3")
        if len(res) != len(ext) or len(org) != len(ext):
            raise InvalidInputError("extents, resolution and origin must have equal length")
        if any(e <= 0 or not math.isfinite(e) for e in ext):
            raise InvalidInputError("extents must be positive and finite")
        if any(r < 2 for r in res):
            raise InvalidInputError("need at least 2 nodes per axis")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "origin", org)

    @property
    def dim(self):
        return len(self.extents)

    @property
    def spacing(self):
        return tuple(e / (r - 1) for e, r in zip(self.extents, self.resolution))

    @property
    def n_nodes(self):
        return int(np.prod(self.resolution))

    @property
    def volume(self):
        return float(np.prod(self.extents))

    def to_dict(self):
        return {"dim": self.dim, "extents": list(self.extents),
                "resolution": list(self.resolution), "origin": list(self.origin)}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        dim = d.pop("dim", None)
        unknown = set(d) - {"extents", "resolution", "origin"}
        if unknown:
            raise InvalidInputError(f"unknown domain keys: {sorted(unknown)}")
        dom = cls(d["extents"], d["resolution"], d.get("origin"))
        if dim is not None and dim != dom.dim:
            raise InvalidInputError("domain 'dim' disagrees with extents")
        return dom

    def node_index_grid(self):
        """(N, m) integer multi-indices in row-major order (last axis fastest)."""
        grids = np.meshgrid(*[np.arange(r) for r in self.resolution], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @cached_property
    def nodes(self):
        """(N, m) node coordinates."""
        idx = self.node_index_grid()
        return np.asarray(self.origin) + idx * np.asarray(self.spacing)

    @cached_property
    def boundary_mask(self):
        idx = self.node_index_grid()
        res = np.asarray(self.resolution)
        return np.any((idx == 0) | (idx == res - 1), axis=-1)

    @cached_property
    def mesh(self):
        return _Simplices.build(self)


@dataclass(frozen=True)
class _Simplices:
    nodes: np.ndarray      # (S, m+1) node ids
    grads: np.ndarray      # (S, m+1, m) gradients of the nodal basis functions
    volume: float          # common simplex volume

    @classmethod
    def build(cls, dom):
        m = dom.dim
        res = np.asarray(dom.resolution)
        h = np.asarray(dom.spacing)
        strides = np.array([int(np.prod(res[k + 1:])) for k in range(m)])
        perms = list(itertools.permutations(range(m)))

        perm_nodes, perm_grads = [], []
        for perm in perms:
            offs = [np.zeros(m, dtype=int)]
            for ax in perm:
                step = offs[-1].copy()
                step[ax] += 1
                offs.append(step)
            offs = np.array(offs)
            E = (offs[1:] - offs[0]) * h             # rows are edge vectors
            Einv = np.linalg.inv(E)
            D = np.zeros((m + 1, m))
            D[1:] = Einv.T
            D[0] = -D[1:].sum(axis=0)
            perm_nodes.append(offs @ strides)
            perm_grads.append(D)

        cells = np.stack(np.meshgrid(*[np.arange(r - 1) for r in res], indexing="ij"), axis=-1)
        base = (cells.reshape(-1, m) @ strides)
        nodes = (base[:, None, None] + np.array(perm_nodes)[None]).reshape(-1, m + 1)
        grads = np.broadcast_to(np.array(perm_grads)[None], (base.size, len(perms), m + 1, m))
        vol = float(np.prod(h)) / math.factorial(m)
        return cls(nodes, np.ascontiguousarray(grads.reshape(-1, m + 1, m)), vol)

    @property
    def count(self):
        return self.nodes.shape[0]


@dataclass
class GridMap:
    """Node values of a piecewise-linear map D -> R^n."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.domain.n_nodes:
            raise InvalidInputError(f"expected {self.domain.n_nodes} node values, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("grid map values must be finite")
        self.values = v

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def boundary_mask(self):
        return self.domain.boundary_mask

    @classmethod
    def from_function(cls, domain, fn):
        vals = np.asarray(fn(domain.nodes), dtype=float)
        return cls(domain, vals.reshape(domain.n_nodes, -1))

    def with_values(self, values):
        return GridMap(self.domain, values)

    def copy(self):
        return GridMap(self.domain, self.values.copy())


@dataclass(frozen=True)
class MetricSample:
    g: np.ndarray
    sqrt_det: float


def jacobians_of(values, domain):
    """(S, n, m) per-simplex differentials for raw node values."""
    mesh = domain.mesh
    return np.einsum("ska,skj->saj", values[mesh.nodes], mesh.grads)


def jacobians(f):
    return jacobians_of(f.values, f.domain)


def jacobian(f, simplex_id):
    mesh = f.domain.mesh
    if not 0 <= simplex_id < mesh.count:
        raise InvalidInputError(f"simplex id {simplex_id} out of range [0, {mesh.count})")
    return f.values[mesh.nodes[simplex_id]].T @ mesh.grads[simplex_id]


def metric_of(J):
    """Batched ``g = I + J^T J``."""
    J = np.asarray(J, dtype=float)
    m = J.shape[-1]
    return np.eye(m) + np.einsum("...ai,...aj->...ij", J, J)


def pullback_metric(J):
    """Metric of the graph of a linear map J, with its volume factor."""
    g = metric_of(J)
    return MetricSample(g, float(np.sqrt(np.linalg.det(g))))


def sqrt_dets(J):
    return np.sqrt(np.linalg.det(metric_of(J)))


def area_of(values, domain):
    mesh = domain.mesh
    terms = sqrt_dets(jacobians_of(values, domain)) * mesh.volume
    return math.fsum(terms.tolist())


def area(f):
    """Total area of the graph of the piecewise-linear interpolant."""
    return area_of(f.values, f.domain)


def area_and_gradient_of(values, domain):
    """Area and its gradient w.r.t. node values, boundary rows zeroed."""
    mesh = domain.mesh
    J = jacobians_of(values, domain)
    g = metric_of(J)
    sd = np.sqrt(np.linalg.det(g))
    a = math.fsum((sd * mesh.volume).tolist())
    # d sqrt(det g) / dJ = sqrt(det g) * J g^{-1}
    dJ = (sd * mesh.volume)[:, None, None] * (J @ np.linalg.inv(g))
    local = np.einsum("saj,skj->ska", dJ, mesh.grads)      # (S, m+1, n)
    n = values.shape[1]
    flat_idx = (mesh.nodes[:, :, None] * n + np.arange(n)).ravel()
    grad = np.bincount(flat_idx, weights=local.ravel(), minlength=domain.n_nodes * n)
    grad = grad.reshape(domain.n_nodes, n)
    grad[domain.boundary_mask] = 0.0
    return a, grad


def area_gradient(f):
    return area_and_gradient_of(f.values, f.domain)[1]


def singular_field(f, with_frames=False, rank_tol=RANK_TOL):
    """Per-simplex singular value vectors, shape (S, m)."""
    lam, A, B, rank = svd_batch(jacobians(f), rank_tol)
    if with_frames:
        return lam, A, B, rank
    return lam
