"""Structured box grids carrying scalar, vector and tensor samples.

Derivatives are second-order central differences at interior nodes.  At the
box boundary a grid is either periodic (wrap-around stencil) or uses
second-order one-sided stencils.  All operators are exact on polynomials of
degree <= 2.

Index conventions (fixed once, used everywhere):

* ``grad`` appends the derivative index last: ``(f (x) nabla)[..., k] = d_k f``,
  so for a vector field ``u`` the gradient is ``G[i, k] = d_k u_i``.
* left curl ``(nabla x E)[i, j] = eps[i, p, q] d_p E[q, j]``
* right curl ``(E x nabla)[i, j] = eps[j, p, q] d_p E[i, q]``
* Saint-Venant incompatibility: ``nabla x E x nabla = curl_left(curl_right(E))``.

Worked component example: for ``E = diag(y**2, 0, 0)``,
``curl_right(E)[0, 2] = eps[2, 1, 0] d_y E[0, 0] = -2y`` and then
``curl_left(.)[2, 2] = eps[2, 1, 0] d_y(-2y) = 2`` is the only non-zero
component of the double curl.

A grid may be affine rather than axis aligned: node ``(i, j, k)`` sits at
``origin + axes @ (i*dx, j*dy, k*dz)``.  Cartesian derivatives account for
``axes``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, SymmetryError

MIN_COUNT = 5
MAX_NODES = 2**31

EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0


@dataclass(frozen=True)
class Grid3:
    origin: tuple = (0.0, 0.0, 0.0)
    spacing: tuple = (1.0, 1.0, 1.0)
    counts: tuple = (MIN_COUNT,) * 3
    periodic: bool = False
    axes: tuple = field(default=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)))

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))
        object.__setattr__(self, "counts", tuple(int(v) for v in self.counts))
        object.__setattr__(self, "axes", tuple(tuple(float(v) for v in r) for r in np.asarray(self.axes)))
        if len(self.counts) != 3 or min(self.counts) < MIN_COUNT:
            raise GridError(f"grid counts must be >= {MIN_COUNT} on every axis, got {self.counts}")
        if min(self.spacing) <= 0.0:
            raise GridError(f"spacing must be positive, got {self.spacing}")
        if np.prod(self.counts, dtype=np.int64) > MAX_NODES:
            raise GridError(f"grid of {self.counts} nodes is too large")
        if abs(np.linalg.det(np.asarray(self.axes))) < 1e-14:
            raise GridError("grid axes are degenerate")

    @classmethod
    def box(cls, lo, hi, counts, periodic=False):
        """Axis-aligned grid spanning ``[lo, hi]`` (non-periodic) or ``[lo, hi)``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        counts = np.broadcast_to(np.asarray(counts, dtype=int), (3,))
        n = counts if periodic else counts - 1
        return cls(tuple(lo), tuple((hi - lo) / n), tuple(counts), periodic)

    @property
    def shape(self):
        return self.counts

    @property
    def size(self):
        return int(np.prod(self.counts))

    @property
    def axes_matrix(self):
        return np.asarray(self.axes)

    def local_coords(self):
        """Unrotated offsets ``(i*dx, j*dy, k*dz)`` per node, shape counts + (3,)."""
        ticks = [np.arange(n) * d for n, d in zip(self.counts, self.spacing)]
        return np.stack(np.meshgrid(*ticks, indexing="ij"), axis=-1)

    def nodes(self):
        """Node coordinates, shape ``counts + (3,)``."""
        return np.asarray(self.origin) + self.local_coords() @ self.axes_matrix.T

    def corners(self):
        n = np.asarray(self.counts) if self.periodic else np.asarray(self.counts) - 1
        hi = np.asarray(self.origin) + self.axes_matrix @ (n * np.asarray(self.spacing))
        return np.asarray(self.origin), hi

    def interior(self, margin=1):
        """Boolean mask of nodes at least ``margin`` nodes away from the box edge."""
        mask = np.ones(self.counts, dtype=bool)
        if self.periodic or margin == 0:
            return mask
        for ax, n in enumerate(self.counts):
            idx = [slice(None)] * 3
            idx[ax] = slice(0, margin)
            mask[tuple(idx)] = False
            idx[ax] = slice(n - margin, n)
            mask[tuple(idx)] = False
        return mask

    def with_frame(self, origin, axes):
        return Grid3(tuple(origin), self.spacing, self.counts, self.periodic, tuple(map(tuple, axes)))


def refine(grid: Grid3, factor: int = 2) -> Grid3:
    """Same box, spacing divided by ``factor``."""
    factor = int(factor)
    if factor < 2:
        raise ValueError("refinement factor must be >= 2")
    c = np.asarray(grid.counts, dtype=np.int64)
    counts = c * factor if grid.periodic else (c - 1) * factor + 1
    if np.prod(counts) > MAX_NODES:
        raise GridError(f"refined grid {tuple(counts)} is too large")
    return Grid3(
        grid.origin,
        tuple(d / factor for d in grid.spacing),
        tuple(int(v) for v in counts),
        grid.periodic,
        grid.axes,
    )


@dataclass(frozen=True)
class Field:
    """Samples on a grid.  ``values.shape == grid.counts + rank_shape``."""

    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[:3] != self.grid.counts:
            raise GridError(f"field shape {v.shape} does not match grid {self.grid.counts}")
        object.__setattr__(self, "values", v)

    @property
    def rank(self):
        return self.values.ndim - 3

    @classmethod
    def from_function(cls, grid, fn):
        """Sample ``fn(points)`` where ``points`` has shape ``counts + (3,)``."""
        return cls(grid, fn(grid.nodes()))

    def with_values(self, values):
        return Field(self.grid, values)


def derivative(values, axis, step, periodic):
    """Second-order derivative of an array along one grid axis."""
    if periodic:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * step)
    return np.gradient(values, step, axis=axis, edge_order=2)


def grad_values(values, grid: Grid3):
    """Cartesian gradient of raw samples; derivative index appended last."""
    parts = [
        derivative(values, ax, grid.spacing[ax], grid.periodic) for ax in range(3)
    ]
    d_local = np.stack(parts, axis=-1)
    M = grid.axes_matrix
    if np.array_equal(M, np.eye(3)):
        return d_local
    return d_local @ np.linalg.inv(M)


def grad(f: Field) -> Field:
    return Field(f.grid, grad_values(f.values, f.grid))


def div(f: Field) -> Field:
    """Divergence of a vector field (or of a tensor field over its last slot)."""
    g = grad_values(f.values, f.grid)
    return Field(f.grid, np.trace(g, axis1=-2, axis2=-1))


def curl(f: Field) -> Field:
    """``(nabla x v)_i = eps_ipq d_p v_q`` for a vector field."""
    g = grad_values(f.values, f.grid)  # g[..., q, p] = d_p v_q
    return Field(f.grid, np.einsum("ipq,...qp->...i", EPS, g))


def curl_left(E: Field) -> Field:
    g = grad_values(E.values, E.grid)  # g[..., q, j, p] = d_p E_qj
    return Field(E.grid, np.einsum("ipq,...qjp->...ij", EPS, g))


def curl_right(E: Field) -> Field:
    g = grad_values(E.values, E.grid)  # g[..., i, q, p] = d_p E_iq
    return Field(E.grid, np.einsum("jpq,...iqp->...ij", EPS, g))


def rms(values, mask=None):
    """Root mean square of the pointwise Frobenius norm over masked nodes."""
    v = np.asarray(values, dtype=float)
    sq = v.reshape(v.shape[:3] + (-1,)) ** 2
    per_node = sq.sum(axis=-1)
    if mask is not None:
        per_node = per_node[mask]
    return float(np.sqrt(np.mean(per_node)))


def saint_venant_residual(E: Field, sym_tol=1e-10):
    """Double curl ``nabla x E x nabla`` and its interior RMS norm.

    Only nodes two layers away from a non-periodic boundary enter the norm.
    """
    v = E.values
    if E.rank != 2:
        raise ValueError("Saint-Venant residual needs a rank-2 tensor field")
    scale = max(float(np.max(np.abs(v))), 1.0)
    if np.max(np.abs(v - np.swapaxes(v, -1, -2))) > sym_tol * scale:
        raise SymmetryError("strain field is not symmetric")
    inc = curl_left(curl_right(E))
    return inc, rms(inc.values, E.grid.interior(2))
