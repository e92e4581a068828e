"""Compatibility of the relaxed metric and reconstruction from compatible strain.

A shape field ``A`` is compatible when the metric ``g = h A^-1`` it induces is
Ricci-flat.  Christoffel symbols and the Ricci tensor are evaluated with the
flat finite-difference derivative of :mod:`shapekin.grid`:

    Gamma^i_bc = 1/2 g^ia (d_c g_ab + d_b g_ac - d_a g_bc)
    R_bc = d_i Gamma^i_bc - d_c Gamma^i_bi + Gamma^i_ij Gamma^j_bc - Gamma^i_cj Gamma^j_bi

Large grids are processed in slabs along the first axis with a two-node
halo, which keeps memory bounded and gives the same numbers as a
whole-grid evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import RegularGridInterpolator

from .errors import (
    FrameError,
    GridError,
    IncompatibleFieldError,
    MetricError,
    NonPositiveShapeError,
    SingularCompressionError,
)
from .grid import EPS, Field, Grid3, grad_values, rms, saint_venant_residual
from .motion import Motion
from .tensor import I3, T, func_of_hsym, is_h_orthogonal, sym

HALO = 2
SLAB_NODES = 400_000
SV_THRESHOLD = 1e-6


# --------------------------------------------------------------------------
# slab machinery


def _block_grad(values, spacing, periodic_axis0, periodic, axes):
    """Gradient of a block; axis 0 is treated as non-periodic (halo rows)."""
    parts = []
    for ax in range(3):
        if ax == 0 and not periodic_axis0:
            parts.append(np.gradient(values, spacing[0], axis=0, edge_order=2))
        elif periodic:
            parts.append(
                (np.roll(values, -1, axis=ax) - np.roll(values, 1, axis=ax)) / (2.0 * spacing[ax])
            )
        else:
            parts.append(np.gradient(values, spacing[ax], axis=ax, edge_order=2))
    d = np.stack(parts, axis=-1)
    if np.array_equal(axes, I3):
        return d
    return d @ np.linalg.inv(axes)


def _slabbed(kernel, values, grid: Grid3, out_shape, slab_nodes=SLAB_NODES):
    """Apply ``kernel(block, dfun)`` slab by slab along axis 0.

    ``dfun(block_values)`` differentiates a block consistently with the grid's
    boundary treatment; rows within ``HALO`` of an artificial slab cut are
    discarded.
    """
    nx, ny, nz = grid.counts
    axes = grid.axes_matrix
    out = np.empty(grid.counts + tuple(out_shape))
    rows = max(1, slab_nodes // (ny * nz))
    if rows >= nx:
        def dfun(v):
            return _block_grad(v, grid.spacing, grid.periodic, grid.periodic, axes)
        out[...] = kernel(values, dfun)
        return out

    def dfun(v):
        return _block_grad(v, grid.spacing, False, grid.periodic, axes)

    for lo in range(0, nx, rows):
        hi = min(lo + rows, nx)
        if grid.periodic:
            idx = np.arange(lo - HALO, hi + HALO) % nx
            block = values[idx]
            keep = slice(HALO, HALO + hi - lo)
        else:
            blo, bhi = max(lo - HALO, 0), min(hi + HALO, nx)
            if bhi - blo < 3:
                blo = max(min(blo, nx - 3), 0)
            block = values[blo:bhi]
            keep = slice(lo - blo, lo - blo + hi - lo)
        out[lo:hi] = kernel(block, dfun)[keep]
    return out


# --------------------------------------------------------------------------
# curvature


def _christoffel_block(g, dfun):
    dg = dfun(g)  # dg[..., a, b, c] = d_c g_ab
    ginv = np.linalg.inv(g)
    lower = dg + np.swapaxes(dg, -1, -2) - np.moveaxis(dg, -1, -3)
    return 0.5 * np.einsum("...ia,...abc->...ibc", ginv, lower)


def _ricci_block(g, dfun):
    G = _christoffel_block(g, dfun)
    dG = dfun(G)  # dG[..., i, b, c, k] = d_k Gamma^i_bc
    div = np.einsum("...ibci->...bc", dG)
    dtr = np.einsum("...ibic->...bc", dG)
    tr = np.einsum("...iij->...j", G)
    quad = np.einsum("...j,...jbc->...bc", tr, G) - np.einsum("...icj,...jbi->...bc", G, G)
    return div - dtr + quad


def _check_metric_field(g: Field):
    if g.rank != 2:
        raise MetricError("metric field must be rank 2")
    v = g.values
    if not np.all(np.isfinite(v)):
        raise MetricError("metric field has non-finite samples")
    w = np.linalg.eigvalsh(sym(v))
    bad = w.min(axis=-1) <= 0.0
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise MetricError(f"metric not positive definite at node {node}")


def christoffel(g: Field) -> Field:
    """Christoffel symbols ``Gamma[..., i, b, c]`` of a metric field."""
    _check_metric_field(g)
    vals = _slabbed(_christoffel_block, g.values, g.grid, (3, 3, 3))
    return Field(g.grid, vals)


def ricci(g: Field, margin=HALO):
    """Ricci tensor field of ``g`` and its RMS over interior nodes."""
    _check_metric_field(g)
    vals = _slabbed(_ricci_block, g.values, g.grid, (3, 3))
    return Field(g.grid, vals), rms(vals, g.grid.interior(margin))


def _inc_block(E, dfun):
    dE = dfun(E)  # dE[..., i, q, p] = d_p E_iq
    cr = np.einsum("jpq,...iqp->...ij", EPS, dE)
    dcr = dfun(cr)
    return np.einsum("ipq,...qjp->...ij", EPS, dcr)


def saint_venant_slabbed(E: Field):
    """Same as :func:`shapekin.grid.saint_venant_residual`, memory bounded."""
    if E.grid.size <= SLAB_NODES:
        return saint_venant_residual(E)
    v = E.values
    scale = max(float(np.max(np.abs(v))), 1.0)
    if np.max(np.abs(v - np.swapaxes(v, -1, -2))) > 1e-10 * scale:
        from .errors import SymmetryError

        raise SymmetryError("strain field is not symmetric")
    vals = _slabbed(_inc_block, v, E.grid, (3, 3))
    return Field(E.grid, vals), rms(vals, E.grid.interior(2))


# --------------------------------------------------------------------------
# shape fields


@dataclass
class CompatReport:
    grid: Grid3
    ricci_field: Field
    ricci_rms: float
    saint_venant_rms: float
    saint_venant_field: Field | None = None
    field_scale: float = 1.0
    convergence: list = field(default_factory=list)

    def observed_orders(self):
        """Observed convergence orders between consecutive refinement levels."""
        out = []
        for (h0, e0), (h1, e1) in zip(self.convergence, self.convergence[1:]):
            ok = e0 > 0.0 and e1 > 0.0
            out.append(float(np.log(e0 / e1) / np.log(h0 / h1)) if ok else float("nan"))
        return out

    def to_dict(self):
        d = {
            "counts": list(self.grid.counts),
            "spacing": list(self.grid.spacing),
            "ricci_rms": self.ricci_rms,
            "saint_venant_rms": self.saint_venant_rms,
            "field_scale": self.field_scale,
        }
        if self.convergence:
            d["convergence"] = [{"spacing": h, "ricci_rms": e} for h, e in self.convergence]
            d["observed_orders"] = self.observed_orders()
        return d


def _check_shape_field(A: Field, h):
    hr = np.linalg.cholesky(h)  # h = C C^T, C^T A C^-T is symmetric for h-symmetric A
    B = sym(T(hr) @ A.values @ np.linalg.inv(T(hr)))
    w = np.linalg.eigvalsh(B)
    bad = w.min(axis=-1) <= 0.0
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonPositiveShapeError(f"shape tensor not positive definite at node {node}", node=node)


def metric_from_shape(A: Field, h=None) -> Field:
    """Spatial relaxed metric ``g = h A^-1`` per node."""
    h = I3 if h is None else np.asarray(h, dtype=float)
    _check_shape_field(A, h)
    return Field(A.grid, sym(h @ np.linalg.inv(A.values)))


def compat_residual_from_shape(A: Field, h=None, saint_venant=True) -> CompatReport:
    """Finite-deformation compatibility residual of a shape field.

    Reports the Ricci tensor of ``g = h A^-1`` and, as the linearized
    counterpart, the Saint-Venant residual of ``h D`` with ``D = ln(A)/2``
    (``h D`` is the symmetric, index-lowered form of the h-symmetric D).
    """
    h = I3 if h is None else np.asarray(h, dtype=float)
    g = metric_from_shape(A, h)
    R, r = ricci(g)
    sv_field, sv = None, float("nan")
    if saint_venant:
        D = 0.5 * func_of_hsym(A.values, h, "ln", check=False)
        sv_field, sv = saint_venant_slabbed(Field(A.grid, sym(h @ D)))
    scale = rms(A.values)
    return CompatReport(A.grid, R, r, sv, sv_field, scale)


def _potential_gradient(q: Field):
    Q = grad_values(q.values, q.grid)
    d = np.linalg.det(Q)
    bad = ~(d > 0.0)
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SingularCompressionError(f"potential gradient has det <= 0 at node {node}")
    return Q


def shape_from_potential(qhat: Field, h=None) -> Field:
    """Shape field ``A = Q Q^+`` with ``Q = qhat (x) nabla``, node by node.

    The grid of ``qhat`` parametrizes the pseudo-placement of the relaxed
    body; the value at a node is the shape tensor at the current position
    ``qhat(node)``.
    """
    h = I3 if h is None else np.asarray(h, dtype=float)
    Q = _potential_gradient(qhat)
    return Field(qhat.grid, Q @ np.linalg.inv(h) @ T(Q) @ h)


def shape_from_inverse_potential(p: Field, h=None) -> Field:
    """Shape field on a current-position grid from ``p = qhat^-1``.

    ``p`` maps current positions to pseudo-placement positions, so
    ``Q = (p (x) nabla)^-1`` and ``A = Q Q^+`` is sampled at the grid nodes
    themselves.  The induced metric is the pull-back of ``h`` by ``p`` and is
    therefore flat.
    """
    h = I3 if h is None else np.asarray(h, dtype=float)
    P = _potential_gradient(p)
    Q = np.linalg.inv(P)
    return Field(p.grid, Q @ np.linalg.inv(h) @ T(Q) @ h)


@dataclass(frozen=True)
class PseudoMotionGauge:
    """Isometry of the pseudo-placement: ``r' = R (r - o) + o + translation``."""

    R: np.ndarray = field(default_factory=lambda: I3.copy())
    o: tuple = (0.0, 0.0, 0.0)
    translation: tuple = (0.0, 0.0, 0.0)


def pseudo_gauge_transform(qhat: Field, gauge: PseudoMotionGauge, h=None) -> Field:
    """Re-express a potential after moving the pseudo-placement by an isometry.

    The potential's values are unchanged; its domain nodes move, which is
    recorded in the (affine) grid frame.
    """
    R = np.asarray(gauge.R, dtype=float)
    if R.shape != (3, 3) or not is_h_orthogonal(R, h, tol=1e-12):
        raise FrameError("gauge rotation must be h-orthogonal with det > 0")
    o = np.asarray(gauge.o, dtype=float)
    origin = R @ (np.asarray(qhat.grid.origin) - o) + o + np.asarray(gauge.translation)
    grid = qhat.grid.with_frame(origin, R @ qhat.grid.axes_matrix)
    return Field(grid, qhat.values)


def factorize_jacobian(motion: Motion, pseudo: Motion, t, X=(0.0, 0.0, 0.0)):
    """Split ``J = (qhat (x) nabla) Jhat`` at material label X.

    Returns ``(J, qhat_grad, Jhat)``.
    """
    J = motion.F(t, X)
    Jhat = pseudo.F(t, X)
    Q = J @ np.linalg.inv(Jhat)
    return J, Q, Jhat


# --------------------------------------------------------------------------
# Cesaro-Volterra


def _snap(grid: Grid3, X):
    X = np.asarray(X, dtype=float)
    xi = np.linalg.solve(grid.axes_matrix, X - np.asarray(grid.origin)) / np.asarray(grid.spacing)
    idx = np.rint(xi).astype(int)
    if np.any(idx < 0) or np.any(idx >= np.asarray(grid.counts)):
        raise GridError(f"point {X} lies outside the grid")
    return tuple(int(i) for i in idx)


def _cv_fields(E: Field):
    """Per-node integrands: ``P_ik = E_ik - K_ikj y_j`` and ``K_ikj``.

    ``K_ikj = d_j E_ik - d_i E_jk`` is twice the (1,3)-antisymmetric part of
    ``E (x) nabla`` with slots ordered (i, k, j).
    """
    dE = grad_values(E.values, E.grid)  # dE[..., a, b, c] = d_c E_ab
    K = dE - np.einsum("...jki->...ikj", dE)
    y = E.grid.nodes()
    P = E.values - np.einsum("...ikj,...j->...ik", K, y)
    return P, K


def _staircase(f, grid: Grid3, start, order):
    """Integrate ``f[..., k] dy_k`` along a node-snapped staircase for every node.

    ``f`` has shape ``counts + rest + (3,)`` with the last slot contracted with
    the path direction.  ``order`` is the sequence of grid axes followed.
    """
    M = grid.axes_matrix
    total = 0.0
    base = np.asarray(start)
    for n_seg, a in enumerate(order):
        fa = np.tensordot(f, M[:, a], axes=([-1], [0]))
        C = cumulative_trapezoid(fa, dx=grid.spacing[a], axis=a, initial=0.0)
        # subtract value at the segment start (index start[a] along axis a)
        C = C - np.take(C, [base[a]], axis=a)
        # freeze not-yet-travelled axes at their start index
        for b in order[n_seg + 1:]:
            C = np.take(C, [base[b]], axis=b)
        total = total + C
    return np.broadcast_to(total, f.shape[:-1]).copy() if np.ndim(total) else total


def cesaro_volterra(
    E: Field,
    X_arb=None,
    u_arb=(0.0, 0.0, 0.0),
    Omega_arb=None,
    path=(0, 1, 2),
    threshold=SV_THRESHOLD,
    check=True,
    samples_per_segment=64,
) -> Field:
    """Reconstruct a Cauchy potential ``u`` with ``sym(u (x) nabla) = E``.

    ``X_arb`` is snapped to the nearest grid node (default: the first node).
    ``path`` is either a permutation of grid axes, giving an axis-aligned
    staircase through grid nodes (trapezoid rule, exact for fields linear
    along the path), or a list of waypoints; in the latter case every node is
    reached by the polyline ``X_arb -> waypoints... -> node`` and ``E`` is
    linearly interpolated along it.

    Unless ``check`` is False, the Saint-Venant residual of ``E`` must be at
    most ``threshold`` times the RMS of ``E``.
    """
    grid = E.grid
    v = E.values
    if np.max(np.abs(v - np.swapaxes(v, -1, -2))) > 1e-10 * max(1.0, float(np.max(np.abs(v)))):
        from .errors import SymmetryError

        raise SymmetryError("strain field is not symmetric")
    if check:
        _, sv = saint_venant_residual(E)
        if sv > threshold * rms(v):
            raise IncompatibleFieldError(
                f"Saint-Venant residual {sv:.3e} exceeds {threshold:g} x field rms {rms(v):.3e}"
            )
    start = (0, 0, 0) if X_arb is None else _snap(grid, X_arb)
    nodes = grid.nodes()
    Xa = nodes[start]
    Omega = np.zeros((3, 3)) if Omega_arb is None else np.asarray(Omega_arb, dtype=float)
    if np.max(np.abs(Omega + Omega.T)) > 1e-14 * max(1.0, np.max(np.abs(Omega))):
        raise ValueError("Omega_arb must be antisymmetric")

    P, K = _cv_fields(E)
    if all(isinstance(a, (int, np.integer)) for a in path):
        order = tuple(int(a) for a in path)
        if sorted(order) != [0, 1, 2]:
            raise ValueError("staircase path must be a permutation of (0, 1, 2)")
        Pint = _staircase(P, grid, start, order)
        Kint = _staircase(np.swapaxes(K, -1, -2), grid, start, order)  # (i, j, k)
        integral = Pint + np.einsum("...ij,...j->...i", Kint, nodes)
    else:
        integral = _polyline(E, grid, Xa, [np.asarray(w, float) for w in path], nodes,
                             samples_per_segment)
    u = np.asarray(u_arb, dtype=float) + (nodes - Xa) @ Omega.T + integral
    return Field(grid, u)


def _polyline(E: Field, grid: Grid3, Xa, waypoints, nodes, m):
    """Polyline quadrature with linearly interpolated integrand (small grids)."""
    if not np.array_equal(grid.axes_matrix, I3) or grid.periodic:
        raise GridError("polyline paths need an axis-aligned, non-periodic grid")
    ticks = [grid.origin[a] + grid.spacing[a] * np.arange(grid.counts[a]) for a in range(3)]
    dE = grad_values(E.values, grid)
    K = dE - np.einsum("...jki->...ikj", dE)
    interp_E = RegularGridInterpolator(ticks, E.values.reshape(grid.counts + (9,)))
    interp_K = RegularGridInterpolator(ticks, K.reshape(grid.counts + (27,)))
    lo, hi = grid.corners()
    X = nodes.reshape(-1, 3)
    pts = [np.broadcast_to(Xa, X.shape)] + [np.broadcast_to(w, X.shape) for w in waypoints] + [X]
    out = np.zeros_like(X)
    s = np.linspace(0.0, 1.0, m + 1)
    wts = np.full(m + 1, 1.0 / m)
    wts[[0, -1]] *= 0.5
    for a, b in zip(pts[:-1], pts[1:]):
        y = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
        if np.any(y < lo - 1e-12) or np.any(y > hi + 1e-12):
            raise GridError("integration path leaves the grid")
        y = np.clip(y, lo, hi)
        Ey = interp_E(y.reshape(-1, 3)).reshape(y.shape[:2] + (3, 3))
        Ky = interp_K(y.reshape(-1, 3)).reshape(y.shape[:2] + (3, 3, 3))
        integrand = Ey + np.einsum("nsikj,nsj->nsik", Ky, X[:, None, :] - y)
        out += np.einsum("nsik,s,nk->ni", integrand, wts, b - a)
    return out.reshape(nodes.shape)
