"""Elastic shape tensor, its evolution, Hencky deformedness, and the power identity.

The elastic shape ``A = g^-1 h`` compares the relaxed metric pushed to space
(``g``) with the spatial metric ``h``.  Along a motion it obeys

    dA/dt = L A + A L^+ ,    L = Fdot F^-1,   L^+ = h^-1 L^T h

where the overdot is the comoving (per material point) derivative.  The
deformedness is ``D = ln(A)/2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonPositiveShapeError
from .motion import Motion
from .tensor import (
    I3,
    T,
    check_metric,
    check_positive_det,
    fro,
    _metric_roots,
    func_of_hsym,
    sym,
    sym_part_h,
    trace,
)

log = logging.getLogger(__name__)

SPD_TOL = 1e-12


def current_metric_pullback(J, h=None):
    """Current metric on the material manifold, ``J^T h J``."""
    J = check_positive_det(J, "J")
    h = I3 if h is None else check_metric(h)
    return T(J) @ h @ J


def shape_from_metrics(g, h=None):
    """Elastic shape ``A = g^-1 h``."""
    g = check_metric(g, "g")
    h = I3 if h is None else check_metric(h)
    return np.linalg.solve(g, np.broadcast_to(h, g.shape))


def shape_from_relaxed(J, gtilde, h=None):
    """``A = J gtilde^-1 J^T h`` from a Jacobian and the relaxed material metric."""
    h = I3 if h is None else np.asarray(h, dtype=float)
    return J @ np.linalg.solve(gtilde, T(J)) @ h


def shape_material(J, A, h=None):
    """Material counterpart ``J^-1 A J`` (same eigenvalues as A)."""
    J = check_positive_det(J, "J")
    return np.linalg.solve(J, A @ J)


def deformedness(A, h=None):
    """Hencky deformedness ``D = ln(A)/2``."""
    return 0.5 * func_of_hsym(A, h, "ln")


def volume_ratio(A):
    """Current volume over relaxed volume, ``sqrt(det A)``."""
    A = np.asarray(A, dtype=float)
    w = np.linalg.eigvals(A)
    if np.any(w.real <= 0.0):
        raise NonPositiveShapeError(f"shape tensor has eigenvalue {w.real.min():.3e} <= 0")
    return np.sqrt(np.linalg.det(A))


@dataclass(frozen=True)
class ElasticPotential:
    """Isotropic quadratic potential ``U(D) = lam/2 (tr D)^2 + mu tr(D^2)``.

    ``rho_relaxed`` is the density in the relaxed state; the current density
    is ``rho_relaxed / sqrt(det A)``.
    """

    lam: float = 1.0
    mu: float = 1.0
    rho_relaxed: float = 1.0

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if not 3.0 * self.lam + 2.0 * self.mu > 0.0:
            raise ValueError("3 lam + 2 mu must be positive")

    def energy(self, D):
        trD = trace(D)
        return 0.5 * self.lam * trD**2 + self.mu * trace(D @ D)

    def gradient(self, D):
        """``dU/dD`` under the pairing ``(X, Y) -> tr(X Y)``."""
        return self.lam * trace(D)[..., None, None] * I3 + 2.0 * self.mu * D

    def density(self, A):
        return self.rho_relaxed / volume_ratio(A)


def stress_from_potential(D, pot: ElasticPotential, A):
    """``sigma = rho dU/dD`` with the current density taken from A."""
    return pot.density(A)[..., None, None] * pot.gradient(D)


# --------------------------------------------------------------------------
# evolution


@dataclass
class ShapeTrajectory:
    """Per-point time series produced by the evolution routines.

    ``A`` has shape ``(steps + 1, points, 3, 3)``; ``L`` holds the velocity
    gradient sampled at the same instants.  Plastic runs also fill ``W`` and,
    when the relaxed metric is co-evolved, ``gtilde`` and ``J``.
    """

    times: np.ndarray
    points: np.ndarray
    A: np.ndarray
    L: np.ndarray
    h: np.ndarray
    drift: np.ndarray
    W: np.ndarray | None = None
    gtilde: np.ndarray | None = None
    J: np.ndarray | None = None
    error_estimate: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    def D(self):
        return deformedness(self.A, self.h)

    def volume_ratio(self):
        return volume_ratio(self.A)


def _steps(t0, t1, dt):
    if not dt > 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    if not t1 > t0:
        raise DomainError(f"need t1 > t0, got [{t0}, {t1}]")
    n = int(round((t1 - t0) / dt))
    n = max(n, 1)
    return n, (t1 - t0) / n


def _points(points):
    if points is None:
        return np.zeros((1, 3))
    P = np.asarray(points, dtype=float)
    return P.reshape(-1, 3)


def _initial(A0, npts):
    A0 = np.asarray(A0, dtype=float)
    if A0.shape == (3, 3):
        return np.broadcast_to(A0, (npts, 3, 3)).copy()
    if A0.shape != (npts, 3, 3):
        raise ValueError(f"initial tensor shape {A0.shape} does not match {npts} points")
    return A0.copy()


def _check_spd(A, roots, step, t):
    # roots = (h^1/2, h^-1/2), computed once per run
    root, iroot = roots
    w = np.linalg.eigvalsh(sym(root @ A @ iroot))
    low = w.min(axis=-1)
    if np.any(low <= SPD_TOL):
        p = int(np.argmin(low))
        raise NonPositiveShapeError(
            f"shape tensor lost positive definiteness at step {step} (t={t:.6g}), "
            f"point {p}: eigenvalue {low[p]:.3e}",
            node=(step, p),
        )


class _Stepper:
    """Fixed-step classical RK4 for ``dA/dt = L A + A L^+ - W``.

    ``extra`` optionally carries a second state (the relaxed metric) advanced
    in the same stages; the A stages never depend on it, so the A results are
    identical with or without it.
    """

    def __init__(self, motion, h, points, law=None, extra_rhs=None):
        self.motion = motion
        self.h = h
        self.hinv = np.linalg.inv(h)
        self.points = points
        self.law = law
        self.extra_rhs = extra_rhs
        self._last = (None, None)

    def L(self, t):
        # the two midpoint stages share t
        if self._last[0] != t:
            self._last = (t, self.motion.L_at_label(t, self.points))
        return self._last[1]

    def adj(self, L):
        return self.hinv @ T(L) @ self.h

    def rhs(self, t, A):
        L = self.L(t)
        dA = L @ A + A @ self.adj(L)
        W = None
        if self.law is not None:
            W = self.law.W(t, A, self.h)
            if W is not None:
                dA = dA - W
        return dA, W

    def step(self, t, A, dt, G=None):
        k1, w1 = self.rhs(t, A)
        k2, w2 = self.rhs(t + 0.5 * dt, A + 0.5 * dt * k1)
        k3, w3 = self.rhs(t + 0.5 * dt, A + 0.5 * dt * k2)
        k4, w4 = self.rhs(t + dt, A + dt * k3)
        A_new = A + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        G_new = None
        if G is not None:
            ws = [np.zeros_like(A) if w is None else w for w in (w1, w2, w3, w4)]
            m1 = self.extra_rhs(t, G, ws[0])
            m2 = self.extra_rhs(t + 0.5 * dt, G + 0.5 * dt * m1, ws[1])
            m3 = self.extra_rhs(t + 0.5 * dt, G + 0.5 * dt * m2, ws[2])
            m4 = self.extra_rhs(t + dt, G + dt * m3, ws[3])
            G_new = G + (dt / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
        return A_new, G_new


def _integrate(A0, motion: Motion, h, t0, t1, dt, points, law=None, gtilde0=None,
               resym=True, check_spd=True):
    n, dt = _steps(t0, t1, dt)
    h = I3 if h is None else check_metric(h)
    pts = _points(points)
    A = _initial(A0, pts.shape[0])
    motion.check_time(t0)
    motion.check_time(t1)

    extra = None
    G = None
    if gtilde0 is not None:
        G = _initial(gtilde0, pts.shape[0])
        check_metric(G, "gtilde0")
        hinv = np.linalg.inv(h)

        def extra(t, Gt, W):
            # gtilde_dot = gtilde J^-1 W h^-1 J^-T gtilde
            Ji = np.linalg.inv(motion.F(t, pts))
            return Gt @ Ji @ W @ hinv @ T(Ji) @ Gt

    stepper = _Stepper(motion, h, pts, law=law, extra_rhs=extra)
    times = t0 + dt * np.arange(n + 1)
    times[-1] = t1
    As = np.empty((n + 1,) + A.shape)
    Ls = np.empty_like(As)
    drift = np.zeros(n + 1)
    Ws = np.empty_like(As) if law is not None else None
    Gs = np.empty_like(As) if G is not None else None
    As[0] = A
    if G is not None:
        Gs[0] = G
    if check_spd:
        roots = _metric_roots(h)
        _check_spd(A, roots, 0, t0)
    for k in range(n):
        t = times[k]
        A_new, G_new = stepper.step(t, A, times[k + 1] - t, G)
        if resym:
            A_sym = sym_part_h(A_new, h, check=False)
            drift[k + 1] = float(np.max(fro(A_new - A_sym) / fro(A_sym)))
            A_new = A_sym
        if not np.all(np.isfinite(A_new)):
            raise NonPositiveShapeError(f"non-finite shape tensor at step {k + 1}", node=(k + 1, None))
        if check_spd:
            _check_spd(A_new, roots, k + 1, times[k + 1])
        A = A_new
        As[k + 1] = A
        if G is not None:
            G = 0.5 * (G_new + T(G_new))
            Gs[k + 1] = G
    for k, t in enumerate(times):
        Ls[k] = stepper.L(t)
        if Ws is not None:
            W = law.W(t, As[k], h)
            Ws[k] = 0.0 if W is None else W
    if drift.max() > 0.0:
        log.debug("max h-symmetry drift per step: %.3e", drift.max())
    J = np.stack([motion.F(t, pts) for t in times]) if G is not None else None
    return ShapeTrajectory(times, pts, As, Ls, h, drift, W=Ws, gtilde=Gs, J=J)


def evolve_shape(A0, motion: Motion, h=None, t0=0.0, t1=1.0, dt=1e-3, points=None,
                 resym=True, self_check=False):
    """Integrate ``dA/dt = L A + A L^+`` along each material point's path.

    ``points`` are material labels (default: the origin).  ``A0`` is one
    ``(3, 3)`` tensor for all points or one per point.  Classical RK4 with
    fixed step; after each step ``A`` is projected onto its h-symmetric part
    and the projection size is logged in ``trajectory.drift``.  With
    ``self_check`` the run is repeated at ``dt/2`` and the maximum relative
    difference at the final time is stored in ``error_estimate``.
    """
    traj = _integrate(A0, motion, h, t0, t1, dt, points, resym=resym)
    if self_check:
        fine = _integrate(A0, motion, h, t0, t1, 0.5 * traj.dt, points, resym=resym)
        traj.error_estimate = float(np.max(fro(fine.A[-1] - traj.A[-1]) / fro(fine.A[-1])))
    return traj


def evolve_inertial_cauchy(E0, motion: Motion, h=None, t0=0.0, t1=1.0, dt=1e-3, points=None):
    """Integrate ``dE/dt = sym_h(L)``; returns ``(times, E)`` with ``E`` per point."""
    n, dt = _steps(t0, t1, dt)
    h = I3 if h is None else check_metric(h)
    pts = _points(points)
    E = _initial(E0, pts.shape[0])
    times = t0 + dt * np.arange(n + 1)
    times[-1] = t1

    def rate(t):
        return sym_part_h(motion.L_at_label(t, pts), h, check=False)

    out = np.empty((n + 1,) + E.shape)
    out[0] = E
    for k in range(n):
        t, tn = times[k], times[k + 1]
        tm = 0.5 * (t + tn)
        k1, k23, k4 = rate(t), rate(tm), rate(tn)
        E = E + ((tn - t) / 6.0) * (k1 + 4.0 * k23 + k4)
        out[k + 1] = E
    return times, out


# --------------------------------------------------------------------------
# power identity


@dataclass
class PowerResidual:
    times: np.ndarray
    power: np.ndarray  # tr(sigma L)
    rate: np.ndarray  # rho dU/dt
    residual: np.ndarray
    max_relative: float


def power_identity_residual(traj: ShapeTrajectory, pot: ElasticPotential, measure="hencky"):
    """Compare ``tr(sigma L)`` with ``rho dU/dt`` along a trajectory.

    ``dU/dt`` is a centred difference of ``U(D(t))``, so the residual of the
    Hencky measure is O(dt^2).  ``measure="linear"`` substitutes the
    small-deformedness surrogate ``(A - I)/2`` for ``D`` in both the stress
    and the energy; the identity then fails at O(1) for large deformation.
    """
    if traj.A.shape[0] < 3:
        raise DomainError("power identity needs at least 3 samples")
    A = traj.A
    if measure == "hencky":
        D = traj.D()
    elif measure == "linear":
        D = 0.5 * (A - I3)
    else:
        raise ValueError(f"unknown deformedness measure {measure!r}")
    U = pot.energy(D)
    t = traj.times
    Udot = (U[2:] - U[:-2]) / (t[2:] - t[:-2])[:, None]
    inner = slice(1, -1)
    sigma = stress_from_potential(D[inner], pot, A[inner])
    power = trace(sigma @ traj.L[inner])
    rho = pot.density(A[inner])
    rate = rho * Udot
    res = np.abs(power - rate)
    scale = max(float(np.max(np.abs(power))), float(np.max(np.abs(rate))))
    rel = float(np.max(res) / scale) if scale > 0.0 else 0.0
    return PowerResidual(t[inner], power, rate, res, rel)
