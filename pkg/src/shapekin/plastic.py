"""Time-dependent relaxed metric: metric change tensor and elastoplastic shape.

With a relaxed material metric that changes in time the shape evolves as

    dA/dt = L A + A L^+ - W,    W = J gt^-1 gt_dot gt^-1 J^T h

and conversely ``gt_dot = gt J^-1 W h^-1 J^-T gt``.  Plastic laws supply W.

The built-in stress-driven law is deliberately simple and swappable:

    W = phi * max(0, |dev s| - s_Y) * n A,    n = dev s / |dev s|

``n`` commutes with ``A`` (both are functions of the same h-symmetric
deformedness), so ``W`` is h-symmetric and ``tr(A^-1 W) = tr(n) = 0``:
the law is volume preserving.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .compat import ricci
from .errors import DomainError, MetricError, RegimeError
from .grid import Field, Grid3
from .motion import Motion
from .shape import ElasticPotential, _integrate, _steps, stress_from_potential
from .tensor import I3, T, check_metric, check_positive_det, fro, func_of_hsym, sym_part_h

REGIME_LIMIT = 0.1
AGREE_TOL = 1e-12


# --------------------------------------------------------------------------
# laws


class PlasticLaw:
    """Base class.  ``W(t, A, h, pot)`` returns the metric change tensor or None."""

    kind = "abstract"

    def W(self, t, A, h, pot):  # pragma: no cover - interface
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind}


class NoPlasticity(PlasticLaw):
    kind = "none"

    def W(self, t, A, h, pot):
        return None


@dataclass
class PrescribedW(PlasticLaw):
    """Externally prescribed ``W = fn(t, A, h)``."""

    fn: Callable
    desc: dict | None = None
    kind = "prescribed"

    def W(self, t, A, h, pot):
        return np.broadcast_to(self.fn(t, A, h), np.shape(A))

    @classmethod
    def scaled(cls, rate):
        """``W = rate(t) * A``; a constant ``rate = -2 beta`` gives ``A = e^{2 beta t} A0`` at L = 0."""
        from .motion import TimeFunction, const

        f = rate if isinstance(rate, TimeFunction) else const(float(rate))
        return cls(lambda t, A, h: f(t) * A, {"kind": "prescribed", "scale": f.to_dict()})

    @classmethod
    def constant(cls, M):
        M = np.asarray(M, dtype=float)
        if M.shape != (3, 3) or not np.all(np.isfinite(M)):
            raise ValueError("prescribed W must be a finite 3x3 matrix")
        return cls(lambda t, A, h: M, {"kind": "prescribed", "matrix": M.tolist()})

    def to_dict(self):
        return dict(self.desc) if self.desc else {"kind": self.kind}


@dataclass
class ThresholdDeviatoric(PlasticLaw):
    """Overstress law driven by the h-norm of the stress deviator."""

    yield_stress: float = 0.0
    fluidity: float = 0.0
    kind = "threshold_deviatoric"

    def __post_init__(self):
        if not (self.yield_stress >= 0.0 and self.fluidity >= 0.0):
            raise ValueError("yield stress and fluidity must be non-negative")

    def W(self, t, A, h, pot):
        D = 0.5 * func_of_hsym(A, h, "ln", check=False)
        s = stress_from_potential(D, pot, A)
        dev = s - (np.trace(s, axis1=-2, axis2=-1) / 3.0)[..., None, None] * I3
        norm = np.sqrt(np.abs(np.trace(dev @ dev, axis1=-2, axis2=-1)))
        over = self.fluidity * np.maximum(0.0, norm - self.yield_stress)
        safe = np.where(norm > 0.0, norm, 1.0)
        return (over / safe)[..., None, None] * dev @ A

    def to_dict(self):
        return {"kind": self.kind, "yield": self.yield_stress, "fluidity": self.fluidity}


@dataclass
class Switched(PlasticLaw):
    """Active law up to ``t_off``, no plasticity afterwards (sudden unloading)."""

    law: PlasticLaw
    t_off: float
    kind = "switched"

    def W(self, t, A, h, pot):
        return self.law.W(t, A, h, pot) if t < self.t_off else None

    def to_dict(self):
        return {"kind": self.kind, "t_off": self.t_off, "law": self.law.to_dict()}


def law_from_dict(d) -> PlasticLaw:
    from .motion import time_function

    kind = d.get("kind", "none")
    if kind == "none":
        return NoPlasticity()
    if kind == "prescribed":
        if "matrix" in d:
            return PrescribedW.constant(d["matrix"])
        return PrescribedW.scaled(time_function(d["scale"]) if isinstance(d["scale"], dict) else d["scale"])
    if kind == "threshold_deviatoric":
        return ThresholdDeviatoric(float(d["yield"]), float(d["fluidity"]))
    if kind == "switched":
        return Switched(law_from_dict(d["law"]), float(d["t_off"]))
    raise ValueError(f"unknown plastic law kind {kind!r}")


class _Bound:
    def __init__(self, law, pot):
        self.law, self.pot = law, pot

    def W(self, t, A, h):
        return self.law.W(t, A, h, self.pot)


# --------------------------------------------------------------------------
# operations


def metric_change_from_gdot(J, gtilde, gtilde_dot, h=None):
    """``W = J gt^-1 gt_dot gt^-1 J^T h``.

    Also evaluates ``-J (gt^-1)_dot J^T h`` with ``(gt^-1)_dot`` obtained by
    solves rather than an explicit inverse; the two must agree.
    """
    J = check_positive_det(J, "J")
    gtilde = check_metric(gtilde, "gtilde")
    h = I3 if h is None else check_metric(h)
    gd = np.asarray(gtilde_dot, dtype=float)
    gi = np.linalg.inv(gtilde)
    W = J @ gi @ gd @ gi @ T(J) @ h
    inv_dot = -np.linalg.solve(gtilde, T(np.linalg.solve(gtilde, T(gd))))
    W2 = -J @ inv_dot @ T(J) @ h
    scale = np.maximum(fro(W), fro(W2))
    if np.any(fro(W - W2) > AGREE_TOL * np.maximum(scale, 1e-300) + 1e-300):
        raise MetricError("relaxed metric too ill-conditioned: metric change expressions disagree")
    return W


def evolve_elastoplastic(A0, motion: Motion, h=None, law: PlasticLaw | None = None,
                         pot: ElasticPotential | None = None, t0=0.0, t1=1.0, dt=1e-3,
                         points=None, gtilde0=None):
    """RK4 for ``dA/dt = L A + A L^+ - W`` with W from ``law``.

    Without a law (or with :class:`NoPlasticity`) this is the elastic
    integrator itself, so results match :func:`evolve_shape` bit for bit.
    With ``gtilde0`` the relaxed material metric is advanced in the same RK
    stages and stored with ``J`` on the trajectory.
    """
    pot = ElasticPotential() if pot is None else pot
    bound = None if law is None or isinstance(law, NoPlasticity) else _Bound(law, pot)
    traj = _integrate(A0, motion, h, t0, t1, dt, points, law=bound, gtilde0=gtilde0)
    traj.meta["law"] = (law or NoPlasticity()).to_dict()
    return traj


def _series(obj, times, name):
    """Callable of t from a callable or from samples at ``times``."""
    if callable(obj):
        return obj
    arr = np.asarray(obj, dtype=float)
    if arr.shape[0] != len(times):
        raise ValueError(f"{name} has {arr.shape[0]} samples, expected {len(times)}")
    spline = CubicSpline(times, arr, axis=0)
    return spline


def evolve_relaxed_metric(gtilde0, W_series, J_series, h=None, dt=1e-3, t0=0.0, t1=None):
    """Integrate ``gt_dot = gt J^-1 W h^-1 J^-T gt`` with RK4.

    ``W_series`` and ``J_series`` are callables of t or arrays sampled at
    ``t0 + k dt``; arrays are interpolated with cubic splines for the RK
    midpoints.  Leading point axes are allowed.  Returns ``(times, gtilde)``.
    """
    h = I3 if h is None else check_metric(h)
    hinv = np.linalg.inv(h)
    if t1 is None:
        if callable(W_series):
            raise ValueError("t1 is required when W is given as a function")
        t1 = t0 + dt * (len(W_series) - 1)
    n, dt = _steps(t0, t1, dt)
    times = t0 + dt * np.arange(n + 1)
    times[-1] = t1
    Wf = _series(W_series, times, "W_series")
    Jf = _series(J_series, times, "J_series")
    G = np.array(check_metric(gtilde0, "gtilde0"), dtype=float)
    G = np.broadcast_to(G, np.broadcast_shapes(G.shape, np.shape(Wf(t0)))).copy()

    def rhs(t, G):
        Ji = np.linalg.inv(Jf(t))
        # blow-up is reported below as a MetricError
        with np.errstate(over="ignore", invalid="ignore"):
            return G @ Ji @ Wf(t) @ hinv @ T(Ji) @ G

    out = np.empty((n + 1,) + G.shape)
    out[0] = G
    for k in range(n):
        t, dtk = times[k], times[k + 1] - times[k]
        m1 = rhs(t, G)
        m2 = rhs(t + 0.5 * dtk, G + 0.5 * dtk * m1)
        m3 = rhs(t + 0.5 * dtk, G + 0.5 * dtk * m2)
        m4 = rhs(t + dtk, G + dtk * m3)
        with np.errstate(over="ignore", invalid="ignore"):
            G = G + (dtk / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
            G = 0.5 * (G + T(G))
        if not np.all(np.isfinite(G)) or np.any(np.linalg.eigvalsh(G)[..., 0] <= 0.0):
            raise MetricError(f"relaxed metric lost positive definiteness at step {k + 1}")
        out[k + 1] = G
    return times, out


@dataclass
class MonitorReport:
    ricci_rms: np.ndarray
    drift: np.ndarray
    max_drift: float


def ricci_flatness_monitor(gtilde_fields, grid: Grid3 | None = None) -> MonitorReport:
    """Ricci RMS of each relaxed-metric snapshot and its drift from the first.

    ``gtilde_fields`` is a sequence of metric :class:`Field` objects, or an
    array ``(snapshots,) + grid.counts + (3, 3)`` together with ``grid``.
    """
    fields = []
    for item in gtilde_fields:
        if isinstance(item, Field):
            fields.append(item)
        else:
            if grid is None:
                raise ValueError("grid is required for raw snapshot arrays")
            fields.append(Field(grid, item))
    if not fields:
        raise ValueError("no snapshots given")
    r = np.array([ricci(f)[1] for f in fields])
    drift = np.abs(r - r[0])
    return MonitorReport(r, drift, float(drift.max()))


@dataclass
class Decomposition:
    lhs: np.ndarray
    delta_D: np.ndarray
    plastic_term: np.ndarray
    residual: np.ndarray

    @property
    def relative(self):
        return self.residual / np.maximum(fro(self.lhs), fro(self.delta_D))


def _time_index(times, t):
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) > 1e-9 * max(1.0, abs(t)):
        raise DomainError(f"t = {t} is not a sample time of the trajectory")
    return k


def small_deformedness_decomposition(traj, t1, t2) -> Decomposition:
    """Split the increment over ``[t1, t2]`` into elastic and plastic parts.

    ``lhs = sym_h(J2 J1^-1 - I)`` is the symmetrized gradient, with respect
    to the position at ``t1``, of the displacement ``r(t2) - r(t1)``.  It is
    compared with ``dD + P`` where ``P = -1/2 J1 (gt2^-1 - gt1^-1) J1^T h``.
    The trajectory must carry ``J`` and ``gtilde`` (run with ``gtilde0``).
    """
    if traj.J is None or traj.gtilde is None:
        raise ValueError("trajectory has no relaxed metric; run with gtilde0")
    i1, i2 = _time_index(traj.times, t1), _time_index(traj.times, t2)
    if i2 < i1:
        i1, i2 = i2, i1
    h = traj.h
    J1inv = np.linalg.inv(traj.J[i1])
    for k in range(i1, i2 + 1):
        dev = float(np.max(fro(traj.J[k] @ J1inv - I3)))
        if dev >= REGIME_LIMIT:
            raise RegimeError(
                f"|J(t') J(t)^-1 - I| = {dev:.3g} >= {REGIME_LIMIT} at t' = {traj.times[k]:.6g}"
            )
    G = traj.J[i2] @ J1inv - I3
    lhs = sym_part_h(G, h, check=False)
    D = 0.5 * func_of_hsym(traj.A[[i1, i2]], h, "ln")
    dD = D[1] - D[0]
    J1 = traj.J[i1]
    dginv = np.linalg.inv(traj.gtilde[i2]) - np.linalg.inv(traj.gtilde[i1])
    P = -0.5 * J1 @ dginv @ T(J1) @ h
    return Decomposition(lhs, dD, P, fro(lhs - (dD + P)))
