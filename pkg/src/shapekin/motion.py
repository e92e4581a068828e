"""Analytic motions with exact deformation and velocity gradients.

A motion maps material labels ``X`` (coordinates of the placement at the
start time) to spatial positions ``x = chi(t, X)``.  Every kind below is a
closed-form family, so positions, velocities, deformation gradients and their
time derivatives are available exactly.  Two transforms used for objectivity
tests are provided: :func:`superpose_rigid` and :func:`galilean_boost`.

Arrays follow the convention of :mod:`shapekin.tensor`: ``X`` has shape
``(..., 3)`` and gradients ``(..., 3, 3)`` with ``F[..., i, K] = dx_i/dX_K``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, FrameError
from .tensor import I3, T, fro, rotation

# --------------------------------------------------------------------------
# time functions


class TimeFunction:
    """Scalar function of time with an exact first derivative."""

    def __call__(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Poly(TimeFunction):
    """``sum_k coeffs[k] * t**k``."""

    coeffs: tuple = (0.0,)

    # plain Horner loops: these sit in the inner loop of the integrators
    def __call__(self, t):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return float(acc)

    def deriv(self, t):
        acc = 0.0
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * t + k * self.coeffs[k]
        return float(acc)

    def to_dict(self):
        return {"poly": [float(c) for c in self.coeffs]}


@dataclass(frozen=True)
class Sinusoid(TimeFunction):
    """``offset + amplitude * sin(omega t + phase)``."""

    amplitude: float = 1.0
    omega: float = 1.0
    phase: float = 0.0
    offset: float = 0.0

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(self.omega * t + self.phase)

    def deriv(self, t):
        return self.amplitude * self.omega * np.cos(self.omega * t + self.phase)

    def to_dict(self):
        return {
            "sin": {
                "amplitude": self.amplitude,
                "omega": self.omega,
                "phase": self.phase,
                "offset": self.offset,
            }
        }


@dataclass(frozen=True)
class Exponential(TimeFunction):
    """``scale * exp(rate t)``."""

    scale: float = 1.0
    rate: float = 0.0

    def __call__(self, t):
        return self.scale * np.exp(self.rate * t)

    def deriv(self, t):
        return self.scale * self.rate * np.exp(self.rate * t)

    def to_dict(self):
        return {"exp": {"scale": self.scale, "rate": self.rate}}


def const(value):
    return Poly((float(value),))


def linear(rate, start=0.0):
    return Poly((float(start), float(rate)))


def time_function(desc):
    """Build a TimeFunction from a number or a descriptor dict."""
    if isinstance(desc, TimeFunction):
        return desc
    if isinstance(desc, (int, float)):
        return const(desc)
    if not isinstance(desc, dict) or len(desc) != 1:
        raise ValueError(f"bad time function descriptor: {desc!r}")
    (kind, arg), = desc.items()
    if kind == "poly":
        return Poly(tuple(float(c) for c in arg))
    if kind == "sin":
        return Sinusoid(**{k: float(v) for k, v in arg.items()})
    if kind == "exp":
        return Exponential(**{k: float(v) for k, v in arg.items()})
    if kind == "shifted":
        return _Shifted(time_function(arg["base"]), float(arg["shift"]))
    raise ValueError(f"unknown time function kind {kind!r}")


# --------------------------------------------------------------------------
# motions


def _batch(X):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != 3:
        raise ValueError(f"points must have trailing dimension 3, got {X.shape}")
    return X


def _const_tensor(M, X):
    return np.broadcast_to(M, X.shape[:-1] + (3, 3)).copy()


def _spin(axis):
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    return np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])


@dataclass(frozen=True)
class Motion:
    """Base class.  Subclasses implement the ``_``-prefixed kernels."""

    interval: tuple = field(default=(0.0, 1.0), kw_only=True)

    # kernels -------------------------------------------------------------
    def _position(self, t, X):
        raise NotImplementedError

    def _velocity(self, t, X):
        raise NotImplementedError

    def _F(self, t, X):
        raise NotImplementedError

    def _Fdot(self, t, X):
        raise NotImplementedError

    def _G(self, t, X):
        """Second material gradient ``d2x_i / dX_J dX_K``."""
        return np.zeros(X.shape[:-1] + (3, 3, 3))

    def _inverse(self, t, x):
        raise NotImplementedError

    # public --------------------------------------------------------------
    def check_time(self, t):
        lo, hi = self.interval
        if not (lo <= t <= hi):
            raise DomainError(f"t={t} outside motion interval [{lo}, {hi}]")

    def position(self, t, X):
        self.check_time(t)
        return self._position(t, _batch(X))

    def velocity(self, t, X):
        self.check_time(t)
        return self._velocity(t, _batch(X))

    def F(self, t, X):
        self.check_time(t)
        return self._F(t, _batch(X))

    def Fdot(self, t, X):
        self.check_time(t)
        return self._Fdot(t, _batch(X))

    def second_gradient(self, t, X):
        self.check_time(t)
        return self._G(t, _batch(X))

    def inverse(self, t, x):
        self.check_time(t)
        return self._inverse(t, _batch(x))

    def L_at_label(self, t, X):
        """Velocity gradient ``Fdot F^-1`` at the material point labelled X."""
        self.check_time(t)
        X = _batch(X)
        F = self._F(t, X)
        return self._Fdot(t, X) @ np.linalg.inv(F)

    def validate(self, samples=33, X=(0.0, 0.0, 0.0)):
        """Check det F > 0 on a sample of the declared interval."""
        lo, hi = self.interval
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise DomainError(f"interval must be finite and ordered, got {self.interval}")
        for t in np.linspace(lo, hi, samples):
            d = np.linalg.det(self._F(t, _batch(X)))
            if np.any(d <= 0.0):
                raise DomainError(f"det F = {np.min(d):.3e} <= 0 at t={t}")
        return self


@dataclass(frozen=True)
class Identity(Motion):
    def _position(self, t, X):
        return X.copy()

    def _velocity(self, t, X):
        return np.zeros_like(X)

    def _F(self, t, X):
        return _const_tensor(I3, X)

    def _Fdot(self, t, X):
        return _const_tensor(np.zeros((3, 3)), X)

    def _inverse(self, t, x):
        return x.copy()

    def to_dict(self):
        return {"kind": "identity", "interval": list(self.interval)}


@dataclass(frozen=True)
class HomogeneousLinear(Motion):
    """``x = K(t) X + c(t)`` with componentwise time functions."""

    K: tuple = ()
    c: tuple = (const(0.0),) * 3

    def _Km(self, t):
        return np.array([[f(t) for f in row] for row in self.K])

    def _Kd(self, t):
        return np.array([[f.deriv(t) for f in row] for row in self.K])

    def _position(self, t, X):
        return X @ self._Km(t).T + np.array([f(t) for f in self.c])

    def _velocity(self, t, X):
        return X @ self._Kd(t).T + np.array([f.deriv(t) for f in self.c])

    def _F(self, t, X):
        return _const_tensor(self._Km(t), X)

    def _Fdot(self, t, X):
        return _const_tensor(self._Kd(t), X)

    def _inverse(self, t, x):
        return (x - np.array([f(t) for f in self.c])) @ np.linalg.inv(self._Km(t)).T

    def to_dict(self):
        return {
            "kind": "homogeneous_linear",
            "K": [[f.to_dict() for f in row] for row in self.K],
            "c": [f.to_dict() for f in self.c],
            "interval": list(self.interval),
        }


@dataclass(frozen=True)
class SteadyFlow(Motion):
    """Homogeneous flow with constant velocity gradient: ``x = expm(t L) X``."""

    Lm: tuple = ((0.0,) * 3,) * 3

    def _L(self):
        return np.asarray(self.Lm, dtype=float)

    def _position(self, t, X):
        return X @ expm(t * self._L()).T

    def _velocity(self, t, X):
        return X @ (self._L() @ expm(t * self._L())).T

    def _F(self, t, X):
        return _const_tensor(expm(t * self._L()), X)

    def _Fdot(self, t, X):
        return _const_tensor(self._L() @ expm(t * self._L()), X)

    def L_at_label(self, t, X):
        self.check_time(t)
        return _const_tensor(self._L(), _batch(X))

    def _inverse(self, t, x):
        return x @ expm(-t * self._L()).T

    def to_dict(self):
        return {"kind": "steady_flow", "L": [list(r) for r in self.Lm], "interval": list(self.interval)}


@dataclass(frozen=True)
class SimpleShear(Motion):
    """``x_i = X_i + gamma(t) X_j`` for ``plane = (i, j)``."""

    gamma: TimeFunction = linear(1.0)
    plane: tuple = (0, 1)

    def _unit(self):
        E = np.zeros((3, 3))
        E[self.plane] = 1.0
        return E

    def _position(self, t, X):
        x = X.copy()
        i, j = self.plane
        x[..., i] += self.gamma(t) * X[..., j]
        return x

    def _velocity(self, t, X):
        v = np.zeros_like(X)
        i, j = self.plane
        v[..., i] = self.gamma.deriv(t) * X[..., j]
        return v

    def _F(self, t, X):
        return _const_tensor(I3 + self.gamma(t) * self._unit(), X)

    def _Fdot(self, t, X):
        return _const_tensor(self.gamma.deriv(t) * self._unit(), X)

    def _inverse(self, t, x):
        X = x.copy()
        i, j = self.plane
        X[..., i] -= self.gamma(t) * x[..., j]
        return X

    def to_dict(self):
        return {
            "kind": "simple_shear",
            "gamma": self.gamma.to_dict(),
            "plane": list(self.plane),
            "interval": list(self.interval),
        }


@dataclass(frozen=True)
class Uniaxial(Motion):
    """Stretch ``lambda(t)`` along one coordinate axis."""

    stretch: TimeFunction = Exponential(1.0, 1.0)
    axis: int = 0

    def _diag(self, value, other):
        d = np.full(3, other)
        d[self.axis] = value
        return d

    def _position(self, t, X):
        return X * self._diag(self.stretch(t), 1.0)

    def _velocity(self, t, X):
        return X * self._diag(self.stretch.deriv(t), 0.0)

    def _F(self, t, X):
        return _const_tensor(np.diag(self._diag(self.stretch(t), 1.0)), X)

    def _Fdot(self, t, X):
        return _const_tensor(np.diag(self._diag(self.stretch.deriv(t), 0.0)), X)

    def _inverse(self, t, x):
        return x / self._diag(self.stretch(t), 1.0)

    def to_dict(self):
        return {
            "kind": "uniaxial",
            "stretch": self.stretch.to_dict(),
            "axis": self.axis,
            "interval": list(self.interval),
        }


@dataclass(frozen=True)
class Radial(Motion):
    """Isotropic scaling ``x = s(t) X``."""

    scale: TimeFunction = Exponential(1.0, 1.0)

    def _position(self, t, X):
        return self.scale(t) * X

    def _velocity(self, t, X):
        return self.scale.deriv(t) * X

    def _F(self, t, X):
        return _const_tensor(self.scale(t) * I3, X)

    def _Fdot(self, t, X):
        return _const_tensor(self.scale.deriv(t) * I3, X)

    def _inverse(self, t, x):
        return x / self.scale(t)

    def to_dict(self):
        return {"kind": "radial", "scale": self.scale.to_dict(), "interval": list(self.interval)}


@dataclass(frozen=True)
class RigidMotion(Motion):
    """``x = Q(t) (X - x0) + x0 + c(t)`` with ``Q(t)`` a rotation about ``axis``.

    With ``c = 0`` and ``x0 = 0`` this is a rigid rotation about the origin.
    """

    axis: tuple = (0.0, 0.0, 1.0)
    angle: TimeFunction = linear(1.0)
    c: tuple = (const(0.0),) * 3
    x0: tuple = (0.0, 0.0, 0.0)

    def Q(self, t):
        return rotation(self.axis, self.angle(t))

    def Qdot(self, t):
        return self.angle.deriv(t) * _spin(self.axis) @ self.Q(t)

    def _cv(self, t):
        return np.array([f(t) for f in self.c])

    def _position(self, t, X):
        x0 = np.asarray(self.x0)
        return (X - x0) @ self.Q(t).T + x0 + self._cv(t)

    def _velocity(self, t, X):
        x0 = np.asarray(self.x0)
        return (X - x0) @ self.Qdot(t).T + np.array([f.deriv(t) for f in self.c])

    def _F(self, t, X):
        return _const_tensor(self.Q(t), X)

    def _Fdot(self, t, X):
        return _const_tensor(self.Qdot(t), X)

    def L_at_label(self, t, X):
        # Qdot Q^T = angle' * spin(axis), the same at every point
        self.check_time(t)
        return _const_tensor(self.angle.deriv(t) * _spin(self.axis), _batch(X))

    def _inverse(self, t, x):
        x0 = np.asarray(self.x0)
        return (x - x0 - self._cv(t)) @ self.Q(t) + x0

    def to_dict(self):
        return {
            "kind": "rigid",
            "axis": list(self.axis),
            "angle": self.angle.to_dict(),
            "c": [f.to_dict() for f in self.c],
            "x0": list(self.x0),
            "interval": list(self.interval),
        }


def rigid_rotation(axis=(0.0, 0.0, 1.0), angle=None, interval=(0.0, 1.0)):
    return RigidMotion(axis=tuple(axis), angle=angle or linear(1.0), interval=interval)


@dataclass(frozen=True)
class FixedRigid(Motion):
    """``x = Q (X - x0) + x0 + c(t)`` with a constant rotation ``Q``."""

    Qm: tuple = tuple(map(tuple, I3))
    c: tuple = (const(0.0),) * 3
    x0: tuple = (0.0, 0.0, 0.0)

    def Q(self, t):
        return np.array(self.Qm)

    def _cv(self, t):
        return np.array([f(t) for f in self.c])

    def _position(self, t, X):
        x0 = np.asarray(self.x0)
        return (X - x0) @ self.Q(t).T + x0 + self._cv(t)

    def _velocity(self, t, X):
        return np.zeros_like(X) + np.array([f.deriv(t) for f in self.c])

    def _F(self, t, X):
        return _const_tensor(self.Q(t), X)

    def _Fdot(self, t, X):
        return _const_tensor(np.zeros((3, 3)), X)

    def _inverse(self, t, x):
        x0 = np.asarray(self.x0)
        return (x - x0 - self._cv(t)) @ self.Q(t) + x0

    def to_dict(self):
        return {
            "kind": "fixed_rigid",
            "Q": [list(r) for r in self.Qm],
            "c": [f.to_dict() for f in self.c],
            "x0": list(self.x0),
            "interval": list(self.interval),
        }


@dataclass(frozen=True)
class Warp(Motion):
    """Inhomogeneous motion ``x_i = X_i + a(t) X_j**2`` (``i != j``).

    Not one of the homogeneous families; used where a spatially varying
    deformation gradient is needed.
    """

    amplitude: TimeFunction = linear(0.1)
    i: int = 0
    j: int = 1

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("Warp needs i != j")

    def _position(self, t, X):
        x = X.copy()
        x[..., self.i] += self.amplitude(t) * X[..., self.j] ** 2
        return x

    def _velocity(self, t, X):
        v = np.zeros_like(X)
        v[..., self.i] = self.amplitude.deriv(t) * X[..., self.j] ** 2
        return v

    def _F(self, t, X):
        F = _const_tensor(I3, X)
        F[..., self.i, self.j] += 2.0 * self.amplitude(t) * X[..., self.j]
        return F

    def _Fdot(self, t, X):
        Fd = _const_tensor(np.zeros((3, 3)), X)
        Fd[..., self.i, self.j] = 2.0 * self.amplitude.deriv(t) * X[..., self.j]
        return Fd

    def _G(self, t, X):
        G = np.zeros(X.shape[:-1] + (3, 3, 3))
        G[..., self.i, self.j, self.j] = 2.0 * self.amplitude(t)
        return G

    def _inverse(self, t, x):
        X = x.copy()
        X[..., self.i] -= self.amplitude(t) * x[..., self.j] ** 2
        return X

    def to_dict(self):
        return {
            "kind": "warp",
            "amplitude": self.amplitude.to_dict(),
            "i": self.i,
            "j": self.j,
            "interval": list(self.interval),
        }


@dataclass(frozen=True)
class Composition(Motion):
    """``x = outer(t, inner(t, X))``."""

    outer: Motion = None
    inner: Motion = None

    def _position(self, t, X):
        return self.outer._position(t, self.inner._position(t, X))

    def _velocity(self, t, X):
        y = self.inner._position(t, X)
        vi = self.inner._velocity(t, X)
        return self.outer._velocity(t, y) + np.einsum("...ij,...j->...i", self.outer._F(t, y), vi)

    def _F(self, t, X):
        return self.outer._F(t, self.inner._position(t, X)) @ self.inner._F(t, X)

    def _Fdot(self, t, X):
        y = self.inner._position(t, X)
        Fi = self.inner._F(t, X)
        vi = self.inner._velocity(t, X)
        dFo = self.outer._Fdot(t, y) + np.einsum("...ijk,...k->...ij", self.outer._G(t, y), vi)
        return dFo @ Fi + self.outer._F(t, y) @ self.inner._Fdot(t, X)

    def _G(self, t, X):
        y = self.inner._position(t, X)
        Fi = self.inner._F(t, X)
        Go = np.einsum("...iab,...aj,...bk->...ijk", self.outer._G(t, y), Fi, Fi)
        return Go + np.einsum("...ia,...ajk->...ijk", self.outer._F(t, y), self.inner._G(t, X))

    def _inverse(self, t, x):
        return self.inner._inverse(t, self.outer._inverse(t, x))

    def to_dict(self):
        return {
            "kind": "composition",
            "outer": self.outer.to_dict(),
            "inner": self.inner.to_dict(),
            "interval": list(self.interval),
        }


@dataclass(frozen=True)
class Boost(Motion):
    """Galilean change of inertial frame: ``x' = chi(t, X) - V t``.

    Deformation and velocity gradients are returned unchanged from ``base``.
    """

    base: Motion = None
    V: tuple = (0.0, 0.0, 0.0)

    def _position(self, t, X):
        return self.base._position(t, X) - np.asarray(self.V) * t

    def _velocity(self, t, X):
        return self.base._velocity(t, X) - np.asarray(self.V)

    def _F(self, t, X):
        return self.base._F(t, X)

    def _Fdot(self, t, X):
        return self.base._Fdot(t, X)

    def _G(self, t, X):
        return self.base._G(t, X)

    def _inverse(self, t, x):
        return self.base._inverse(t, x + np.asarray(self.V) * t)

    def L_at_label(self, t, X):
        return self.base.L_at_label(t, X)

    def to_dict(self):
        return {
            "kind": "boost",
            "base": self.base.to_dict(),
            "V": list(self.V),
            "interval": list(self.interval),
        }


def _intersect(a, b):
    return (max(a[0], b[0]), min(a[1], b[1]))


def compose(outer: Motion, inner: Motion):
    return Composition(outer=outer, inner=inner, interval=_intersect(outer.interval, inner.interval))


# --------------------------------------------------------------------------
# operations


def evaluate(motion: Motion, t, X):
    """Position and velocity ``(x, v)`` of the material point(s) X at time t."""
    return motion.position(t, X), motion.velocity(t, X)


def deformation_gradient(motion: Motion, t, X):
    return motion.F(t, X)


def velocity_gradient(motion: Motion, t, x):
    """``L = Fdot F^-1`` at the material point currently located at ``x``."""
    X = motion.inverse(t, x)
    return motion.L_at_label(t, X)


def superpose_rigid(motion: Motion, Q=None, c=None, x0=(0.0, 0.0, 0.0), axis=None, angle=None):
    """Superpose a rigid motion: ``x' = Q(t) (chi(t, X) - x0) + c(t)``.

    ``Q`` is either a constant orthogonal matrix, or omitted in favour of a
    time-dependent rotation ``(axis, angle)`` with ``angle`` a TimeFunction.
    ``c`` is a constant vector or a triple of TimeFunctions.
    """
    x0 = tuple(float(v) for v in x0)
    if c is None:
        c = (0.0, 0.0, 0.0)
    c = tuple(time_function(ci) for ci in c)
    if angle is not None:
        # x' = Q (y - x0) + x0 + (c - x0)
        rigid = RigidMotion(
            axis=tuple(axis if axis is not None else (0.0, 0.0, 1.0)),
            angle=time_function(angle),
            c=tuple(_shifted(ci, -x0[k]) for k, ci in enumerate(c)),
            x0=x0,
            interval=motion.interval,
        )
    else:
        Qm = np.eye(3) if Q is None else np.asarray(Q, dtype=float)
        if Qm.shape != (3, 3) or fro(T(Qm) @ Qm - I3) > 1e-12 or np.linalg.det(Qm) <= 0.0:
            raise FrameError("Q must be a proper orthogonal 3x3 matrix")
        rigid = FixedRigid(
            Qm=tuple(map(tuple, Qm)),
            c=tuple(_shifted(ci, -x0[k]) for k, ci in enumerate(c)),
            x0=x0,
            interval=motion.interval,
        )
    return Composition(outer=rigid, inner=motion, interval=motion.interval)


@dataclass(frozen=True)
class _Shifted(TimeFunction):
    base: TimeFunction
    shift: float

    def __call__(self, t):
        return self.base(t) + self.shift

    def deriv(self, t):
        return self.base.deriv(t)

    def to_dict(self):
        return {"shifted": {"base": self.base.to_dict(), "shift": self.shift}}


def _shifted(f, s):
    return f if s == 0.0 else _Shifted(f, s)


def galilean_boost(motion: Motion, V):
    """Observe ``motion`` from an inertial frame moving with velocity ``V``."""
    return Boost(base=motion, V=tuple(float(v) for v in V), interval=motion.interval)


def current_distance(motion: Motion, t, P, Q, h=None):
    """h-length of ``chi(t, Q) - chi(t, P)``."""
    d = motion.position(t, Q) - motion.position(t, P)
    if h is None:
        return np.sqrt(np.sum(d * d, axis=-1))
    return np.sqrt(np.einsum("...i,ij,...j->...", d, np.asarray(h), d))


# --------------------------------------------------------------------------
# descriptors


def _rows(desc):
    return tuple(tuple(time_function(v) for v in row) for row in desc)


def motion_from_dict(d):
    """Build a Motion from a JSON-style descriptor (see docs/formats.md)."""
    kind = d["kind"]
    interval = tuple(float(v) for v in d.get("interval", (0.0, 1.0)))
    if kind == "identity":
        m = Identity(interval=interval)
    elif kind == "homogeneous_linear":
        c = tuple(time_function(v) for v in d.get("c", (0.0, 0.0, 0.0)))
        m = HomogeneousLinear(K=_rows(d["K"]), c=c, interval=interval)
    elif kind == "steady_flow":
        m = SteadyFlow(Lm=tuple(tuple(float(v) for v in r) for r in d["L"]), interval=interval)
    elif kind == "simple_shear":
        m = SimpleShear(
            gamma=time_function(d["gamma"]),
            plane=tuple(d.get("plane", (0, 1))),
            interval=interval,
        )
    elif kind == "uniaxial":
        m = Uniaxial(stretch=time_function(d["stretch"]), axis=int(d.get("axis", 0)), interval=interval)
    elif kind == "radial":
        m = Radial(scale=time_function(d["scale"]), interval=interval)
    elif kind in ("rigid", "rigid_rotation"):
        m = RigidMotion(
            axis=tuple(d.get("axis", (0.0, 0.0, 1.0))),
            angle=time_function(d["angle"]),
            c=tuple(time_function(v) for v in d.get("c", (0.0, 0.0, 0.0))),
            x0=tuple(d.get("x0", (0.0, 0.0, 0.0))),
            interval=interval,
        )
    elif kind == "fixed_rigid":
        m = FixedRigid(
            Qm=tuple(tuple(float(v) for v in r) for r in d["Q"]),
            c=tuple(time_function(v) for v in d.get("c", (0.0, 0.0, 0.0))),
            x0=tuple(d.get("x0", (0.0, 0.0, 0.0))),
            interval=interval,
        )
    elif kind == "warp":
        m = Warp(
            amplitude=time_function(d["amplitude"]),
            i=int(d.get("i", 0)),
            j=int(d.get("j", 1)),
            interval=interval,
        )
    elif kind == "composition":
        m = Composition(
            outer=motion_from_dict(d["outer"]),
            inner=motion_from_dict(d["inner"]),
            interval=interval,
        )
    elif kind == "boost":
        m = galilean_boost(motion_from_dict(d["base"]), d["V"])
    else:
        raise ValueError(f"unknown motion kind {kind!r}")
    return m.validate()
