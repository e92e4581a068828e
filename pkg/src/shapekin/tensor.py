"""3x3 tensor algebra in fixed-frame coordinates.

Every tensor is a plain ``(..., 3, 3)`` float array.  Leading axes are batch
axes, so the same functions serve single tensors and whole grid fields.  The
metric ``h`` is an explicit symmetric positive definite matrix; it is either a
single ``(3, 3)`` array or broadcastable against the batch.

Which space a tensor lives in (material tangent space vs spatial vectors) is a
documentation convention, not a storage distinction.
"""

from __future__ import annotations

import numpy as np

from .errors import MetricError, NonPositiveShapeError, SingularCompressionError

REL_TOL = 1e-12
EIG_TOL = 1e-10

I3 = np.eye(3)


def T(a):
    """Transpose of the last two axes."""
    return np.swapaxes(a, -1, -2)


def sym(a):
    """Euclidean symmetric part."""
    return 0.5 * (a + T(a))


def skew(a):
    return 0.5 * (a - T(a))


def trace(a):
    return np.trace(a, axis1=-2, axis2=-1)


def fro(a):
    """Frobenius norm over the last two axes."""
    return np.sqrt(np.sum(a * a, axis=(-2, -1)))


def check_metric(h, name="metric"):
    """Raise MetricError unless ``h`` is symmetric and positive definite."""
    h = np.asarray(h, dtype=float)
    if h.shape[-2:] != (3, 3):
        raise MetricError(f"{name} must have trailing shape (3, 3), got {h.shape}")
    if not np.all(np.isfinite(h)):
        raise MetricError(f"{name} has non-finite entries")
    scale = np.maximum(fro(h), np.finfo(float).tiny)
    if np.any(fro(h - T(h)) > REL_TOL * scale):
        raise MetricError(f"{name} is not symmetric")
    if np.any(np.linalg.eigvalsh(sym(h)) <= 0.0):
        raise MetricError(f"{name} is not positive definite")
    return h


def check_positive_det(F, name="F"):
    F = np.asarray(F, dtype=float)
    d = np.linalg.det(F)
    if np.any(~(d > 0.0)):
        bad = np.argwhere(~(np.atleast_1d(d) > 0.0))
        where = tuple(bad[0]) if bad.size else ()
        raise SingularCompressionError(
            f"det {name} must be positive (min {np.min(d):.3e} at {where})"
        )
    return F


def h_adjoint(L, h=None, check=True):
    """Metric-consistent transpose ``h^-1 L^T h``.

    With ``h=None`` the Euclidean metric is used and this is the transpose.
    """
    L = np.asarray(L, dtype=float)
    if h is None:
        return T(L)
    if check:
        check_metric(h)
    h = np.asarray(h, dtype=float)
    return np.linalg.inv(h) @ T(L) @ h


def sym_part_h(L, h=None, check=True):
    """h-symmetric part ``(L + L^+)/2``."""
    L = np.asarray(L, dtype=float)
    return 0.5 * (L + h_adjoint(L, h, check=check))


def is_h_symmetric(A, h=None, tol=REL_TOL):
    A = np.asarray(A, dtype=float)
    hA = A if h is None else np.asarray(h) @ A
    scale = np.maximum(fro(hA), np.finfo(float).tiny)
    return bool(np.all(fro(hA - T(hA)) <= tol * scale))


def _metric_roots(h):
    """Return (h^{1/2}, h^{-1/2}) for an SPD metric (batched)."""
    w, V = np.linalg.eigh(sym(np.asarray(h, dtype=float)))
    if np.any(w <= 0.0):
        raise MetricError("metric is not positive definite")
    s = np.sqrt(w)
    root = (V * s[..., None, :]) @ T(V)
    iroot = (V / s[..., None, :]) @ T(V)
    return root, iroot


_POSITIVE_ONLY = {"ln", "log", "sqrt"}


def _resolve(f):
    if callable(f):
        return f, False
    if isinstance(f, tuple) and f[0] == "power":
        n = float(f[1])
        return (lambda x: np.power(x, n)), True
    table = {
        "ln": np.log,
        "log": np.log,
        "sqrt": np.sqrt,
        "exp": np.exp,
    }
    if f not in table:
        raise ValueError(f"unknown scalar function {f!r}")
    return table[f], f in _POSITIVE_ONLY


def func_of_hsym(A, h=None, f="ln", check=True):
    """Apply a scalar function to an h-symmetric tensor through its eigenvalues.

    ``f`` is a callable acting elementwise on eigenvalues, or one of
    ``"ln"``, ``"sqrt"``, ``"exp"``, ``("power", n)``.  The tensor is
    symmetrized as ``B = h^{1/2} A h^{-1/2}``, diagonalized, and mapped back.
    """
    A = np.asarray(A, dtype=float)
    fn, needs_positive = _resolve(f)
    if h is None:
        B = sym(A)
    else:
        if check:
            check_metric(h)
        root, iroot = _metric_roots(h)
        B = sym(root @ A @ iroot)
    w, V = np.linalg.eigh(B)
    if needs_positive and np.any(w <= 0.0):
        bad = np.argwhere(np.atleast_2d(w).min(axis=-1) <= 0.0)
        raise NonPositiveShapeError(
            f"eigenvalue {w.min():.3e} <= 0 under {f!r}",
            node=tuple(bad[0]) if A.ndim > 2 and bad.size else None,
        )
    out = (V * fn(w)[..., None, :]) @ T(V)
    if h is None:
        return out
    return iroot @ out @ root


def hsym_eigvals(A, h=None):
    """Sorted eigenvalues of an h-symmetric tensor (real by construction)."""
    A = np.asarray(A, dtype=float)
    if h is None:
        return np.linalg.eigvalsh(sym(A))
    root, iroot = _metric_roots(h)
    return np.linalg.eigvalsh(sym(root @ A @ iroot))


def h_norm(S, h=None):
    """Frobenius-type norm ``sqrt(tr(S S^+))`` of a tensor, invariant under h-isometries."""
    S = np.asarray(S, dtype=float)
    return np.sqrt(np.maximum(trace(S @ h_adjoint(S, h, check=False)), 0.0))


def det_trace_dev(A, h=None):
    """Determinant, trace, and deviator ``A - tr(A)/3 I``.

    Trace and determinant are similarity invariants, so ``h`` does not enter;
    it is accepted to keep the call shape uniform with the other operations.
    """
    A = np.asarray(A, dtype=float)
    tr = trace(A)
    dev = A - (tr / 3.0)[..., None, None] * I3
    return np.linalg.det(A), tr, dev


def polar_decompose(F):
    """Polar decomposition ``F = O U_R = U_L O`` (Euclidean metric).

    Returns ``(O, U_R, U_L)``.  Raises SingularCompressionError if det F <= 0.
    """
    F = check_positive_det(F)
    W, s, Vt = np.linalg.svd(F)
    O = W @ Vt
    U_R = (T(Vt) * s[..., None, :]) @ Vt
    U_L = (W * s[..., None, :]) @ T(W)
    return O, U_R, U_L


def is_h_orthogonal(R, h=None, tol=1e-10):
    """``R^T h R == h`` within ``tol`` (relative)."""
    R = np.asarray(R, dtype=float)
    h = I3 if h is None else np.asarray(h, dtype=float)
    lhs = T(R) @ h @ R
    return bool(np.all(fro(lhs - h) <= tol * fro(h))) and bool(
        np.all(np.linalg.det(R) > 0.0)
    )


def rotation(axis, angle):
    """Rodrigues rotation matrix about ``axis`` by ``angle`` (radians)."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    K = np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])
    return I3 + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)
