"""Classical deformation and strain families built on a deformation gradient.

These are the reference-configuration based measures (Cauchy-Green powers,
Seth-Hill strains, Hencky strain, small Cauchy strain).  They serve as
baselines for the frame-free quantities in :mod:`shapekin.shape`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import I3, T, check_positive_det, func_of_hsym, sym


@dataclass(frozen=True)
class StrainFamilyIndex:
    """Member of the Seth-Hill family: real exponent ``n`` and ``side``.

    ``n = 0`` selects the Hencky (logarithmic) member.
    """

    n: float = 0.0
    side: str = "right"

    def __post_init__(self):
        if not np.isfinite(self.n):
            raise ValueError("exponent n must be finite")
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")


def _squared_stretch(F, side):
    # U_L^2 = F F^T, U_R^2 = F^T F
    return F @ T(F) if side == "left" else T(F) @ F


def cauchy_green(F, idx: StrainFamilyIndex):
    """Deformation tensor ``U_side ** n``."""
    F = check_positive_det(F)
    if idx.n == 0.0:
        return np.broadcast_to(I3, F.shape).copy()
    return func_of_hsym(_squared_stretch(F, idx.side), None, ("power", 0.5 * idx.n))


def strain_family(F, idx: StrainFamilyIndex):
    """Seth-Hill strain ``(U^n - I)/n``; ``ln U`` for ``n = 0``."""
    F = check_positive_det(F)
    C = _squared_stretch(F, idx.side)
    if idx.n == 0.0:
        return 0.5 * func_of_hsym(C, None, "ln")
    return (func_of_hsym(C, None, ("power", 0.5 * idx.n)) - I3) / idx.n


def hencky_strain(F, side="right"):
    return strain_family(F, StrainFamilyIndex(0.0, side))


def cauchy_strain(F):
    """Small-strain measure ``sym(F) - I``."""
    return sym(np.asarray(F, dtype=float)) - I3


def invert(F):
    return np.linalg.inv(check_positive_det(F))


def compose_F(F_21, F_10):
    """Chain two deformation gradients: ``F_20 = F_21 F_10``."""
    F_21 = check_positive_det(F_21, "F_21")
    F_10 = check_positive_det(F_10, "F_10")
    return F_21 @ F_10
