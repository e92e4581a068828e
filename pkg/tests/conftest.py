import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("shapekin", max_examples=60, deadline=None)
settings.load_profile("shapekin")


def random_F(rng, n=None, det_range=(0.1, 10.0)):
    """Random deformation gradients with det in ``det_range``."""
    shape = (3, 3) if n is None else (n, 3, 3)
    F = rng.standard_normal(shape) + 2.0 * np.eye(3)
    d = np.linalg.det(F)
    flip = d < 0.0
    F[..., 0, :] = np.where(flip[..., None], -F[..., 0, :], F[..., 0, :])
    lo, hi = np.log(det_range[0]), np.log(det_range[1])
    target = np.exp(rng.uniform(lo, hi, size=np.shape(d)))
    return F * (target / np.abs(d))[..., None, None] ** (1.0 / 3.0)


def random_metric(rng, spread=0.3):
    M = spread * rng.standard_normal((3, 3))
    return np.eye(3) + M @ M.T


def random_hsym_spd(rng, h, spread=0.3):
    """exp of an h-symmetric matrix: h-symmetric positive definite."""
    from scipy.linalg import expm

    S = spread * rng.standard_normal((3, 3))
    S = 0.5 * (S + np.linalg.inv(h) @ S.T @ h)
    return expm(S)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
