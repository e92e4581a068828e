import numpy as np
import pytest
from scipy.linalg import expm

from shapekin.errors import DomainError, FrameError
from shapekin.motion import (
    Exponential,
    HomogeneousLinear,
    Identity,
    Poly,
    Radial,
    RigidMotion,
    SimpleShear,
    Sinusoid,
    SteadyFlow,
    Uniaxial,
    Warp,
    compose,
    const,
    current_distance,
    deformation_gradient,
    evaluate,
    galilean_boost,
    linear,
    motion_from_dict,
    superpose_rigid,
    time_function,
    velocity_gradient,
)
from shapekin.tensor import I3, fro, rotation

X = np.array([[0.3, -0.2, 0.5], [1.0, 0.4, -0.7], [0.0, 0.0, 0.0]])


def _motions():
    return [
        Identity(),
        SimpleShear(gamma=Sinusoid(0.8, 2.0)),
        Uniaxial(stretch=Exponential(1.0, 0.5), axis=2),
        Radial(scale=Poly((1.0, 0.3, 0.2))),
        RigidMotion(axis=(1.0, 2.0, 0.5), angle=linear(1.3), c=(linear(0.2), const(0.0), Poly((0, 0, 1.0)))),
        SteadyFlow(Lm=((0.1, 0.4, 0.0), (-0.2, 0.0, 0.3), (0.0, 0.1, -0.1))),
        Warp(amplitude=linear(0.4), i=1, j=2),
        HomogeneousLinear(K=((linear(0.1, 1.0), const(0.2), const(0.0)),
                             (const(0.0), Poly((1.0, 0.0, 0.3)), const(0.0)),
                             (const(0.0), const(0.0), const(1.0))),
                          c=(const(0.0), linear(1.0), const(0.0))),
        compose(Warp(amplitude=linear(0.3)), SimpleShear(gamma=linear(0.5), plane=(2, 0))),
    ]


@pytest.mark.parametrize("m", _motions(), ids=lambda m: type(m).__name__)
def test_kinematics_against_finite_differences(m):
    # [DERIVED] central differences in t and X as the oracle
    t, dt, dx = 0.4, 1e-5, 1e-5
    x = m.position(t, X)
    v_fd = (m.position(t + dt, X) - m.position(t - dt, X)) / (2 * dt)
    np.testing.assert_allclose(m.velocity(t, X), v_fd, atol=1e-8)
    F_fd = np.stack([(m.position(t, X + dx * e) - m.position(t, X - dx * e)) / (2 * dx) for e in I3], axis=-1)
    np.testing.assert_allclose(m.F(t, X), F_fd, atol=1e-8)
    Fd_fd = (m.F(t + dt, X) - m.F(t - dt, X)) / (2 * dt)
    np.testing.assert_allclose(m.Fdot(t, X), Fd_fd, atol=1e-8)
    np.testing.assert_allclose(m.inverse(t, x), X, atol=1e-12)
    # L maps velocity differences: v(X + dX) - v(X) ~ L (x(X + dX) - x(X))
    L = velocity_gradient(m, t, x)
    np.testing.assert_allclose(L, m.Fdot(t, X) @ np.linalg.inv(m.F(t, X)), atol=1e-12)


def test_identity_and_evaluate():
    m = Identity()
    x, v = evaluate(m, 0.5, X)
    np.testing.assert_array_equal(x, X)
    np.testing.assert_array_equal(v, 0.0)
    np.testing.assert_array_equal(deformation_gradient(m, 0.5, X), np.broadcast_to(I3, (3, 3, 3)))


def test_rigid_velocity_gradient_is_skew():
    m = RigidMotion(axis=(0.2, 0.3, 1.0), angle=Sinusoid(1.0, 3.0))
    L = velocity_gradient(m, 0.3, X)
    np.testing.assert_allclose(L + np.swapaxes(L, -1, -2), 0.0, atol=1e-14)


def test_steady_flow_is_matrix_exponential():
    Lm = np.array([[0.1, 0.4, 0.0], [-0.2, 0.0, 0.3], [0.0, 0.1, -0.1]])
    m = SteadyFlow(Lm=tuple(map(tuple, Lm)))
    np.testing.assert_allclose(m.F(0.7, X[0]), expm(0.7 * Lm), rtol=1e-14)
    np.testing.assert_array_equal(m.L_at_label(0.7, X[0]), Lm)


def test_simple_shear_closed_form():
    m = SimpleShear(gamma=linear(2.0))
    F = m.F(0.5, X[0])
    np.testing.assert_allclose(F, [[1, 1, 0], [0, 1, 0], [0, 0, 1]])
    np.testing.assert_allclose(m.L_at_label(0.5, X[0]), [[0, 2, 0], [0, 0, 0], [0, 0, 0]])


def test_time_domain():
    m = SimpleShear(interval=(0.0, 1.0))
    with pytest.raises(DomainError):
        m.F(1.5, X)
    with pytest.raises(DomainError):
        Uniaxial(stretch=linear(-2.0, 1.0)).validate()


def test_superpose_rigid_transforms_F():
    base = SimpleShear(gamma=linear(0.9))
    Q = rotation([1, 0, 1], 0.8)
    m = superpose_rigid(base, Q=Q, c=(0.3, 0.0, -1.0), x0=(0.1, 0.2, 0.3))
    t = 0.6
    np.testing.assert_allclose(m.F(t, X), Q @ base.F(t, X), atol=1e-14)
    expected = (base.position(t, X) - np.array([0.1, 0.2, 0.3])) @ Q.T + np.array([0.3, 0.0, -1.0])
    np.testing.assert_allclose(m.position(t, X), expected, atol=1e-14)
    # distances are preserved by a superposed rigid motion
    np.testing.assert_allclose(current_distance(m, t, X[0], X[1]), current_distance(base, t, X[0], X[1]))


def test_superpose_time_dependent_rotation():
    base = Uniaxial(stretch=Exponential(1.0, 0.4))
    m = superpose_rigid(base, axis=(0, 0, 1), angle=linear(1.0), c=(linear(0.5), 0.0, 0.0))
    t = 0.7
    np.testing.assert_allclose(m.F(t, X), rotation((0, 0, 1), t) @ base.F(t, X), atol=1e-14)


def test_superpose_rejects_non_orthogonal():
    with pytest.raises(FrameError):
        superpose_rigid(Identity(), Q=np.diag([1.0, 2.0, 1.0]))
    with pytest.raises(FrameError):
        superpose_rigid(Identity(), Q=np.diag([1.0, 1.0, -1.0]))


def test_galilean_boost():
    base = Warp(amplitude=linear(0.5))
    V = (1.0, -2.0, 0.5)
    m = galilean_boost(base, V)
    t = 0.3
    np.testing.assert_allclose(m.position(t, X), base.position(t, X) - t * np.array(V))
    np.testing.assert_allclose(m.velocity(t, X), base.velocity(t, X) - np.array(V))
    np.testing.assert_array_equal(m.L_at_label(t, X), base.L_at_label(t, X))
    np.testing.assert_allclose(m.inverse(t, m.position(t, X)), X, atol=1e-14)


def test_current_distance_metric():
    m = Uniaxial(stretch=const(2.0))
    P, Q = np.zeros(3), np.array([1.0, 0.0, 0.0])
    assert current_distance(m, 0.2, P, Q) == pytest.approx(2.0)
    assert current_distance(m, 0.2, P, Q, h=np.diag([4.0, 1.0, 1.0])) == pytest.approx(4.0)


def test_descriptor_round_trip():
    for m in _motions():
        if isinstance(m, HomogeneousLinear):
            continue
        m2 = motion_from_dict(m.to_dict())
        t = 0.35
        np.testing.assert_allclose(m2.position(t, X), m.position(t, X), atol=1e-14)
        np.testing.assert_allclose(m2.F(t, X), m.F(t, X), atol=1e-14)
    b = motion_from_dict({"kind": "boost", "V": [1, 0, 0], "base": {"kind": "simple_shear", "gamma": 0.5}})
    assert fro(b.F(0.1, X[0]) - SimpleShear(gamma=const(0.5)).F(0.1, X[0])) == 0.0
    with pytest.raises(ValueError):
        motion_from_dict({"kind": "teleport"})
    with pytest.raises(ValueError):
        time_function({"cosh": 1})
