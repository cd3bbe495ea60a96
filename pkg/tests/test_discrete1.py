import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from discmech import discrete1 as d1, liealg, models, verify
from discmech.discrete1 import DiscreteLagrangian1, Momentum
from discmech.errors import NotComposable, SingularJacobian
from discmech.groupoid import PairBackend, SO3Backend
from discmech.optimal_control import RigidBodyParams, rigidbody_Ld1

coord = st.floats(-2, 2)


def free(hbar=1.0, analytic=False):
    fn = lambda q0, q1: 0.5 * float((q1 - q0) @ (q1 - q0)) / hbar
    if analytic:
        return models.free_particle(1, hbar)
    return DiscreteLagrangian1.from_pair(fn, 1)


def pair(*q):
    be = PairBackend(1)
    return [be.element(a, b) for a, b in zip(q[:-1], q[1:])]


@pytest.mark.parametrize("analytic", [False, True])
def test_del_residual_examples(analytic):
    Ld = free(analytic=analytic)
    assert d1.del_residual(Ld, *pair(0, 1, 2)) == pytest.approx([0.0], abs=1e-8)
    assert d1.del_residual(Ld, *pair(0, 1, 3)) == pytest.approx([-1.0], abs=1e-8)
    const = DiscreteLagrangian1.from_pair(lambda a, b: 3.0, 1)
    assert d1.del_residual(const, *pair(0, 1, 3)) == pytest.approx([0.0])


def test_del_residual_needs_composable_pair():
    be = PairBackend(1)
    with pytest.raises(NotComposable):
        d1.del_residual(free(), be.element(0, 1), be.element(2, 3))


@settings(max_examples=50)
@given(coord, coord, coord)
def test_del_residual_is_classical(q0, q1, q2):
    fn = lambda a, b: float(np.cos(a[0]) * b[0] ** 2 + (b[0] - a[0]) ** 4)
    Ld = DiscreteLagrangian1.from_pair(fn, 1)
    D2 = lambda a, b: np.cos(a) * 2 * b + 4 * (b - a) ** 3
    D1 = lambda a, b: -np.sin(a) * b ** 2 - 4 * (b - a) ** 3
    want = D2(q0, q1) + D1(q1, q2)
    assert d1.del_residual(Ld, *pair(q0, q1, q2))[0] == pytest.approx(want, abs=1e-6)


def test_legendre_examples():
    Ld = free(hbar=0.5)
    mu = d1.legendre_minus(Ld, pair(0, 1)[0])
    assert mu.components == pytest.approx([2.0], abs=1e-8)
    assert np.array_equal(mu.base, [0.0])
    assert d1.legendre_plus(Ld, pair(0, 1)[0]).components == pytest.approx([2.0], abs=1e-8)
    const = DiscreteLagrangian1.from_pair(lambda a, b: 3.0, 1)
    assert d1.legendre_minus(const, pair(0, 1)[0]).components == pytest.approx([0.0])


def test_step_free_particle():
    h = d1.step(free(), pair(0, 1)[0])
    assert np.allclose(h.payload, ([1.0], [2.0]), atol=1e-10)


def test_step_harmonic_matches_recurrence():
    hb = 0.1
    h = d1.step(models.harmonic(1, hbar=hb), pair(0, 0.1)[0])
    a, b = 1 / hb + hb / 4, 2 / hb - hb / 2
    assert h.payload[1][0] == pytest.approx((0.1 * b - 0.0 * a) / a, abs=1e-12)


def test_step_degenerate_is_singular():
    zero = DiscreteLagrangian1.from_pair(lambda a, b: 0.0, 1)
    with pytest.raises(SingularJacobian):
        d1.step(zero, pair(0, 1)[0])


def test_hamiltonian_step_examples():
    out = d1.hamiltonian_step(free(), Momentum(np.array([1.0]), np.array([0.0])))
    assert out.base == pytest.approx([1.0]) and out.components == pytest.approx([1.0])
    out = d1.hamiltonian_step(free(), Momentum(np.array([0.0]), np.array([0.4])))
    assert out.base == pytest.approx([0.4]) and out.components == pytest.approx([0.0], abs=1e-10)


def test_momentum_matching_along_harmonic_flow():
    Ld = models.harmonic(2, hbar=0.1, omega=1.3)
    g0 = Ld.backend.element([0.3, -0.1], [0.32, -0.05])
    arrows = verify.first_order_trajectory(Ld, g0, 100)
    assert verify.momentum_matching_defects(Ld, arrows).max() <= 1e-9


def test_step_on_so3():
    Ld = rigidbody_Ld1(RigidBodyParams())
    g = SO3Backend().element(liealg.cay([0.05, -0.02, 0.03]))
    h = d1.step(Ld, g)
    assert np.max(np.abs(d1.del_residual(Ld, g, h))) <= 1e-10


def test_ep_residual_examples():
    l = lambda x: 0.5 * float(x @ x)
    assert d1.ep_residual(l, None, np.zeros(3), np.zeros(3), 0.1) == pytest.approx(np.zeros(3))
    eta = np.array([0.3, -0.4, 1.2])
    assert d1.ep_residual(l, lambda x: x, eta, eta, 0.1) == pytest.approx(np.zeros(3), abs=1e-14)
    with pytest.raises(ValueError):
        d1.ep_residual(l, None, eta, eta, 0.0)


def test_ep_flow_conserves_discrete_momentum_norm():
    I, h = np.array([1.0, 2.0, 3.0]), 0.05
    etas = d1.ep_flow(lambda x: 0.5 * float(x @ (I * x)), lambda x: I * x,
                      [1.0, 0.5, 0.2], h, 200)
    # the discrete momentum is the trivialized pairing, not I eta itself
    mu = [np.linalg.norm(liealg.dcay_inv(h * x).T @ (I * x)) for x in etas]
    energy = 0.5 * np.sum(I * etas ** 2, axis=1)
    assert np.ptp(mu) < 1e-10
    assert np.ptp(energy) < 1e-3
