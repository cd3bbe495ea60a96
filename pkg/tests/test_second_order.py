import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import brentq, minimize

from discmech import liealg, models, second_order as so
from discmech.errors import NoConvergence, NotComposable, SingularJacobian
from discmech.groupoid import PairBackend, SO3Backend
from discmech.second_order import BvpProblem, ConstraintSet, DiscreteLagrangian2, Trajectory


def window(*q):
    return Trajectory.from_nodes(np.asarray(q, dtype=float)).elements


def spline_fd(analytic):
    L = models.spline(1)
    return L if analytic else DiscreteLagrangian2.from_triple(L.triple, 1)


def test_action_sum_examples():
    L = models.spline(1)
    assert so.action_sum(L, Trajectory.from_nodes([0, 1, 2, 3, 4.0])) == 0.0
    assert so.action_sum(L, Trajectory.from_nodes([0, 1, 4, 9, 16.0])) == 6.0
    const = DiscreteLagrangian2.from_triple(lambda a, b, c: 2.5, 1)
    assert so.action_sum(const, Trajectory.from_nodes(np.arange(7.0))) == pytest.approx(5 * 2.5)


@pytest.mark.parametrize("analytic", [False, True])
def test_so_residual_examples(analytic):
    L = spline_fd(analytic)
    assert so.so_residual(L, window(0, 0, 1, 0, 0)) == pytest.approx([6.0], abs=1e-6)
    assert so.so_residual(L, window(0, 1, 4, 9, 16)) == pytest.approx([0.0], abs=1e-6)
    assert so.so_residual(L, window(0, 1, 2, 3, 4)) == pytest.approx([0.0], abs=1e-6)
    const = DiscreteLagrangian2.from_triple(lambda a, b, c: 1.0, 1)
    assert so.so_residual(const, window(0, 1, 4, 9, 16)) == pytest.approx([0.0])


def test_so_residual_separable():
    L2 = models.spline(2)
    q = np.column_stack([[0, 0, 1, 0, 0], [0, 1, 4, 9, 16]]).astype(float)
    r = so.so_residual(L2, Trajectory.from_nodes(q).elements)
    assert r == pytest.approx([6.0, 0.0])


def test_window_must_be_composable():
    be = PairBackend(1)
    w = window(0, 1, 2, 3, 4)
    w[2] = be.element(5.0, 3.0)
    with pytest.raises(NotComposable):
        so.so_residual(models.spline(1), w)


q5 = arrays(np.float64, (5, 2), elements=st.floats(-2, 2))


@settings(max_examples=50)
@given(q5)
def test_so_residual_pair_matches_classical(q):
    f = lambda a, b, c: float(np.sin(a @ c) + (c - 2 * b + a) @ (c - 2 * b + a) + b[0] ** 3)

    def grad(a, b, c):
        s = c - 2 * b + a
        return (np.cos(a @ c) * c + 2 * s, -4 * s + np.array([3 * b[0] ** 2, 0.0]),
                np.cos(a @ c) * a + 2 * s)

    want = grad(*q[0:3])[2] + grad(*q[1:4])[1] + grad(*q[2:5])[0]
    assert np.allclose(so.so_residual_pair(f, *q), want, atol=1e-6)
    L2 = DiscreteLagrangian2.from_triple(f, 2)
    assert np.allclose(so.so_residual(L2, Trajectory.from_nodes(q).elements), want, atol=1e-6)


def rot_lagrangian():
    return DiscreteLagrangian2(
        lambda g, h: 0.5 * float(np.sum(liealg.cay_inv(g.payload[0].T @ h.payload[0]) ** 2)
                                 + 0.3 * liealg.cay_inv(h.payload[0])[0]), SO3Backend())


def test_so_residual_group_examples():
    I = np.eye(3)
    const = DiscreteLagrangian2(lambda g, h: 1.0, SO3Backend())
    R = [liealg.cay(v) for v in ([0.1, 0, 0], [0, 0.2, 0], [0, 0, 0.3], [0.1, 0.1, 0.1])]
    assert so.so_residual_group(const, *R) == pytest.approx(np.zeros(3))
    L = DiscreteLagrangian2(
        lambda g, h: 0.5 * float(np.sum(liealg.cay_inv(g.payload[0].T @ h.payload[0]) ** 2)),
        SO3Backend())
    assert so.so_residual_group(L, I, I, I, I) == pytest.approx(np.zeros(3), abs=1e-10)


def test_so_residual_group_matches_generic():
    rng = np.random.default_rng(3)
    L = rot_lagrangian()
    be = SO3Backend()
    for _ in range(20):
        w = [be.random_element(rng, 0.4) for _ in range(4)]
        assert np.allclose(so.so_residual_group(L, *[g.payload[0] for g in w]),
                           so.so_residual(L, w), atol=1e-6)


def test_constrained_residual():
    L = models.spline(1)
    w = window(0, 1, 2, 3, 4)
    vel = ConstraintSet([lambda g, h: h.payload[1][0] - g.payload[0][0] - 2.0])
    first, second = so.constrained_residual(L, vel, w, [0.0], [0.0], [0.0])
    assert first == pytest.approx(so.so_residual(L, w), abs=1e-8)
    lam = (0.7, -1.3, 2.1)
    first, second = so.constrained_residual(L, vel, w, *lam)
    assert second == pytest.approx(np.zeros(3), abs=1e-12)
    # only the end nodes of each triple enter Phi: +1 from (g1,g2), -1 from (g3,g4)
    assert first == pytest.approx([lam[0] - lam[2]], abs=1e-8)
    zero = ConstraintSet([lambda g, h: 0.0])
    first, second = so.constrained_residual(L, zero, w, [5.0], [6.0], [7.0])
    assert np.array_equal(second, np.zeros(3))
    assert first == pytest.approx(so.so_residual(L, w), abs=1e-8)


def test_solve_step_linear_continuation():
    g4 = so.solve_step(models.spline(1), *window(0, 1, 2, 3))
    assert g4.payload[1] == pytest.approx([4.0], abs=1e-10)


@pytest.mark.parametrize("L", [models.spline(1), models.anharmonic_spline(1, 0.3)])
def test_solve_step_matches_root_scan(L):
    w = window(0, 1, 4, 9)
    g4 = so.solve_step(L, *w)
    be = PairBackend(1)
    r = lambda q: so.so_residual(L, w + [be.element(9.0, q)])[0]
    assert g4.payload[1][0] == pytest.approx(brentq(r, -100, 100, xtol=1e-14), abs=1e-9)


def test_solve_step_degenerate():
    zero = DiscreteLagrangian2.from_triple(lambda a, b, c: 0.0, 1)
    with pytest.raises(SingularJacobian):
        so.solve_step(zero, *window(0, 1, 2, 3))


def test_bvp_linear_interpolant():
    guess = Trajectory.from_nodes([0, 1, 3.0, -2.0, 5.0, 0.5, 4.0, 7, 8])
    traj = so.solve_bvp(BvpProblem(models.spline(1), guess))
    assert np.allclose(traj.nodes()[:, 0], np.arange(9.0), atol=1e-10)
    assert traj.info.residual <= 1e-10
    assert traj.multipliers is None


def test_bvp_matches_brute_force():
    L = models.spline(1)
    ends = ([0.0, 0.0], [0.0, 1.0])
    guess = Trajectory.from_nodes(np.r_[ends[0], np.zeros(5), ends[1]])
    traj = so.solve_bvp(BvpProblem(L, guess))
    obj = lambda x: so.action_sum(L, Trajectory.from_nodes(np.r_[ends[0], x, ends[1]]))
    ref = minimize(obj, np.zeros(5), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 40000, "maxfev": 40000})
    assert np.max(np.abs(traj.nodes()[2:-2, 0] - ref.x)) <= 1e-5
    assert np.max(np.abs(so.window_residuals(L, traj))) <= 1e-8


def test_bvp_infeasible_constraint():
    guess = Trajectory.from_nodes(np.arange(9.0))
    C = ConstraintSet([lambda g, h: 1.0])
    with pytest.raises(NoConvergence) as e:
        so.solve_bvp(BvpProblem(models.spline(1), guess, C))
    assert e.value.constraint_max == pytest.approx(1.0)


def test_bvp_with_feasible_constraint_and_multiplier_shape():
    # second differences pinned to 2 with boundary data from q_k = k^2
    N = 9
    k = np.arange(N, dtype=float)
    guess = Trajectory.from_nodes(k ** 2 + 0.3 * np.sin(3 * k) * (k > 1) * (k < N - 2))
    accel = ConstraintSet([lambda g, h: h.payload[1][0] - 2 * g.payload[1][0] + g.payload[0][0] - 2])
    traj = so.solve_bvp(BvpProblem(models.spline(1), guess, accel))
    assert traj.multipliers.shape == (N - 2, 1)
    assert traj.info.constraint_max <= 1e-10
    assert np.allclose(traj.nodes()[:, 0], k ** 2, atol=1e-9)


def test_bvp_needs_five_nodes():
    with pytest.raises(ValueError):
        BvpProblem(models.spline(1), Trajectory.from_nodes([0, 1, 2, 3.0]))


def test_trajectory_rejects_gaps():
    be = PairBackend(1)
    with pytest.raises(NotComposable):
        Trajectory([be.element(0, 1), be.element(1.5, 2)])


def test_shoot_spline_stays_cubic():
    traj = so.shoot(models.spline(1), window(0, 1, 8, 27), 6)
    assert np.allclose(traj.nodes()[:, 0], np.arange(10.0) ** 3, atol=1e-7)


def test_bvp_on_so3():
    be = SO3Backend()
    rng = np.random.default_rng(5)
    guess = Trajectory([be.random_element(rng, 0.2) for _ in range(7)])
    L = rot_lagrangian()
    traj = so.solve_bvp(BvpProblem(L, guess))
    assert np.max(np.abs(so.window_residuals(L, traj))) <= 1e-8
    # boundary arrows and the overall rotation are preserved
    assert np.allclose(traj.elements[0].payload[0], guess.elements[0].payload[0])
    assert np.allclose(traj.nodes()[-1], guess.nodes()[-1], atol=1e-12)
