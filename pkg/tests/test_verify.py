import numpy as np
import pytest

from discmech import models, optimal_control as oc, second_order as so, verify as V
from discmech.errors import NotOnShell
from discmech.groupoid import PairBackend, SO3Backend
from discmech.second_order import Trajectory


def test_implicit_residual_spline_example():
    w = Trajectory.from_nodes([0, 0, 1, 0, 0.0]).elements
    assert V.implicit_dynamics_residual(models.spline(1), w) == pytest.approx([6.0], abs=1e-6)


def test_implicit_residual_vanishes_on_solutions():
    L = models.anharmonic_spline(2, 0.4)
    w = Trajectory.from_nodes([[0, 0], [0.1, 0.2], [0.3, 0.3], [0.4, 0.5]]).elements
    g4 = so.solve_step(L, *w)
    assert np.max(np.abs(V.implicit_dynamics_residual(L, w + [g4]))) <= 1e-6


def test_momentum_triple_parts():
    # on Q x Q: mu = -D1, mu_tilde = D2 (the shared node), mu_bar = D3
    L = models.spline(1)
    g, h = Trajectory.from_nodes([0.0, 1.0, 5.0]).elements
    t = V.momentum_triple(L, g, h)
    a = 5.0 - 2.0 + 0.0
    assert t.mu == pytest.approx([-a], abs=1e-6)
    assert t.mu_tilde == pytest.approx([-2 * a], abs=1e-6)
    assert t.mu_bar == pytest.approx([a], abs=1e-6)


@pytest.mark.parametrize("backend", ["pair", "so3", "action"])
def test_implicit_equals_so_residual(backend):
    rng = np.random.default_rng(11)
    if backend == "pair":
        L = models.anharmonic_spline(2, 0.3)
        make = lambda: Trajectory.from_nodes(rng.normal(size=(5, 2))).elements
    elif backend == "so3":
        L = oc.rigidbody_lagrangian(oc.RigidBodyParams())
        make = lambda: [SO3Backend().random_element(rng, 0.3) for _ in range(4)]
    else:
        p = oc.HeavyTopParams()
        L, _ = oc.heavytop_problem(p)

        def make():
            G = rng.normal(size=3)
            G /= np.linalg.norm(G)
            th, out = rng.normal(size=2), []
            for _ in range(4):
                nxt = th + 0.1 * rng.normal(size=2)
                out.append(oc.heavytop_arrow(G, th, rng.normal(size=3), nxt, p))
                G, th = out[-1].target[:3], nxt
            return out
    for _ in range(10):
        w = make()
        assert np.allclose(V.implicit_dynamics_residual(L, w), so.so_residual(L, w), atol=1e-6)


def test_symplecticity():
    rng = np.random.default_rng(0)
    osc = models.harmonic(1, hbar=0.1)
    free = models.free_particle(1, hbar=0.1)
    for q, p in rng.uniform(-1, 1, size=(5, 2)):
        assert V.symplecticity_defect(osc, q, p) <= 1e-5
        assert V.symplecticity_defect(free, q, p) <= 1e-9


def test_symplectic_jacobian_defect_examples():
    assert V.symplectic_jacobian_defect(np.eye(4)) == 0.0
    assert V.symplectic_jacobian_defect(np.diag([2.0, 1.0])) == pytest.approx(np.sqrt(2))
    assert V.symplectic_jacobian_defect(np.array([[1.0, 0.3], [0.0, 1.0]])) == pytest.approx(0.0)


def test_symplecticity_pair_only():
    Ld = oc.rigidbody_Ld1(oc.RigidBodyParams())
    with pytest.raises(TypeError):
        V.symplecticity_defect(Ld, np.zeros(3), np.zeros(3))


def start_nodes(seed=3):
    rng = np.random.default_rng(seed)
    return V.cubic_nodes([rng.normal(size=2), 0.1 * rng.normal(size=2),
                          1e-3 * rng.normal(size=2), 1e-5 * rng.normal(size=2)], 4)


def test_noether_rotation_and_translation():
    L = models.spline(2)
    traj = V.on_shell_trajectory(L, start_nodes(), 100)
    assert len(traj.elements) == 100
    assert V.noether_defect(L, V.NoetherData(V.rotation_generator), traj) <= 1e-9
    for d in ([1.0, 0.0], [0.0, 1.0]):
        assert V.noether_defect(L, V.NoetherData(V.translation_generator(d)), traj) <= 1e-9


def test_noether_isotropic_potential_keeps_angular_momentum():
    L = models.anharmonic_spline(2, 1.0)
    traj = V.on_shell_trajectory(L, start_nodes(0), 10)
    assert V.noether_defect(L, V.NoetherData(V.rotation_generator), traj) <= 1e-9
    assert V.noether_defect(L, V.NoetherData(V.translation_generator([1, 0])), traj) >= 1e-2


def test_noether_gauge_term_enters():
    L = models.spline(2)
    traj = V.on_shell_trajectory(L, start_nodes(), 20)
    gauge = V.NoetherData(V.translation_generator([1.0, 0.0]), gauge=lambda a, b: b[0])
    assert V.noether_defect(L, gauge, traj) > 1e-3


def test_noether_requires_on_shell():
    L = models.spline(2)
    traj = Trajectory.from_nodes(np.random.default_rng(0).normal(size=(10, 2)))
    with pytest.raises(NotOnShell):
        V.noether_defect(L, V.NoetherData(V.rotation_generator), traj)


def test_ep_order():
    tab = V.ep_order_check((1.0, 2.0, 3.0), [0.3, -0.5, 0.8], [0.1, 0.05, 0.025])
    assert np.all(tab.ratios >= 1.8)
    assert np.all(tab.orders >= 1.0)


def test_ep_order_trivial_cases():
    assert np.all(V.ep_order_check((1, 2, 3), np.zeros(3), [0.1, 0.05]).errors == 0)
    iso = V.ep_order_check((2, 2, 2), [0.3, -0.5, 0.8], [0.1, 0.05])
    assert np.all(iso.errors <= 1e-12)
    with pytest.raises(ValueError):
        V.ep_order_check((1, 2, 3), [1, 0, 0], [0.05, 0.1])


def test_stationarity_ratios_on_spline_solution():
    L = models.spline(2)
    guess = Trajectory.from_nodes(np.random.default_rng(2).normal(size=(9, 2)))
    traj = so.solve_bvp(so.BvpProblem(L, guess))
    r = V.stationarity_ratios(L, traj)
    assert np.all((r >= 80) & (r <= 120))


def test_stationarity_ratio_off_shell_is_linear():
    L = models.spline(1)
    traj = Trajectory.from_nodes([0, 0, 1, 3, 2, 5, 1, 0, 1.0])
    r = V.stationarity_ratios(L, traj)
    assert np.all(np.abs(r - 10) < 1)


def test_run_suite():
    checks = V.run_suite("cayley")
    assert [c.name for c in checks][0].startswith("cayley")
    assert all(c.passed for c in checks)
    with pytest.raises(ValueError):
        V.run_suite("bogus")


def test_check_relation():
    assert V.Check("x", 2.0, 1.0, ">=").passed
    assert not V.Check("x", 2.0, 1.0).passed


def test_pair_backend_required_for_noether():
    L = oc.rigidbody_lagrangian(oc.RigidBodyParams())
    traj = Trajectory([SO3Backend().identity() for _ in range(5)])
    with pytest.raises(TypeError):
        V.noether_defect(L, V.NoetherData(lambda q: q), traj)
    assert isinstance(models.spline(1).backend, PairBackend)
