import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from saarilab.dynamics import (
    MassSystem,
    PhaseState,
    configurational_measure,
    forces,
    inertia,
    inertia_pairwise,
    mutual_distance_bounds,
    pair_distances,
    potential_energy,
    reduce_to_barycenter,
    scalar_diagnostics,
)
from saarilab.errors import CollisionSingularity

SQ3 = math.sqrt(3.0)
EQ_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQ3 / 2]])


def _state(q, p=None):
    q = np.asarray(q, dtype=float)
    return PhaseState(q, np.zeros_like(q) if p is None else p)


# --- MassSystem / PhaseState -------------------------------------------------


def test_mass_system_basics():
    s = MassSystem([4, 2, 1], a=0.5)
    assert s.n == 3 and s.total_mass == 7.0
    assert s.pairs == ((0, 1), (0, 2), (1, 2))
    np.testing.assert_array_equal(s.pair_masses(), [8.0, 4.0, 2.0])
    assert not s.degenerate_exponent
    assert MassSystem([1, 1, 1], a=2).degenerate_exponent


@pytest.mark.parametrize("masses, a, field", [([1, 1], 1, "masses"), ([1, -1, 1], 1, "masses"),
                                               ([1, 0, 1], 1, "masses"), ([1, 1, 1], 0, "a"),
                                               ([1, 1, 1], -1, "a")])
def test_mass_system_rejects_bad_input(masses, a, field):
    with pytest.raises(ValueError, match=field):
        MassSystem(masses, a)


def test_phase_state_shape_checks():
    with pytest.raises(ValueError, match="q"):
        PhaseState(np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError, match="p"):
        PhaseState(np.zeros((3, 2)), np.zeros((2, 2)))


# --- reduce_to_barycenter ------------------------------------------------------


def test_barycenter_equilateral_rest():
    sys = MassSystem([1, 1, 1])
    out = reduce_to_barycenter(_state(EQ_TRI), sys)
    np.testing.assert_allclose(out.q, EQ_TRI - [0.5, SQ3 / 6], atol=1e-15)


def test_barycenter_identity_on_barycentric_input():
    sys = MassSystem([1, 1, 1])
    q = EQ_TRI - EQ_TRI.mean(axis=0)
    p = np.array([[1.0, 0.0], [-0.5, 0.5], [-0.5, -0.5]])
    out = reduce_to_barycenter(PhaseState(q, p), sys)
    np.testing.assert_allclose(out.q, q, atol=1e-16)
    np.testing.assert_allclose(out.p, p, atol=1e-16)


def test_barycenter_weighted():
    sys = MassSystem([4, 2, 1])
    q = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    out = reduce_to_barycenter(_state(q), sys)
    np.testing.assert_allclose(out.q, q - [-2 / 7, 1 / 7], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3, 2), elements=st.floats(-10, 10)), arrays(float, (3, 2), elements=st.floats(-10, 10)),
       st.lists(st.floats(0.1, 10), min_size=3, max_size=3))
def test_barycenter_gauge_and_geometry(q, p, masses):
    sys = MassSystem(masses)
    out = reduce_to_barycenter(PhaseState(q, p), sys)
    qmax = max(np.max(np.abs(out.q)), 1e-300)
    assert np.linalg.norm(sys.masses @ out.q) <= 1e-12 * sys.total_mass * qmax + 1e-300
    assert np.linalg.norm(out.p.sum(axis=0)) <= 1e-12 * max(np.max(np.abs(out.p)), 1.0)
    np.testing.assert_allclose(pair_distances(out.q, sys), pair_distances(q, sys), rtol=1e-14, atol=1e-14)


# --- potential and forces ---------------------------------------------------------


def test_potential_examples():
    sys = MassSystem([1, 1, 1])
    assert potential_energy(_state(EQ_TRI), sys) == pytest.approx(3.0, rel=1e-15)
    assert potential_energy(_state([[-1, 0], [1, 0], [0, 0]]), sys) == pytest.approx(2.5, rel=1e-15)
    assert potential_energy(_state(2 * EQ_TRI), MassSystem([1, 1, 1], a=2)) == pytest.approx(0.375, rel=1e-15)


def test_potential_collision():
    sys = MassSystem([1, 1, 1])
    with pytest.raises(CollisionSingularity):
        potential_energy(_state([[0, 0], [1e-10, 0], [1, 1]]), sys)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("side", [0.5, 1.0, 3.0])
def test_forces_equilateral_symmetric(a, side):
    sys = MassSystem([1, 1, 1], a)
    q = side * (EQ_TRI - EQ_TRI.mean(axis=0))
    np.testing.assert_allclose(forces(_state(q), sys), -3.0 / side ** (a + 2) * q, rtol=1e-13, atol=1e-15)


def test_forces_distant_third_body():
    sys = MassSystem([2.0, 3.0, 1e-12])
    d = 0.7
    g = forces(_state([[0, 0], [d, 0], [1e6, 1e6]]), sys)
    assert g[0, 0] == pytest.approx(6.0 / d**2, rel=1e-12)
    assert abs(g[0, 1]) < 1e-20
    assert g[1, 0] == pytest.approx(-6.0 / d**2, rel=1e-12)


def _numeric_grad(q, sys, h=1e-6):
    grad = np.zeros_like(q)
    for k in range(q.shape[0]):
        for c in range(2):
            qp, qm = q.copy(), q.copy()
            qp[k, c] += h
            qm[k, c] -= h
            grad[k, c] = (potential_energy(qp, sys) - potential_energy(qm, sys)) / (2 * h)
    return grad


def test_forces_match_gradient_100_random_states():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.3, 2.5)
        sys = MassSystem(rng.uniform(0.2, 5, 3), a)
        while True:
            q = rng.uniform(-1, 1, (3, 2))
            if pair_distances(q, sys).min() > 0.3:
                break
        g = forces(q, sys)
        worst = max(worst, np.max(np.abs(g - _numeric_grad(q, sys))) / np.max(np.abs(g)))
    assert worst <= 1e-5


@settings(max_examples=100, deadline=None)
@given(arrays(float, (4, 2), elements=st.floats(-5, 5)), st.floats(0.2, 3.0))
def test_forces_sum_to_zero(q, a):
    sys = MassSystem([1.0, 2.0, 3.0, 0.5], a)
    if pair_distances(q, sys).min() < 1e-2:
        return
    g = forces(q, sys)
    assert np.max(np.abs(g.sum(axis=0))) <= 1e-12 * np.max(np.abs(g))


@settings(max_examples=100, deadline=None)
@given(arrays(float, (3, 2), elements=st.floats(-5, 5)), st.floats(1e-3, 1e3), st.floats(0.2, 3.0))
def test_homogeneity(q, lam, a):
    sys = MassSystem([1.0, 2.0, 3.0], a)
    if pair_distances(q, sys).min() < 1e-2:
        return
    q = reduce_to_barycenter(_state(q), sys).q
    U1, U2 = potential_energy(q, sys), potential_energy(lam * q, sys)
    assert U2 == pytest.approx(lam ** (-a) * U1, rel=1e-12)
    assert inertia(lam * q, sys) == pytest.approx(lam**2 * inertia(q, sys), rel=1e-12)
    assert configurational_measure(lam * q, sys) == pytest.approx(configurational_measure(q, sys), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(float, (3, 2), elements=st.floats(-5, 5)), st.lists(st.floats(0.1, 10), min_size=3, max_size=3))
def test_inertia_two_ways(q, masses):
    sys = MassSystem(masses)
    q = reduce_to_barycenter(_state(q), sys).q
    I1 = inertia(q, sys)
    if I1 < 1e-6:
        return
    assert inertia_pairwise(q, sys) == pytest.approx(I1, rel=1e-12)


# --- scalar diagnostics ------------------------------------------------------------


def test_diagnostics_collinear_rest():
    sys = MassSystem([1, 1, 1])
    d = scalar_diagnostics(_state([[-1, 0], [1, 0], [0, 0]]), sys)
    assert d.I == pytest.approx(2.0, rel=1e-15)
    assert d.U == pytest.approx(2.5, rel=1e-15)
    assert d.mu == pytest.approx(5 / math.sqrt(2), rel=1e-15)


def test_diagnostics_equilateral_rest():
    sys = MassSystem([1, 1, 1])
    q = EQ_TRI - EQ_TRI.mean(axis=0)
    d = scalar_diagnostics(_state(q), sys)
    assert d.I == pytest.approx(1.0, rel=1e-15)
    assert d.mu == pytest.approx(3.0, rel=1e-15)
    assert d.T == 0.0 and d.B == 0.0


def test_diagnostics_lagrange_relative_equilibrium():
    sys = MassSystem([1, 1, 1])
    q = EQ_TRI - EQ_TRI.mean(axis=0)
    w = SQ3
    p = w * np.stack([-q[:, 1], q[:, 0]], axis=1)
    d = scalar_diagnostics(PhaseState(q, p), sys)
    assert d.C == pytest.approx(SQ3, rel=1e-14)
    assert d.T == pytest.approx(1.5, rel=1e-14)
    assert d.H == pytest.approx(-1.5, rel=1e-14)
    assert d.B == pytest.approx(3.0, rel=1e-14)
    assert abs(d.sundman_gap) < 1e-14
    assert d.H == d.T - d.U


@settings(max_examples=200, deadline=None)
@given(arrays(float, (3, 2), elements=st.floats(-5, 5)), arrays(float, (3, 2), elements=st.floats(-5, 5)))
def test_sundman_gap_nonnegative_instantaneous(q, p):
    sys = MassSystem([1.0, 2.0, 3.0])
    s = reduce_to_barycenter(PhaseState(q, p), sys)
    if pair_distances(s.q, sys).min() < 1e-3:
        return
    d = scalar_diagnostics(s, sys)
    assert d.sundman_gap >= 0.0
    assert d.sundman_gap == pytest.approx(d.B - d.C**2, abs=1e-9 * max(1.0, d.B))
    assert d.B == pytest.approx(2 * d.I * d.T - (d.dIdt / 2) ** 2, abs=1e-9 * max(1.0, d.B))


# --- mutual distance bounds -----------------------------------------------------------


def test_bounds_equal_masses():
    sys = MassSystem([1, 1, 1])
    b = mutual_distance_bounds(5 / math.sqrt(2), 2.0, sys)
    for lo, hi in b.values():
        assert lo == pytest.approx(0.16, rel=1e-14)
        assert hi == pytest.approx(6.0, rel=1e-14)


def test_bounds_lower_vanishes_as_mu_grows():
    sys = MassSystem([1, 1, 1])
    lows = [mutual_distance_bounds(mu, 1.0, sys)[(0, 1)][0] for mu in (1e2, 1e4, 1e8)]
    assert lows[0] > lows[1] > lows[2] and lows[2] < 1e-15


@settings(max_examples=200, deadline=None)
@given(arrays(float, (3, 2), elements=st.floats(-5, 5)), st.lists(st.floats(0.1, 10), min_size=3, max_size=3),
       st.floats(0.3, 2.0))
def test_bounds_contain_actual_distances(q, masses, a):
    sys = MassSystem(masses, a)
    q = reduce_to_barycenter(_state(q), sys).q
    r = pair_distances(q, sys)
    if r.min() < 1e-3:
        return
    I = inertia(q, sys)
    b = mutual_distance_bounds(configurational_measure(q, sys), I, sys)
    for (pair, (lo, hi)), rr in zip(b.items(), r):
        assert lo * (1 - 1e-12) <= rr**2 <= hi * (1 + 1e-12)
