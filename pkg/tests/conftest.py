import math

import numpy as np
import pytest

from saarilab.dynamics import MassSystem, PhaseState, reduce_to_barycenter
from saarilab.integrate import integrate
from saarilab.scenario import euler_collinear_spin, lagrange_circular

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Remember one acceptance result for the terminal summary."""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {detail}")
    print(ACCEPTANCE_LINES[-1])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def equal3():
    return MassSystem([1.0, 1.0, 1.0], 1.0)


@pytest.fixture(scope="session")
def masses421():
    return MassSystem([4.0, 2.0, 1.0], 1.0)


@pytest.fixture(scope="session")
def stable_masses():
    # Routh: 27 (m1 m2 + m2 m3 + m3 m1) < M^2 keeps the Lagrange equilibrium linearly stable
    return MassSystem([100.0, 1.0, 0.01], 1.0)


@pytest.fixture(scope="session")
def lagrange_short(equal3):
    """Equal-mass circular Lagrange orbit over two periods."""
    state, exp = lagrange_circular(equal3)
    return integrate(state, equal3, t_end=2 * exp["period"]), exp


@pytest.fixture(scope="session")
def lagrange_stable(stable_masses):
    state, exp = lagrange_circular(stable_masses)
    return integrate(state, stable_masses, t_end=10 * exp["period"]), exp


@pytest.fixture(scope="session")
def lagrange_elliptic(stable_masses):
    """Rigidly similar equilateral orbit with sub-circular spin (homographic, not circular)."""
    state, exp = lagrange_circular(stable_masses, omega_scale=0.8)
    return integrate(state, stable_masses, t_end=3 * exp["period"]), exp


@pytest.fixture(scope="session")
def euler_spin(masses421):
    state, exp = euler_collinear_spin(masses421, 2)
    return integrate(state, masses421, t_end=0.5 * exp["period"]), exp


@pytest.fixture(scope="session")
def generic_orbit(masses421):
    """Bounded, collision-free, non-homographic orbit."""
    q = np.array([[-1.0, 0.1], [1.2, -0.2], [0.3, 1.4]])
    p = np.array([[0.3, -1.1], [0.4, 0.9], [-0.5, 0.35]])
    state = reduce_to_barycenter(PhaseState(q, p), masses421)
    return integrate(state, masses421, t_end=1.5)


def random_shape(rng, spread=1.0, min_dist=0.2):
    """Random triangle (complex) with all sides above ``min_dist``."""
    while True:
        z = spread * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        if min(abs(z[0] - z[1]), abs(z[1] - z[2]), abs(z[2] - z[0])) > min_dist:
            return z


def random_bounded_state(rng, sys, energy_fraction=0.5):
    """Random barycentric state with ``H < 0`` (kinetic energy a fraction of ``U``)."""
    from saarilab.dynamics import potential_energy

    while True:
        q = rng.uniform(-1, 1, (3, 2))
        r = [np.linalg.norm(q[j] - q[k]) for j, k in sys.pairs]
        if min(r) > 0.3:
            break
    p = rng.standard_normal((3, 2))
    s = reduce_to_barycenter(PhaseState(q, p), sys)
    U = potential_energy(s, sys)
    T = 0.5 * np.sum(s.p**2 / sys.masses[:, None])
    scale = math.sqrt(energy_fraction * U / T) if T > 0 else 0.0
    return PhaseState(s.q, s.p * scale)


@pytest.fixture(scope="session")
def helpers():
    """Random-state helpers (conftest is not importable under importlib mode)."""
    from types import SimpleNamespace

    return SimpleNamespace(random_shape=random_shape, random_bounded_state=random_bounded_state)


@pytest.fixture(name="record", scope="session")
def record_fixture():
    return record
