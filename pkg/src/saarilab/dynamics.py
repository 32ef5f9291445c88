"""Planar n-body model with a homogeneous potential.

The potential is ``U = (1/a) sum_{j<k} m_j m_k / r_jk**a`` and the forces are
``g_k = sum_{j != k} m_j m_k (q_j - q_k) / r_jk**(a+2)``.  Positions and
momenta are stored as ``(n, 2)`` float arrays; the array helpers in this
module also accept arbitrary leading batch axes, ``(..., n, 2)``, so the same
code evaluates a single state or a whole trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CollisionSingularity

#: r_jk below this multiple of sqrt(I) counts as a collision.
COLLISION_RATIO = 1e-8


@dataclass(frozen=True)
class MassSystem:
    """Masses and potential exponent of an n-body problem (n >= 3).

    Parameters
    ----------
    masses : sequence of float
        Positive point masses.
    a : float
        Exponent of the homogeneous potential, ``a > 0``.  ``a = 1`` is the
        Newtonian case.
    """

    masses: np.ndarray
    a: float = 1.0
    pairs: tuple = field(init=False, repr=False, compare=False)
    _pj: np.ndarray = field(init=False, repr=False, compare=False)
    _pk: np.ndarray = field(init=False, repr=False, compare=False)
    _mm: np.ndarray = field(init=False, repr=False, compare=False)
    _mass_matrix: np.ndarray = field(init=False, repr=False, compare=False)
    _incidence: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if m.size < 3:
            raise ValueError(f"masses: need at least 3 bodies, got {m.size}")
        if not np.all(np.isfinite(m)) or np.any(m <= 0):
            raise ValueError(f"masses: every mass must be positive, got {m.tolist()}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise ValueError(f"a: exponent must be positive, got {self.a}")
        m.flags.writeable = False
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "a", float(self.a))
        pairs = tuple(combinations(range(m.size), 2))
        object.__setattr__(self, "pairs", pairs)
        pj, pk = (np.array(ix) for ix in zip(*pairs))
        object.__setattr__(self, "_pj", pj)
        object.__setattr__(self, "_pk", pk)
        object.__setattr__(self, "_mm", m[pj] * m[pk])
        mmat = np.outer(m, m)
        np.fill_diagonal(mmat, 0.0)
        object.__setattr__(self, "_mass_matrix", mmat)
        # body j gains +w d_jk from each pair, body k loses it
        inc = np.zeros((m.size, len(pairs)))
        inc[pj, np.arange(len(pairs))] = 1.0
        inc[pk, np.arange(len(pairs))] = -1.0
        object.__setattr__(self, "_incidence", inc)

    @property
    def n(self) -> int:
        return self.masses.size

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def degenerate_exponent(self) -> bool:
        """True for ``a == 2``, where the first integral in I does not exist."""
        return self.a == 2.0

    def pair_masses(self) -> np.ndarray:
        """``m_j m_k`` for every unordered pair, in ``pairs`` order."""
        return self._mm


@dataclass(frozen=True)
class PhaseState:
    """Planar positions ``q`` and momenta ``p`` (both ``(n, 2)``) at time ``t``."""

    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        p = np.array(self.p, dtype=float)
        if q.ndim != 2 or q.shape[1] != 2:
            raise ValueError(f"q: expected shape (n, 2), got {q.shape}")
        if p.shape != q.shape:
            raise ValueError(f"p: expected shape {q.shape}, got {p.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class ScalarDiagnostics:
    """Scalar invariants of a state.

    Fields may be floats (one state) or arrays (a batch of states).

    ``B`` is the per-sample value of ``2 I T - (sum q.p)**2``, which is the
    constant of the first integral on constant-measure orbits.
    ``sundman_gap`` is ``B - C**2`` evaluated without cancellation.
    """

    U: float
    T: float
    H: float
    I: float
    dIdt: float
    C: float
    mu: float
    B: float
    sundman_gap: float


def _positions(state):
    return state.q if isinstance(state, PhaseState) else np.asarray(state, dtype=float)


def pair_differences(q, sys: MassSystem):
    """Return ``q_k - q_j`` for each pair ``(j, k)`` as ``(..., npairs, 2)``."""
    return q[..., sys._pk, :] - q[..., sys._pj, :]


def pair_distances(q, sys: MassSystem):
    return np.linalg.norm(pair_differences(q, sys), axis=-1)


def inertia(q, sys: MassSystem):
    """Moment of inertia ``sum m_k |q_k|^2`` (assumes barycentric gauge)."""
    return np.einsum("k,...kd,...kd->...", sys.masses, q, q)


def inertia_pairwise(q, sys: MassSystem):
    """Translation-invariant form ``M^-1 sum_{j<k} m_j m_k r_jk^2``."""
    r2 = np.sum(pair_differences(q, sys) ** 2, axis=-1)
    return r2 @ sys.pair_masses() / sys.total_mass


def _check_collision(r, q, sys, ratio):
    if ratio is None:
        return
    scale = np.sqrt(inertia_pairwise(q, sys))
    bad = r < ratio * scale[..., None]
    if np.any(bad):
        raise CollisionSingularity(
            f"mutual distance {np.min(r):.3e} below collision threshold "
            f"{ratio:g}*sqrt(I)"
        )


def _potential(q, sys, collision_ratio=COLLISION_RATIO):
    r = pair_distances(q, sys)
    _check_collision(r, q, sys, collision_ratio)
    a = sys.a
    return (r ** (-a)) @ sys.pair_masses() / a


def _forces(q, sys, collision_ratio=COLLISION_RATIO):
    if collision_ratio is not None:
        _check_collision(pair_distances(q, sys), q, sys, collision_ratio)
    d = q[..., None, :, :] - q[..., :, None, :]  # [k, j] = q_j - q_k
    r2 = np.einsum("...d,...d->...", d, d)
    n = sys.n
    r2[..., range(n), range(n)] = 1.0
    w = sys._mass_matrix * r2 ** (-(sys.a + 2.0) / 2.0)
    return np.einsum("...kj,...kjd->...kd", w, d)


def _forces_single(q, sys):
    """``_forces`` for one unbatched state without collision checks (integrator hot path)."""
    d = q[sys._pk] - q[sys._pj]
    r2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
    w = sys._mm * r2 ** (-(sys.a + 2.0) / 2.0)
    return sys._incidence @ (w[:, None] * d)


def reduce_to_barycenter(state: PhaseState, sys: MassSystem) -> PhaseState:
    """Shift to the centre-of-mass frame.

    Positions lose their mass-weighted mean and momenta lose the total
    momentum share ``m_k P / M`` (a Galilean boost), so every mutual
    distance and relative velocity is unchanged.
    """
    m = sys.masses
    M = sys.total_mass
    com = m @ state.q / M
    ptot = state.p.sum(axis=0)
    return PhaseState(state.q - com, state.p - np.outer(m, ptot) / M, state.t)


def potential_energy(state, sys: MassSystem) -> float:
    """``U = (1/a) sum_{j<k} m_j m_k / r_jk**a``.

    Raises
    ------
    CollisionSingularity
        If some ``r_jk < 1e-8 sqrt(I)``.
    """
    return float(_potential(_positions(state), sys))


def forces(state, sys: MassSystem) -> np.ndarray:
    """Forces ``g_k = dp_k/dt`` as an ``(n, 2)`` array (they sum to zero)."""
    return _forces(_positions(state), sys)


def configurational_measure(q, sys: MassSystem, collision_ratio=COLLISION_RATIO):
    """``mu = U I^(a/2)``, invariant under translation, rotation and scaling."""
    q = _positions(q)
    return _potential(q, sys, collision_ratio) * inertia_pairwise(q, sys) ** (sys.a / 2)


def _b_and_gap(q, p, m):
    # Lagrange identities for u = sqrt(m) q and v = p / sqrt(m):
    #   2IT - (u.v)^2       = sum_{a<b} (u_a v_b - u_b v_a)^2  over the 2n real components
    #   2IT - |sum u^* v|^2 = sum_{j<k} |u_j v_k - u_k v_j|^2   over the n complex components
    sm = np.sqrt(m)[:, None]
    u = q * sm
    v = p / sm
    flat_u = u.reshape(u.shape[:-2] + (-1,))
    flat_v = v.reshape(v.shape[:-2] + (-1,))
    outer = flat_u[..., :, None] * flat_v[..., None, :]
    B = 0.5 * np.sum((outer - np.swapaxes(outer, -1, -2)) ** 2, axis=(-1, -2))
    zu = u[..., 0] + 1j * u[..., 1]
    zv = v[..., 0] + 1j * v[..., 1]
    couter = zu[..., :, None] * zv[..., None, :]
    gap = 0.5 * np.sum(np.abs(couter - np.swapaxes(couter, -1, -2)) ** 2, axis=(-1, -2))
    return B, gap


def diagnostics_arrays(q, p, sys: MassSystem, collision_ratio=COLLISION_RATIO):
    """Batch version of :func:`scalar_diagnostics` on raw arrays."""
    m = sys.masses
    U = _potential(q, sys, collision_ratio)
    T = 0.5 * np.einsum("k,...kd->...", 1.0 / m, p**2)
    I = inertia(q, sys)
    qp = np.sum(q * p, axis=(-1, -2))
    C = np.sum(q[..., 0] * p[..., 1] - q[..., 1] * p[..., 0], axis=-1)
    B, gap = _b_and_gap(q, p, m)
    mu = U * I ** (sys.a / 2)
    return ScalarDiagnostics(U=U, T=T, H=T - U, I=I, dIdt=2 * qp, C=C, mu=mu, B=B, sundman_gap=gap)


def scalar_diagnostics(state: PhaseState, sys: MassSystem) -> ScalarDiagnostics:
    """Energy, inertia, angular momentum, measure and B of a barycentric state.

    Examples
    --------
    >>> sys = MassSystem([1, 1, 1], a=1)
    >>> s = PhaseState([[-1, 0], [1, 0], [0, 0]], np.zeros((3, 2)))
    >>> d = scalar_diagnostics(s, sys)
    >>> float(d.I), float(d.U)
    (2.0, 2.5)
    """
    d = diagnostics_arrays(state.q, state.p, sys)
    return ScalarDiagnostics(**{k: float(v) for k, v in vars(d).items()})


def mutual_distance_bounds(mu: float, I: float, sys: MassSystem) -> dict:
    """Bounds on ``r_jk**2`` implied by constant measure ``mu`` and inertia ``I``.

    Returns a mapping ``(j, k) -> (lower, upper)`` with 0-based body indices,
    ``lower = (m_j m_k / (a mu))**(2/a) I`` and ``upper = M I / (m_j m_k)``.
    """
    a = sys.a
    M = sys.total_mass
    out = {}
    for (j, k), mm in zip(sys.pairs, sys.pair_masses()):
        out[(j, k)] = ((mm / (a * mu)) ** (2.0 / a) * I, M * I / mm)
    return out
