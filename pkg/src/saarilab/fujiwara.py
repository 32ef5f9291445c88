"""Fujiwara shape coordinates and the shape-level quantities built on them.

Planar vectors are handled as complex numbers here: multiplying by ``1j``
is the quarter-turn rotation and ``conj`` reflects the second component.

For a barycentric orbit with inertia ``I``, angular momentum ``C`` and
Fujiwara phase ``theta = C * int dt/I`` the shape coordinates are

    Q_k = exp(-i theta) q_k / sqrt(I),   P_k = m_k dQ_k/dtau = I m_k dQ_k/dt,

so that ``sum m_k |Q_k|^2 = 1`` and ``sum m_k conj(Q_k) dQ_k/dt = 0``.
Three-body quantities (``G``, ``rho``, ``kappa``, ``E``, ``Delta``) follow.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import MassSystem, _forces, _potential, diagnostics_arrays
from .errors import (
    CentralConfiguration,
    DegenerateShape,
    NegativeRhoSquared,
    PreconditionViolated,
    SundmanViolation,
    ZeroInertia,
)

#: cyclic triples (j, k, l), 0-based
CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))

#: rho at or below this counts as a central configuration
RHO_TOL = 1e-12


def to_complex(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[..., 0] + 1j * v[..., 1]


def to_planar(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1)


def cross(u, v):
    """Planar outer product ``u ^ v = Im(conj(u) v)``."""
    return np.imag(np.conj(u) * v)


def g_of(Q, sys: MassSystem, collision_ratio=None):
    """Gravitational forces at complex positions ``Q``."""
    return to_complex(_forces(to_planar(Q), sys, collision_ratio))


def U_of(Q, sys: MassSystem, collision_ratio=None):
    return _potential(to_planar(Q), sys, collision_ratio)


def normalize_shape(z, masses) -> np.ndarray:
    """Move complex positions to the barycentre and scale to ``I = 1``."""
    z = np.asarray(z, dtype=complex)
    m = np.asarray(masses, dtype=float)
    z = z - (m @ z) / m.sum()
    I = float(m @ np.abs(z) ** 2)
    if I <= 0:
        raise ZeroInertia("all bodies coincide")
    return z / np.sqrt(I)


@dataclass(frozen=True)
class FujiwaraFrame:
    """Shape coordinates of one sample plus the physical scalars they need.

    ``I``, ``dIdt``, ``C`` and ``H`` are the physical (unnormalised) values
    at the sample; they enter the equations of motion for ``P``.
    Properties that need a configurational measure use the frame's own
    ``mu = U(Q)``; the module-level functions accept an explicit ``mu``.
    """

    Q: np.ndarray
    P: np.ndarray
    system: MassSystem
    tau: float = 0.0
    t: float = 0.0
    I: float = 1.0
    dIdt: float = 0.0
    C: float = 0.0
    H: float = 0.0

    @classmethod
    def from_shape(cls, z, sys: MassSystem, P=None, **kw) -> "FujiwaraFrame":
        """Synthetic frame from any triangle ``z`` (normalised here)."""
        Q = normalize_shape(z, sys.masses)
        P = np.zeros_like(Q) if P is None else np.asarray(P, dtype=complex)
        return cls(Q, P, sys, **kw)

    def with_momenta(self, P) -> "FujiwaraFrame":
        return replace(self, P=np.asarray(P, dtype=complex))

    @cached_property
    def mu(self) -> float:
        return float(U_of(self.Q, self.system))

    @cached_property
    def r(self) -> np.ndarray:
        """Distances ``r_jk(Q)`` in ``system.pairs`` order."""
        return np.abs(self.Q[self.system._pk] - self.Q[self.system._pj])

    @property
    def Delta(self) -> float:
        """Twice the oriented area of the triangle ``Q1 Q2 Q3``."""
        Q = self.Q
        return float(cross(Q[0], Q[1]) + cross(Q[1], Q[2]) + cross(Q[2], Q[0]))

    @cached_property
    def G(self) -> np.ndarray:
        return G_of_Q(self, self.system, self.mu)

    @cached_property
    def rho(self) -> float:
        return float(np.sqrt(rho_of(self, self.system, self.mu).rho2_G))

    @property
    def kappa(self) -> float:
        """``sqrt(m1 m2 m3/M sum |P|^2/m)``; constant on constant-measure orbits."""
        m = self.system.masses
        return float(np.sqrt(np.prod(m) / m.sum() * shape_kinetic(self)))

    @property
    def E(self) -> np.ndarray:
        return E_of(self, self.system, self.mu)


def _frames_arrays(q, p, theta, sys: MassSystem):
    m = sys.masses
    z = to_complex(q)
    zdot = to_complex(p) / m
    I = np.einsum("k,...k->...", m, np.abs(z) ** 2)
    if np.any(I <= 0):
        raise ZeroInertia("sample with I <= 0")
    dIdt = 2.0 * np.sum(np.real(np.conj(z) * to_complex(p)), axis=-1)
    C = np.sum(cross(z, to_complex(p)), axis=-1)
    phase = np.exp(-1j * np.asarray(theta))[..., None]
    sqI = np.sqrt(I)[..., None]
    Q = phase * z / sqI
    dQdt = phase * (zdot - (dIdt / (2 * I))[..., None] * z - 1j * (C / I)[..., None] * z) / sqI
    P = I[..., None] * m * dQdt
    return Q, P, I, dIdt, C


def to_fujiwara(traj) -> list:
    """Fujiwara frames of every sample of a barycentric trajectory.

    ``dQ/dt`` comes from the exact velocity decomposition, not from
    differencing ``Q`` samples.

    Raises
    ------
    ZeroInertia
        If some sample has ``I <= 0``.
    """
    sys = traj.system
    Q, P, I, dIdt, C = _frames_arrays(traj.q, traj.p, traj.theta, sys)
    H = diagnostics_arrays(traj.q, traj.p, sys, collision_ratio=None).H
    return [
        FujiwaraFrame(Q[i], P[i], sys, float(traj.tau[i]), float(traj.t[i]), float(I[i]), float(dIdt[i]), float(C[i]), float(H[i]))
        for i in range(len(traj))
    ]


def shape_kinetic(frame: FujiwaraFrame) -> float:
    """``sum |P_k|^2 / m_k``, which equals ``B - C^2`` on constant-measure orbits."""
    return float(np.sum(np.abs(frame.P) ** 2 / frame.system.masses))


def kinetic_decomposition(frame: FujiwaraFrame):
    """Rotational, radial and shape parts of the physical kinetic energy.

    ``T = C^2/(2I) + (dI/dt)^2/(8I) + (I/2) sum m |dQ/dt|^2``.
    """
    I = frame.I
    return (frame.C**2 / (2 * I), frame.dIdt**2 / (8 * I), shape_kinetic(frame) / (2 * I))


def G_of_Q(frame: FujiwaraFrame, sys: MassSystem, mu: float) -> np.ndarray:
    """``G_k = g_k(Q) + a mu m_k Q_k``; zero exactly at central configurations."""
    return g_of(frame.Q, sys) + sys.a * mu * sys.masses * frame.Q


def E_of(frame: FujiwaraFrame, sys: MassSystem, mu: float) -> np.ndarray:
    """``E_l = m_j m_k (1/r_jk^(a+2) - a mu / M)`` indexed by the opposite body ``l``."""
    m = sys.masses
    Q = frame.Q
    a = sys.a
    out = np.empty(3)
    for j, k, l in CYCLIC:
        out[l] = m[j] * m[k] * (abs(Q[j] - Q[k]) ** (-(a + 2)) - a * mu / m.sum())
    return out


class RhoRoutes(NamedTuple):
    rho2_G: float
    rho2_E: float

    @property
    def rho(self) -> float:
        return float(np.sqrt(max(self.rho2_G, 0.0)))


def rho_of(frame: FujiwaraFrame, sys: MassSystem, mu: float) -> RhoRoutes:
    """``rho^2`` from ``sum |G|^2/m`` and from ``-(E1 E2 + E2 E3 + E3 E1)``.

    The routes agree when ``mu`` is the frame's own measure ``U(Q)``.

    Raises
    ------
    NegativeRhoSquared
        If the E-route is negative beyond round-off.
    """
    m = sys.masses
    G = G_of_Q(frame, sys, mu)
    rho2_G = float(np.prod(m) / m.sum() * np.sum(np.abs(G) ** 2 / m))
    E = E_of(frame, sys, mu)
    prods = np.array([E[0] * E[1], E[1] * E[2], E[2] * E[0]])
    rho2_E = float(-prods.sum())
    if rho2_E < -1e-12 * max(1.0, float(np.abs(prods).sum())):
        raise NegativeRhoSquared(f"rho^2 from E is {rho2_E:.3e}; mu is inconsistent with the shape")
    return RhoRoutes(rho2_G, rho2_E)


def kappa_of(B: float, C: float, sys: MassSystem) -> float:
    """``kappa = sqrt(m1 m2 m3 (B - C^2) / M)``.

    Raises
    ------
    SundmanViolation
        If ``B < C^2 - 1e-9``.
    """
    gap = B - C * C
    if gap < -1e-9:
        raise SundmanViolation(f"B - C^2 = {gap:.3e} < 0")
    m = sys.masses
    return float(np.sqrt(np.prod(m) * max(gap, 0.0) / m.sum()))


def similarity_factor(xi, eta, tol=1e-10) -> complex:
    """Complex ``zeta`` with ``eta_l = zeta (conj(xi_j) - conj(xi_k))`` for cyclic ``(j, k, l)``.

    Requires ``sum conj(xi) eta = 0`` and ``sum eta = 0`` (checked against
    ``tol`` relative to the input magnitudes).  The ratio is taken on the
    pair with the largest ``|xi_j - xi_k|``.

    Raises
    ------
    PreconditionViolated
        If the orthogonality or zero-sum conditions fail.
    DegenerateShape
        If all pair differences of ``xi`` vanish.
    """
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    scale = max(float(np.max(np.abs(xi)) * np.max(np.abs(eta))), np.finfo(float).tiny)
    s = np.sum(np.conj(xi) * eta)
    if abs(s.real) > tol * scale or abs(s.imag) > tol * scale:
        raise PreconditionViolated(f"sum conj(xi) eta = {s:.3e} is not zero")
    if abs(np.sum(eta)) > tol * max(float(np.max(np.abs(eta))), np.finfo(float).tiny):
        raise PreconditionViolated("sum eta is not zero")
    diffs = [np.conj(xi[j]) - np.conj(xi[k]) for j, k, _ in CYCLIC]
    best = int(np.argmax(np.abs(diffs)))
    if abs(diffs[best]) == 0.0:
        raise DegenerateShape("all pair differences vanish")
    return complex(eta[CYCLIC[best][2]] / diffs[best])


def similarity_residual(xi, eta, zeta) -> float:
    """``max_l |eta_l - zeta (conj(xi_j) - conj(xi_k))|``."""
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    return float(max(abs(eta[l] - zeta * (np.conj(xi[j]) - np.conj(xi[k]))) for j, k, l in CYCLIC))


def candidate_momenta(frame: FujiwaraFrame, sys: MassSystem, mu: float, kappa: float, epsilon: int) -> np.ndarray:
    """Momenta ``P_k = i epsilon (kappa/rho) G_k`` of a non-homographic candidate.

    These are the only momenta of magnitude ``kappa`` that keep ``U(Q)``
    stationary in ``tau``.

    Raises
    ------
    CentralConfiguration
        If ``rho <= 1e-12`` (the candidate is undefined there).
    """
    if epsilon not in (1, -1):
        raise ValueError(f"epsilon must be +1 or -1, got {epsilon}")
    G = G_of_Q(frame, sys, mu)
    rho = rho_of(frame, sys, mu).rho
    if rho <= RHO_TOL:
        raise CentralConfiguration(f"rho = {rho:.3e}: candidate undefined at a central configuration")
    return 1j * epsilon * (kappa / rho) * G


class DrDtau(NamedTuple):
    """``dr_jk/dtau`` in ``system.pairs`` order from both formulas."""

    general: np.ndarray
    candidate: Optional[np.ndarray]


def _third(j, k):
    return 3 - j - k


def dr_dtau(frame: FujiwaraFrame, sys: MassSystem, *, kappa=None, epsilon=None, mu=None) -> DrDtau:
    """Rates of change of the mutual distances in fictitious time.

    The general route, ``dr_jk/dtau = -M (Q_l . P_l) / (m_j m_k r_jk)``,
    holds for any momenta on the ``I(Q) = 1`` barycentric sphere.  When
    ``kappa`` and ``epsilon`` are given the candidate route,

        m_j m_k r_jk dr_jk/dtau = m1 m2 m3 (eps kappa Delta / rho)
                                  (1/r_lj^(a+2) - 1/r_kl^(a+2)),

    is evaluated too (valid only for momenta from ``candidate_momenta``).
    """
    m = sys.masses
    M = m.sum()
    Q, P = frame.Q, frame.P
    general = np.empty(len(sys.pairs))
    for idx, (j, k) in enumerate(sys.pairs):
        l = _third(j, k)
        general[idx] = -M * np.real(np.conj(Q[l]) * P[l]) / (m[j] * m[k] * abs(Q[j] - Q[k]))
    candidate = None
    if kappa is not None and epsilon is not None:
        mu = frame.mu if mu is None else mu
        rho = rho_of(frame, sys, mu).rho
        if rho <= RHO_TOL:
            raise CentralConfiguration(f"rho = {rho:.3e}")
        a = sys.a
        pref = np.prod(m) * epsilon * kappa * frame.Delta / rho
        candidate = np.empty(len(sys.pairs))
        for idx, pair in enumerate(sys.pairs):
            j, k, l = next(c for c in CYCLIC if set(c[:2]) == set(pair))
            r_lj = abs(Q[l] - Q[j])
            r_kl = abs(Q[k] - Q[l])
            candidate[idx] = pref * (r_lj ** (-(a + 2)) - r_kl ** (-(a + 2))) / (m[j] * m[k] * abs(Q[j] - Q[k]))
    return DrDtau(general, candidate)


def torque_identity(frame: FujiwaraFrame, sys: MassSystem, mu=None):
    """Both sides of ``Q_l ^ G_l = (m1 m2 m3 Delta / M)(1/r_lj^(a+2) - 1/r_kl^(a+2))``.

    Returns ``(lhs, rhs)`` arrays indexed by ``l``.
    """
    mu = frame.mu if mu is None else mu
    m = sys.masses
    a = sys.a
    Q = frame.Q
    G = G_of_Q(frame, sys, mu)
    lhs = np.empty(3)
    rhs = np.empty(3)
    for j, k, l in CYCLIC:
        lhs[l] = cross(Q[l], G[l])
        rhs[l] = np.prod(m) * frame.Delta / m.sum() * (abs(Q[l] - Q[j]) ** (-(a + 2)) - abs(Q[k] - Q[l]) ** (-(a + 2)))
    return lhs, rhs


def shape_force(frame: FujiwaraFrame) -> np.ndarray:
    """``dP/dtau`` on an arbitrary orbit.

    ``dP/dtau = -2iC P + I^((2-a)/2) g(Q) - (I I''/2 - I'^2/4 - C^2) m Q``
    with ``I'' = 4H + 2(2-a) U(q)`` from the Lagrange-Jacobi identity.
    """
    sys = frame.system
    a = sys.a
    I, C = frame.I, frame.C
    U_phys = frame.mu * I ** (-a / 2)
    Iddot = 4 * frame.H + 2 * (2 - a) * U_phys
    coeff = I * Iddot / 2 - frame.dIdt**2 / 4 - C**2
    return -2j * C * frame.P + I ** ((2 - a) / 2) * g_of(frame.Q, sys) - coeff * sys.masses * frame.Q


def shape_force_constant_measure(frame: FujiwaraFrame, B: float, C: float, mu: float) -> np.ndarray:
    """``dP/dtau = -2iC P + I^((2-a)/2) G(Q) - (B - C^2) m Q`` for constant ``mu``."""
    sys = frame.system
    a = sys.a
    G = G_of_Q(frame, sys, mu)
    return -2j * C * frame.P + frame.I ** ((2 - a) / 2) * G - (B - C * C) * sys.masses * frame.Q


def saari_relation_residual(traj, n_points: int = 2001):
    """Residual of ``d/dt(I^2 sum m|dQ/dt|^2) = 2 I^(1-a/2) dmu/dt``.

    Both derivatives are second-order central differences on ``n_points``
    uniform samples of the dense output.  Returns ``(t, residual)`` with the
    residual normalised by ``max(1, |2 I^(1-a/2) dmu/dt|)``.
    """
    sys = traj.system
    t = np.linspace(traj.t[0], traj.t[-1], n_points)
    res = traj.resample(t)
    Q, P, I, _, _ = _frames_arrays(res.q, res.p, res.theta, sys)
    S = np.sum(np.abs(P) ** 2 / sys.masses, axis=-1)
    d = diagnostics_arrays(res.q, res.p, sys, collision_ratio=None)
    dS = np.gradient(S, t, edge_order=2)
    dmu = np.gradient(d.mu, t, edge_order=2)
    rhs = 2 * I ** (1 - sys.a / 2) * dmu
    return t, (dS - rhs) / np.maximum(1.0, np.abs(rhs))
