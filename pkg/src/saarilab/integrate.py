"""Time integration with fictitious time and Fujiwara phase quadratures.

The integrated system is

    dq_k/dt = p_k / m_k,  dp_k/dt = g_k(q),  dtau/dt = 1/I,  dtheta/dt = C/I,

stepped by an adaptive embedded Runge-Kutta pair (scipy's DOP853 by
default).  The module also carries the first-integral machinery in the
moment of inertia,

    (1/2) (dI/dt)^2 + Phi(I) = -2B,   Phi(I) = -4 H I - 4 mu I^((2-a)/2),

valid on orbits of constant configurational measure ``mu``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._roots import bisect_newton, sign_change_brackets
from .dynamics import (
    COLLISION_RATIO,
    MassSystem,
    PhaseState,
    ScalarDiagnostics,
    _forces_single,
    diagnostics_arrays,
    inertia,
    inertia_pairwise,
    pair_distances,
)
from .errors import DegenerateExponent, NoRoot, PreconditionViolated, ToleranceFailure


class Termination(str, enum.Enum):
    TIME_LIMIT = "TimeLimit"
    COLLISION = "Collision"
    ESCAPE = "Escape"
    TOLERANCE_FAILURE = "ToleranceFailure"


class OrbitCategory(str, enum.Enum):
    TOTAL_COLLISION = "A_TotalCollision"
    UNBOUNDED = "B_Unbounded"
    OSCILLATORY = "C_Oscillatory"


@dataclass
class Controls:
    """Integrator settings.

    ``n_samples`` switches the output from the solver's own steps to a
    uniform grid of that many points.  ``total_collision_ratio`` ends the run
    as a collision once ``I`` drops below that fraction of ``I(0)``; a
    homothetic collapse never trips the relative pair threshold because all
    distances shrink together.
    """

    t_end: float = 10.0
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_step: float = np.inf
    n_samples: Optional[int] = None
    method: str = "DOP853"
    collision_ratio: float = COLLISION_RATIO
    total_collision_ratio: float = 1e-10
    escape_ratio: float = 1e6


@dataclass(frozen=True)
class AugmentedState:
    phase: PhaseState
    tau: float
    theta: float


@dataclass
class Trajectory:
    """Samples of an integrated orbit, stored as stacked arrays.

    Attributes
    ----------
    t, tau, theta : ndarray, shape (N,)
    q, p : ndarray, shape (N, n, 2)
    termination : Termination
    dense : callable or None
        Dense-output interpolant ``t -> y`` of the augmented state vector.
    """

    system: MassSystem
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    tau: np.ndarray
    theta: np.ndarray
    termination: Termination = Termination.TIME_LIMIT
    dense: Optional[Callable] = None

    def __len__(self):
        return self.t.size

    @property
    def samples(self) -> list:
        return [self.sample(i) for i in range(len(self))]

    def sample(self, i) -> AugmentedState:
        return AugmentedState(PhaseState(self.q[i], self.p[i], self.t[i]), self.tau[i], self.theta[i])

    def diagnostics(self) -> ScalarDiagnostics:
        """Per-sample scalar diagnostics as arrays."""
        return diagnostics_arrays(self.q, self.p, self.system, collision_ratio=None)

    def resample(self, t) -> "Trajectory":
        """Evaluate the dense output at times ``t`` (within the integrated span)."""
        if self.dense is None:
            raise ValueError("trajectory has no dense output")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        y = self.dense(t)
        q, p, tau, theta = _unpack(y.T, self.system.n)
        return Trajectory(self.system, t, q, p, tau, theta, self.termination, self.dense)


def _unpack(y, n):
    """Split stacked augmented vectors ``(..., 4n+2)``."""
    q = y[..., : 2 * n].reshape(y.shape[:-1] + (n, 2))
    p = y[..., 2 * n : 4 * n].reshape(y.shape[:-1] + (n, 2))
    return q, p, y[..., 4 * n], y[..., 4 * n + 1]


def _rhs_factory(sys: MassSystem, force_law):
    n = sys.n
    inv_m = (1.0 / sys.masses)[:, None]
    m = sys.masses

    def rhs(t, y):
        q = y[: 2 * n].reshape(n, 2)
        p = y[2 * n : 4 * n].reshape(n, 2)
        qx, qy = q[:, 0], q[:, 1]
        I = float(m @ (qx * qx + qy * qy))
        C = float(qx @ p[:, 1] - qy @ p[:, 0])
        out = np.empty_like(y)
        out[: 2 * n] = (p * inv_m).ravel()
        out[2 * n : 4 * n] = force_law(q, sys).ravel()
        out[4 * n] = 1.0 / I
        out[4 * n + 1] = C / I
        return out

    return rhs


def integrate(initial: PhaseState, sys: MassSystem, controls: Controls | None = None, *, force_law=None, **kw) -> Trajectory:
    """Integrate the augmented equations of motion from ``initial``.

    ``controls`` may be omitted and individual fields given as keywords,
    e.g. ``integrate(s0, sys, t_end=5.0)``.  ``t_end`` earlier than the
    initial time integrates backwards.  ``force_law(q, sys)`` replaces the
    gravitational forces (test harnesses use it to switch forces off).

    The run stops early with ``Collision`` (some ``r_jk < 1e-8 sqrt(I)`` or
    ``I`` collapsed below ``total_collision_ratio * I(0)``) or ``Escape``
    (``I > escape_ratio * I(0)``); both are normal outcomes.

    Raises
    ------
    ToleranceFailure
        When the step size underflows; the partial trajectory is attached.
    """
    if controls is None:
        controls = Controls(**kw)
    elif kw:
        controls = replace(controls, **kw)
    n = sys.n
    q0, p0 = initial.q, initial.p
    r0 = pair_distances(q0, sys)
    if np.any(r0 < controls.collision_ratio * math.sqrt(inertia_pairwise(q0, sys))):
        raise PreconditionViolated("initial state is inside the collision threshold")
    I0 = float(inertia(q0, sys))
    if force_law is None:
        force_law = _forces_single
    rhs = _rhs_factory(sys, force_law)
    y0 = np.concatenate([q0.ravel(), p0.ravel(), [0.0, 0.0]])

    def binary(t, y):
        q = y[: 2 * n].reshape(n, 2)
        return float(np.min(pair_distances(q, sys)) - controls.collision_ratio * math.sqrt(inertia_pairwise(q, sys)))

    def total(t, y):
        q = y[: 2 * n].reshape(n, 2)
        return float(inertia(q, sys) - controls.total_collision_ratio * I0)

    def escape(t, y):
        q = y[: 2 * n].reshape(n, 2)
        return float(inertia(q, sys) - controls.escape_ratio * I0)

    events = [binary, total, escape]
    for ev in events:
        ev.terminal = True
        ev.direction = 0

    t0, t1 = initial.t, float(controls.t_end)
    t_eval = None
    if controls.n_samples:
        t_eval = np.linspace(t0, t1, int(controls.n_samples))
    sol = solve_ivp(
        rhs,
        (t0, t1),
        y0,
        method=controls.method,
        rtol=controls.rel_tol,
        atol=controls.abs_tol,
        max_step=controls.max_step,
        dense_output=True,
        events=events,
        t_eval=t_eval,
    )
    t = sol.t
    Y = sol.y.T
    termination = Termination.TIME_LIMIT
    if sol.status == 1:
        hit = [i for i, te in enumerate(sol.t_events) if te.size]
        termination = Termination.ESCAPE if hit and hit[0] == 2 else Termination.COLLISION
        te = sol.t_events[hit[0]][0]
        if t.size == 0 or t[-1] != te:
            t = np.append(t, te)
            Y = np.vstack([Y, sol.y_events[hit[0]][0]])
    q, p, tau, theta = _unpack(Y, n)
    traj = Trajectory(sys, t, q, p, tau, theta, termination, sol.sol)
    if sol.status == -1:
        traj.termination = Termination.TOLERANCE_FAILURE
        raise ToleranceFailure(sol.message, traj)
    return traj


# --- first integral in I ---------------------------------------------------


def phi_of_I(I, H, mu, a):
    """``Phi(I) = -4 H I - 4 mu I^((2-a)/2)``; vectorised over ``I``.

    Raises
    ------
    DegenerateExponent
        For ``a == 2``.
    """
    if a == 2:
        raise DegenerateExponent("Phi(I) is undefined for a = 2")
    I = np.asarray(I, dtype=float)
    out = -4.0 * H * I - 4.0 * mu * I ** ((2.0 - a) / 2.0)
    return float(out) if out.ndim == 0 else out


def dphi_dI(I, H, mu, a):
    return -4.0 * H - 2.0 * (2.0 - a) * mu * I ** (-a / 2.0)


@dataclass(frozen=True)
class PhiProfile:
    """Inputs of the effective potential ``Phi`` plus its turning points."""

    H: float
    mu: float
    a: float
    B: float
    I_min: Optional[float] = None
    I_max: Optional[float] = None

    @classmethod
    def from_diagnostics(cls, diag: ScalarDiagnostics, a: float) -> "PhiProfile":
        return cls(float(np.mean(diag.H)), float(np.mean(diag.mu)), a, float(np.mean(diag.B)))

    def stationary_point(self) -> Optional[float]:
        """``I`` where ``dPhi/dI = 0``, if it exists."""
        a, H, mu = self.a, self.H, self.mu
        if H == 0 or mu <= 0:
            return None
        ratio = (2.0 - a) * mu / (-2.0 * H)
        if ratio <= 0:
            return None
        return ratio ** (2.0 / a)

    def reference_scale(self) -> float:
        a, H, mu, B = self.a, self.H, self.mu, self.B
        if H != 0 and mu > 0:
            return (mu / abs(H)) ** (2.0 / a)
        if B > 0 and mu > 0:
            return (B / (2.0 * mu)) ** (2.0 / (2.0 - a))
        if B > 0 and H != 0:
            return B / abs(H)
        return 1.0


def turning_points(profile: PhiProfile, *, span=1e12, points=2401) -> PhiProfile:
    """Solve ``Phi(I) = -2B`` and return the profile with ``I_min``/``I_max`` set.

    A geometric scan over ``[1/span, span] * I_ref`` brackets the roots,
    then each is refined by bisection and Newton.  A tangential double root
    at the stationary point of ``Phi`` (the circular relative equilibrium)
    is detected directly since it has no sign change.

    Raises
    ------
    NoRoot
        If ``Phi + 2B`` has no root in the scanned range.
    """
    a, H, mu, B = profile.a, profile.H, profile.mu, profile.B
    if a == 2:
        raise DegenerateExponent("turning points need a != 2")
    if B < 0:
        raise PreconditionViolated(f"B must be non-negative, got {B}")

    def F(I):
        return phi_of_I(I, H, mu, a) + 2.0 * B

    def dF(I):
        return dphi_dI(I, H, mu, a)

    scale = max(2.0 * B, 1.0)
    I_ref = profile.reference_scale()
    grid = np.geomspace(I_ref / span, I_ref * span, points)
    I_star = profile.stationary_point()
    if I_star is not None:
        if abs(F(I_star)) <= 1e-12 * scale:
            return replace(profile, I_min=I_star, I_max=I_star)
        grid = np.sort(np.append(grid, I_star))

    roots = [bisect_newton(F, lo, hi, dF) for lo, hi in sign_change_brackets(F, grid)]
    if I_star is not None and B > 0 and len(roots) < 2:
        # F is monotone on each side of I_star; widen past the scan if a root lies outside it
        s = math.copysign(1.0, F(I_star))
        lo, hi = grid[0], grid[-1]
        while s * F(lo) > 0 and lo > 1e-300:
            lo *= 1e-12
        while s * F(hi) > 0 and hi < 1e300:
            hi *= 1e12
        if s * F(lo) < 0 and not any(r < I_star for r in roots):
            roots.insert(0, bisect_newton(F, lo, I_star, dF))
        if s * F(hi) < 0 and not any(r > I_star for r in roots):
            roots.append(bisect_newton(F, I_star, hi, dF))
    if B == 0 and a < 2:
        roots = [0.0] + [r for r in roots if r > grid[0] * 10]
    if not roots:
        raise NoRoot("Phi(I) = -2B has no root in the scanned range")
    if a < 2 and H >= 0:
        return replace(profile, I_min=roots[0], I_max=None)
    if len(roots) >= 2:
        return replace(profile, I_min=roots[0], I_max=roots[-1])
    return replace(profile, I_min=roots[0], I_max=None)


def categorize_orbit(diag: ScalarDiagnostics, sys: MassSystem) -> OrbitCategory:
    """Constant-measure orbit category from the signs of ``B`` and ``H``.

    ``B`` counts as zero when ``B <= 1e-9 max(1, 2 I T)``.
    """
    if sys.a >= 2:
        raise DegenerateExponent("orbit categories are derived for 0 < a < 2")
    B = float(np.mean(diag.B))
    H = float(np.mean(diag.H))
    scale = max(1.0, float(np.max(2.0 * np.asarray(diag.I) * np.asarray(diag.T))))
    if B <= 1e-9 * scale:
        return OrbitCategory.TOTAL_COLLISION
    return OrbitCategory.UNBOUNDED if H >= 0 else OrbitCategory.OSCILLATORY
