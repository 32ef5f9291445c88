"""Audit engine for constant-measure three-body orbits.

Contains the two shape functions ``f1`` and ``f2`` of the candidate
condition, the condition residual itself, series and limit checks along
the equal-mass critical path and near the equilateral configuration, the
``dr/dtau = 0`` event finder, the per-orbit audit and the escape-asymptotics
check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from ._roots import bisect_newton, sign_change_brackets
from .central_config import ShapeChart, ShapeClass, classify_shape
from .dynamics import MassSystem, _forces
from .errors import (
    CentralConfiguration,
    DegenerateExponent,
    InsufficientPoints,
    NoRoot,
    NotAsymptotic,
    PreconditionViolated,
)
from .fujiwara import (
    CYCLIC,
    RHO_TOL,
    FujiwaraFrame,
    _frames_arrays,
    dr_dtau,
    rho_of,
    to_fujiwara,
    to_planar,
)
from .integrate import categorize_orbit

MU_DRIFT_TOL = 1e-6
GAP_TOL = 1e-8
SCORE_TOL = 1e-6


# --- shape functions ---------------------------------------------------------


def _cyclic_distances(Q):
    """``r_jk``, ``r_kl``, ``r_lj`` for each cyclic triple, stacked on the last axis."""
    Q = np.asarray(Q)
    r = {}
    for j, k, _ in CYCLIC:
        r[(j, k)] = r[(k, j)] = np.abs(Q[..., j] - Q[..., k])
    return r


def _delta(Q):
    c = lambda u, v: np.imag(np.conj(u) * v)  # noqa: E731
    return c(Q[..., 0], Q[..., 1]) + c(Q[..., 1], Q[..., 2]) + c(Q[..., 2], Q[..., 0])


def f1_core(Q, masses, a):
    """Vectorised ``f1`` for complex shapes ``Q`` of shape ``(..., 3)``."""
    m = np.asarray(masses, dtype=float)
    r = _cyclic_distances(Q)
    total = 0.0
    for j, k, l in CYCLIC:
        diff = r[(k, l)] ** (-(a + 2)) - r[(l, j)] ** (-(a + 2))
        total = total + m[l] / r[(j, k)] ** (a + 4) * diff**2
    return (a + 2) * np.prod(m) * _delta(Q) ** 2 * total


def f2_core(Q, masses, a, mu):
    m = np.asarray(masses, dtype=float)
    r = _cyclic_distances(Q)
    s = sum((m[j] + m[k]) * r[(j, k)] ** (-(a + 2)) for j, k, _ in CYCLIC)
    return m.sum() / np.prod(m) * (2 * a * mu - s)


def rho2_core(Q, masses, a, mu):
    """``rho^2 = (m1 m2 m3 / M) sum |G|^2 / m``, vectorised."""
    m = np.asarray(masses, dtype=float)
    sys = MassSystem(m, a)
    g = _forces(to_planar(Q), sys, collision_ratio=None)
    G = g[..., 0] + 1j * g[..., 1] + a * np.asarray(mu)[..., None] * m * Q
    return np.prod(m) / m.sum() * np.sum(np.abs(G) ** 2 / m, axis=-1)


def U_core(Q, masses, a):
    m = np.asarray(masses, dtype=float)
    r = _cyclic_distances(Q)
    return sum(m[j] * m[k] * r[(j, k)] ** (-a) for j, k, _ in CYCLIC) / a


def f1_of(frame: FujiwaraFrame, sys: MassSystem) -> float:
    """``f1 = (a+2) m1 m2 m3 Delta^2 sum m_l / r_jk^(a+4) (1/r_kl^(a+2) - 1/r_lj^(a+2))^2``."""
    return float(f1_core(frame.Q, sys.masses, sys.a))


def f2_of(frame: FujiwaraFrame, sys: MassSystem, mu: float) -> float:
    """``f2 = (M / m1 m2 m3)(2 a mu - sum (m_j + m_k) / r_jk^(a+2))``."""
    return float(f2_core(frame.Q, sys.masses, sys.a, mu))


# --- the candidate condition ------------------------------------------------------


def epsilon_rule(C: float):
    """Sign factor with ``epsilon * C = -|C|``.

    Returns ``(epsilon, dual)``; ``dual`` is True for ``C = 0``, where the
    rule gives no preference and both signs should be evaluated.
    """
    if C == 0:
        return 1, True
    return (-1 if C > 0 else 1), False


@dataclass(frozen=True)
class ConditionInputs:
    frame: FujiwaraFrame
    I_phys: float
    B: float
    C: float
    epsilon: int

    def __post_init__(self):
        if self.I_phys <= 0:
            raise PreconditionViolated(f"I_phys must be positive, got {self.I_phys}")
        if self.epsilon not in (1, -1):
            raise PreconditionViolated(f"epsilon must be +1 or -1, got {self.epsilon}")


def condition_residual(inputs: ConditionInputs, sys: MassSystem, mu: float) -> float:
    """Residual of the necessary condition for the non-homographic candidate.

        I^((2-a)/2) + (m1 m2 m3)^2 / M^2 (B - C^2)(f1/rho^4 + f2/rho^2)
                    + 2 eps C sqrt(m1 m2 m3 (B - C^2) / M) / rho

    A nonzero value at a shape rules the candidate out there.

    Raises
    ------
    CentralConfiguration
        If ``rho <= 1e-12``.
    """
    frame = inputs.frame
    m = sys.masses
    M = m.sum()
    mmm = float(np.prod(m))
    a = sys.a
    rho2 = rho_of(frame, sys, mu).rho2_G
    rho = math.sqrt(max(rho2, 0.0))
    if rho <= RHO_TOL:
        raise CentralConfiguration(f"rho = {rho:.3e}: the condition is undefined at a central configuration")
    gap = inputs.B - inputs.C**2
    f1 = f1_of(frame, sys)
    f2 = f2_of(frame, sys, mu)
    return (
        inputs.I_phys ** ((2 - a) / 2)
        + mmm**2 / M**2 * gap * (f1 / rho2**2 + f2 / rho2)
        + 2 * inputs.epsilon * inputs.C * math.sqrt(mmm * max(gap, 0.0) / M) / rho
    )


# --- series along the critical path ----------------------------------------------


@dataclass(frozen=True)
class SeriesFit:
    c2: float
    c4: float
    residual: float  # rms of the fit
    n_points: int


def fit_even_series(x, v, min_points=20) -> SeriesFit:
    """Least-squares fit ``v = c2 x^2 + c4 x^4``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.size < min_points:
        raise InsufficientPoints(f"{x.size} points in range, need at least {min_points}")
    A = np.column_stack([x**2, x**4])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - v) ** 2)))
    return SeriesFit(float(coef[0]), float(coef[1]), rms, int(x.size))


def _near_origin(contour, max_x):
    P = contour.points
    keep = (np.abs(P[:, 0]) <= max_x) & (P[:, 0] != 0.0)
    return P[keep]


def series_fit_critical_path(contour, max_x: float = 0.05) -> SeriesFit:
    """Fit ``y^2 = c2 x^2 + c4 x^4`` to contour points with ``|x| <= max_x``.

    Raises
    ------
    InsufficientPoints
        If fewer than 20 points fall in range.
    """
    P = _near_origin(contour, max_x)
    return fit_even_series(P[:, 0], P[:, 1] ** 2)


def chart_shapes(chart: ShapeChart, x, y):
    """Barycentric ``I = 1`` complex shapes for arrays of chart points, ``(N, 3)``."""
    m = chart.system.masses
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    z = np.stack([np.full(x.shape, -1.0 + 0j), np.full(x.shape, 1.0 + 0j), x + 1j * y], axis=-1)
    z = z - (z @ m)[..., None] / m.sum()
    I = np.abs(z) ** 2 @ m
    return z / np.sqrt(I)[..., None]


def rho2_fit_critical_path(contour, chart: ShapeChart, max_x: float = 0.05) -> SeriesFit:
    """Fit ``rho^2 = k2 x^2 + k4 x^4`` along the contour (``mu`` = the shape's own)."""
    P = _near_origin(contour, max_x)
    sys = chart.system
    Q = chart_shapes(chart, P[:, 0], P[:, 1])
    mu = U_core(Q, sys.masses, sys.a)
    return fit_even_series(P[:, 0], rho2_core(Q, sys.masses, sys.a, mu))


def critical_path_y(chart: ShapeChart, level: float, x: float, y_hi: Optional[float] = None) -> float:
    """Smallest ``y > 0`` with ``mu(x, y) = level``.

    Raises
    ------
    NoRoot
        If no crossing is found in ``(0, y_hi]``.
    """
    if y_hi is None:
        y_hi = 4.0 * abs(x) if x != 0 else 1.0
    grid = np.linspace(0.0, y_hi, 401)[1:]
    br = sign_change_brackets(lambda y: chart.mu(x, y) - level, grid)
    if not br:
        raise NoRoot(f"level {level} not crossed above x = {x}")
    return bisect_newton(lambda y: chart.mu(x, y) - level, *br[0], df=lambda y: chart.gradient(x, y)[1])


def richardson(h, values, step: int = 2):
    """Extrapolate ``values(h)`` to ``h = 0`` with a polynomial in ``h**step``.

    Neville's scheme over all points; returns ``(limit, error_estimate)``
    where the error estimate is the change made by the last point.
    """
    h = np.asarray(h, dtype=float) ** step
    T = list(np.asarray(values, dtype=float))
    n = len(T)
    if n == 1:
        return float(T[0]), float("nan")
    prev = T[-2]
    for k in range(1, n):
        for i in range(n - 1, k - 1, -1):
            T[i] = (h[i - k] * T[i] - h[i] * T[i - 1]) / (h[i - k] - h[i])
        if k == n - 2:
            prev = T[n - 2]
    return float(T[-1]), float(abs(T[-1] - prev))


@dataclass
class SeriesTable:
    x: np.ndarray
    y: np.ndarray
    rho2: np.ndarray
    f1: np.ndarray
    f1_over_rho2: np.ndarray
    f1_over_rho2_plus_f2: np.ndarray
    f1_over_rho4_plus_f2_over_rho2: np.ndarray
    limits: dict = field(default_factory=dict)

    def rows(self):
        keys = ("x", "y", "rho2", "f1", "f1_over_rho2", "f1_over_rho2_plus_f2", "f1_over_rho4_plus_f2_over_rho2")
        cols = [getattr(self, k) for k in keys]
        return [dict(zip(keys, map(float, vals))) for vals in zip(*cols)]


def series_limits_on_path(chart: ShapeChart, level: float, x_values) -> SeriesTable:
    """Evaluate ``rho^2``, ``f1`` and the two ratios at exact critical-path points.

    ``limits`` holds the even-power extrapolation of both ratios to ``x -> 0``
    (needs at least two distinct ``x``).
    """
    sys = chart.system
    x = np.asarray(x_values, dtype=float)
    y = np.array([critical_path_y(chart, level, xi) for xi in x])
    Q = chart_shapes(chart, x, y)
    mu = U_core(Q, sys.masses, sys.a)
    rho2 = rho2_core(Q, sys.masses, sys.a, mu)
    f1 = f1_core(Q, sys.masses, sys.a)
    f2 = f2_core(Q, sys.masses, sys.a, mu)
    r1 = f1 / rho2 + f2
    r2 = f1 / rho2**2 + f2 / rho2
    table = SeriesTable(x, y, rho2, f1, f1 / rho2, r1, r2)
    if len(set(np.abs(x).tolist())) >= 2:
        order = np.argsort(-np.abs(x))
        table.limits = {
            "f1_over_rho2_plus_f2": richardson(np.abs(x[order]), r1[order], 2)[0],
            "f1_over_rho4_plus_f2_over_rho2": richardson(np.abs(x[order]), r2[order], 2)[0],
        }
    return table


# --- near the equilateral configuration -------------------------------------------


DEFAULT_RADII = tuple(0.04 / 2**k for k in range(7))


@dataclass(frozen=True)
class DirectionalLimit:
    angle: float
    radii: tuple
    values: tuple
    limit: float
    error: float


def near_equilateral_ratio(chart: ShapeChart, x, y):
    """``f1/rho^2 + f2`` at chart points ``(x, sqrt(3) + y)`` with ``mu`` = the shape's own."""
    sys = chart.system
    Q = chart_shapes(chart, x, math.sqrt(3.0) + np.asarray(y, dtype=float))
    mu = U_core(Q, sys.masses, sys.a)
    return f1_core(Q, sys.masses, sys.a) / rho2_core(Q, sys.masses, sys.a, mu) + f2_core(Q, sys.masses, sys.a, mu)


def equilateral_limits(sys: MassSystem, angles, radii=DEFAULT_RADII) -> list:
    """Limit of ``f1/rho^2 + f2`` approaching the upper equilateral shape along rays.

    For each angle the ratio is sampled at the given radii and extrapolated
    to radius 0 by a polynomial in the radius (the expansion has odd powers
    in general, so every integer power is eliminated).
    """
    chart = ShapeChart(sys)
    radii = tuple(float(r) for r in radii)
    rr = np.asarray(radii)
    out = []
    for ang in angles:
        vals = near_equilateral_ratio(chart, rr * math.cos(ang), rr * math.sin(ang))
        lim, err = richardson(rr, vals, step=1)
        out.append(DirectionalLimit(float(ang), radii, tuple(map(float, vals)), lim, err))
    return out


def _pair_sum(sys):
    m1, m2, m3 = sys.masses
    return m1 * m2 + m2 * m3 + m3 * m1


def equilateral_limit_vertical(sys: MassSystem) -> float:
    """Closed-form limit for the approach ``x = 0``, ``y -> 0``."""
    m1, m2, m3 = sys.masses
    a = sys.a
    S = _pair_sum(sys)
    return 3 * (a + 2) * (m1 + m2) * S**2 / (4 * m1 * m2 * m3 * (m1**2 + m1 * m2 + m2**2)) * (S / sys.total_mass) ** (a / 2)


def equilateral_limit_horizontal(sys: MassSystem) -> float:
    """Closed-form limit for the approach ``y = 0``, ``x -> 0``."""
    m1, m2, m3 = sys.masses
    a = sys.a
    S = _pair_sum(sys)
    den = 4 * m1 * m2 * m3 * (m1**2 + m2**2 + 4 * m3**2 - m1 * m2 + 2 * m2 * m3 + 2 * m3 * m1)
    return 3 * (a + 2) * (m1 + m2 + 4 * m3) * S**2 / den * (S / sys.total_mass) ** (a / 2)


# --- events ----------------------------------------------------------------------


@dataclass(frozen=True)
class ShapeEvent:
    tau0: float
    t0: float
    pair: str  # 1-based label, e.g. "12"
    kind: ShapeClass
    Delta: float
    gap: float  # |r_lj - r_kl| for the two sides meeting at the opposite body

    @property
    def collinear_or_isosceles(self) -> bool:
        return self.kind != ShapeClass.GENERIC


@dataclass
class EventScan:
    events: list
    frozen_pairs: list  # pair labels whose dr/dtau is zero to noise level


def _pair_label(j, k):
    return f"{j + 1}{k + 1}"


def event_finder(frames, frame_at: Optional[Callable] = None, *, tol=1e-10, noise=1e-7,
                 classify_tol=1e-9) -> EventScan:
    """Zeros of ``dr_jk/dtau`` (general route) along a list of frames.

    A pair whose rate never exceeds ``noise`` (relative to the largest
    shape momentum scale) is reported as frozen instead of producing
    events.  Sign changes between samples are refined by bisection in
    ``t`` to ``tol`` when ``frame_at(t)`` is given; otherwise ``tau0`` is
    linearly interpolated.  Each event is classified with
    :func:`classify_shape` at threshold ``classify_tol``.
    """
    if not frames:
        return EventScan([], [])
    sys = frames[0].system
    rates = np.array([dr_dtau(f, sys).general for f in frames])
    scale = max(1.0, float(np.max([np.sqrt(np.sum(np.abs(f.P) ** 2 / sys.masses)) for f in frames])))
    events, frozen = [], []
    for idx, (j, k) in enumerate(sys.pairs):
        ch = rates[:, idx]
        label = _pair_label(j, k)
        if np.max(np.abs(ch)) <= noise * scale:
            frozen.append(label)
            continue
        s = np.sign(ch)
        for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
            f0, f1_ = frames[i], frames[i + 1]
            if frame_at is not None:
                lo, hi = f0.t, f1_.t
                vlo = ch[i]
                while hi - lo > tol:
                    mid = 0.5 * (lo + hi)
                    vm = dr_dtau(frame_at(mid), sys).general[idx]
                    if np.sign(vm) == np.sign(vlo):
                        lo, vlo = mid, vm
                    else:
                        hi = mid
                fe = frame_at(0.5 * (lo + hi))
            else:
                w = ch[i] / (ch[i] - ch[i + 1])
                fe = FujiwaraFrame(f0.Q, f0.P, sys, f0.tau + w * (f1_.tau - f0.tau), f0.t + w * (f1_.t - f0.t))
            info = classify_shape(fe, sys, tol=classify_tol, rho_tol=classify_tol)
            l = 3 - j - k
            gap = abs(abs(fe.Q[l] - fe.Q[j]) - abs(fe.Q[k] - fe.Q[l]))
            events.append(ShapeEvent(fe.tau, fe.t, label, info.kind, info.Delta, gap))
    events.sort(key=lambda e: e.tau0)
    return EventScan(events, frozen)


def frame_sampler(traj) -> Callable:
    """``t -> FujiwaraFrame`` from the trajectory's dense output."""
    sys = traj.system

    def at(t):
        r = traj.resample([t])
        Q, P, I, dIdt, C = _frames_arrays(r.q, r.p, r.theta, sys)
        return FujiwaraFrame(Q[0], P[0], sys, float(r.tau[0]), float(t), float(I[0]), float(dIdt[0]), float(C[0]))

    return at


# --- audit -----------------------------------------------------------------------


class Verdict(str, enum.Enum):
    HOMOGRAPHIC = "Homographic"
    REJECTED = "NonHomographicCandidateRejected"
    NOT_CONSTANT_MEASURE = "NotConstantMeasure"


@dataclass
class ConjectureReport:
    mu_mean: float
    mu_drift: float
    B_mean: float
    B_drift: float
    C: float
    sundman_gap: float
    category: Optional[str]
    homography_score: float
    events: list
    epsilon: int
    condition_residuals: list
    verdict: Verdict
    condition_residuals_opposite: Optional[list] = None
    rho: Optional[np.ndarray] = None
    frozen_pairs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        cond = {"epsilon": self.epsilon, "values": [float(v) for v in self.condition_residuals]}
        if self.condition_residuals_opposite is not None:
            cond["values_opposite"] = [float(v) for v in self.condition_residuals_opposite]
        return {
            "mu_mean": self.mu_mean,
            "mu_drift": self.mu_drift,
            "B_mean": self.B_mean,
            "B_drift": self.B_drift,
            "C": self.C,
            "sundman_gap": self.sundman_gap,
            "category": self.category,
            "homography_score": self.homography_score,
            "events": [{"tau0": e.tau0, "pair": e.pair, "class": e.kind.value} for e in self.events],
            "condition_residuals": cond,
            "verdict": self.verdict.value,
        }


def _residual_series(frames, sys, B, C, mu, eps):
    out = []
    for f in frames:
        try:
            out.append(condition_residual(ConditionInputs(f, f.I, B, C, eps), sys, mu))
        except CentralConfiguration:
            continue
    return out


def audit(traj, sys: Optional[MassSystem] = None, *, refine_events: bool = True) -> ConjectureReport:
    """Classify an integrated three-body orbit against the conjecture's cases.

    ``mu`` drift above ``1e-6`` (``(max - min) / mean``) makes the verdict
    ``NotConstantMeasure``.  Otherwise the orbit is ``Homographic`` when
    ``max(B - C^2) <= 1e-8 max(1, B)`` and the homography score
    ``max |dQ_k/dtau| / sqrt(max(1, B))`` is at most ``1e-6``; anything else
    is a non-homographic constant-measure orbit and the condition residual
    series is the evidence against the candidate.
    """
    sys = traj.system if sys is None else sys
    if sys.n != 3:
        raise ValueError("the audit is defined for three bodies")
    d = traj.diagnostics()
    mu = np.asarray(d.mu)
    B = np.asarray(d.B)
    mu_mean = float(mu.mean())
    mu_drift = float((mu.max() - mu.min()) / mu_mean)
    B_mean = float(B.mean())
    B_drift = float((B.max() - B.min()) / max(1.0, abs(B_mean)))
    C = float(np.mean(d.C))
    gap = float(np.max(d.sundman_gap))
    category = categorize_orbit(d, sys).value if sys.a < 2 else None
    frames = to_fujiwara(traj)
    score = max(float(np.max(np.abs(f.P) / sys.masses)) for f in frames) / math.sqrt(max(1.0, B_mean))
    Qs = np.array([f.Q for f in frames])
    rho = np.sqrt(np.maximum(rho2_core(Qs, sys.masses, sys.a, U_core(Qs, sys.masses, sys.a)), 0.0))

    eps, dual = epsilon_rule(C)
    residuals, opposite, events, frozen = [], None, [], []
    if mu_drift > MU_DRIFT_TOL:
        verdict = Verdict.NOT_CONSTANT_MEASURE
    else:
        homographic = gap <= GAP_TOL * max(1.0, B_mean) and score <= SCORE_TOL
        verdict = Verdict.HOMOGRAPHIC if homographic else Verdict.REJECTED
        if not homographic:
            residuals = _residual_series(frames, sys, B_mean, C, mu_mean, eps)
            if dual:
                opposite = _residual_series(frames, sys, B_mean, C, mu_mean, -eps)
        scan = event_finder(frames, frame_sampler(traj) if refine_events and traj.dense is not None else None)
        events, frozen = scan.events, scan.frozen_pairs
    return ConjectureReport(mu_mean, mu_drift, B_mean, B_drift, C, gap, category, score, events, eps,
                            residuals, verdict, opposite, rho, frozen)


# --- escape asymptotics ------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticsResult:
    tau_infinity: float
    exponent: float
    expected_exponent: float
    coefficient: float
    rho_slope: float


def tau_remaining(I_end, H, mu, B, a=1.0) -> float:
    """``int_{I_end}^inf dI / (I sqrt(8 H I + 8 mu I^((2-a)/2) - 4 B))``."""
    if a == 2:
        raise DegenerateExponent("needs a != 2")

    def integrand(w):
        # w = I_end / I maps [I_end, inf) onto (0, 1]
        if w == 0.0:
            return 0.0
        I = I_end / w
        return 1.0 / (w * math.sqrt(8 * H * I + 8 * mu * I ** ((2 - a) / 2) - 4 * B))

    val, _ = quad(integrand, 0.0, 1.0, limit=200, epsabs=0.0, epsrel=1e-12)
    return val


def asymptotics_check(traj, sys: Optional[MassSystem] = None, fit_decades: float = 2.0) -> AsymptoticsResult:
    """Fit ``sqrt(I) ~ c (tau_inf - tau)^(-p)`` on the end of an escaping orbit.

    ``tau_inf`` is the sampled ``tau`` at the end plus the remaining
    quadrature of the first integral.  The fit uses samples within
    ``fit_decades`` decades of the final ``I``.  Expected ``p`` is 2 for
    ``H = 0`` and 1 for ``H > 0``.

    Raises
    ------
    NotAsymptotic
        If ``I(t_end) < 100 I(0)``.
    """
    sys = traj.system if sys is None else sys
    d = traj.diagnostics()
    I = np.asarray(d.I)
    H = float(np.mean(d.H))
    if H < -1e-12 * max(1.0, float(np.max(np.abs(d.U)))):
        raise PreconditionViolated(f"needs H >= 0, got {H}")
    H = max(H, 0.0)
    if I[-1] < 100 * I[0]:
        raise NotAsymptotic(f"I grew only by {I[-1] / I[0]:.3g}")
    mu = float(np.mean(d.mu))
    B = float(np.mean(d.B))
    tau_inf = float(traj.tau[-1]) + tau_remaining(float(I[-1]), H, mu, B, sys.a)
    sel = (I >= I[-1] * 10.0 ** (-fit_decades)) & (traj.tau < tau_inf)
    if np.count_nonzero(sel) < 3:
        dense = np.geomspace(I[-1] * 10.0 ** (-fit_decades), I[-1], 50)
        t_sel = np.interp(np.log(dense), np.log(I), traj.t)
        traj = traj.resample(t_sel)
        I = np.asarray(traj.diagnostics().I)
        sel = np.ones(I.size, dtype=bool)
    tau = np.asarray(traj.tau)[sel]
    slope, intercept = np.polyfit(np.log(tau_inf - tau), 0.5 * np.log(I[sel]), 1)
    Qs = np.array([f.Q for f in to_fujiwara(traj)])
    rho = np.sqrt(np.maximum(rho2_core(Qs, sys.masses, sys.a, U_core(Qs, sys.masses, sys.a)), 0.0))
    taus = np.asarray(traj.tau)
    rho_slope = float(np.polyfit(taus[-min(10, taus.size):], rho[-min(10, taus.size):], 1)[0]) if taus.size > 1 else 0.0
    return AsymptoticsResult(tau_inf, float(-slope), 2.0 if H == 0 else 1.0, float(math.exp(intercept)), rho_slope)
