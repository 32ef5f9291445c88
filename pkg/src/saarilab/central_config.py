"""Three-body central configurations, critical measures and the shape chart.

Shapes are parameterised by a chart that pins body 1 at ``(-1, 0)`` and
body 2 at ``(1, 0)`` and leaves body 3 free at ``(x, y)``.  Any triangle is
carried to the chart by the orientation-preserving similarity that sends
the first two bodies to the pinned points, so ``mu`` read on the chart is
the configurational measure of the whole similarity class.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._roots import bisect_newton, sign_change_brackets
from .dynamics import MassSystem
from .errors import CollisionSingularity, RootNotBracketed
from .fujiwara import CYCLIC, FujiwaraFrame, U_of, normalize_shape, rho_of

PIN1 = -1.0 + 0.0j
PIN2 = 1.0 + 0.0j


class ConfigKind(str, enum.Enum):
    EQUILATERAL_PLUS = "EquilateralPlus"
    EQUILATERAL_MINUS = "EquilateralMinus"
    RECTILINEAR_1 = "Rectilinear1"
    RECTILINEAR_2 = "Rectilinear2"
    RECTILINEAR_3 = "Rectilinear3"


class ShapeClass(str, enum.Enum):
    EQUILATERAL = "Equilateral"
    RECTILINEAR_CC = "RectilinearCC"
    OTHER_COLLINEAR = "OtherCollinear"
    ISOSCELES = "Isosceles"
    GENERIC = "Generic"

    @property
    def collinear(self) -> bool:
        return self in (ShapeClass.RECTILINEAR_CC, ShapeClass.OTHER_COLLINEAR)


@dataclass(frozen=True)
class ShapeChart:
    """The pinned ``(x, y)`` chart for a three-body mass system.

    ``guard`` is the exclusion radius around the pinned vertices used by
    the contour extractor.
    """

    system: MassSystem
    guard: float = 1e-3

    def __post_init__(self):
        if self.system.n != 3:
            raise ValueError(f"masses: the shape chart needs exactly 3 bodies, got {self.system.n}")

    def _parts(self, x, y):
        m1, m2, m3 = self.system.masses
        a = self.system.a
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r13sq = (x + 1.0) ** 2 + y * y
        r23sq = (x - 1.0) ** 2 + y * y
        if np.any(r13sq == 0) or np.any(r23sq == 0):
            raise CollisionSingularity("chart point coincides with a pinned vertex")
        U = (m1 * m2 * 2.0 ** (-a) + m1 * m3 * r13sq ** (-a / 2) + m2 * m3 * r23sq ** (-a / 2)) / a
        I = (4.0 * m1 * m2 + m1 * m3 * r13sq + m2 * m3 * r23sq) / self.system.total_mass
        return x, y, r13sq, r23sq, U, I

    def mu(self, x, y):
        """``mu = U I^(a/2)`` of the chart triangle; vectorised."""
        *_, U, I = self._parts(x, y)
        out = U * I ** (self.system.a / 2)
        return float(out) if np.ndim(out) == 0 else out

    def gradient(self, x, y):
        """Analytic ``(dmu/dx, dmu/dy)``."""
        m1, m2, m3 = self.system.masses
        a = self.system.a
        M = self.system.total_mass
        x, y, r13sq, r23sq, U, I = self._parts(x, y)
        w13 = m1 * m3 * r13sq ** (-(a + 2) / 2)
        w23 = m2 * m3 * r23sq ** (-(a + 2) / 2)
        dUx = -w13 * (x + 1.0) - w23 * (x - 1.0)
        dUy = -(w13 + w23) * y
        dIx = 2.0 * (m1 * m3 * (x + 1.0) + m2 * m3 * (x - 1.0)) / M
        dIy = 2.0 * (m1 * m3 + m2 * m3) * y / M
        Ia = I ** (a / 2)
        c = 0.5 * a * U * I ** (a / 2 - 1)
        return Ia * dUx + c * dIx, Ia * dUy + c * dIy

    def shape(self, x, y) -> np.ndarray:
        """Barycentric, ``I = 1`` complex positions of the chart triangle."""
        return normalize_shape([PIN1, PIN2, complex(x, y)], self.system.masses)

    def frame(self, x, y) -> FujiwaraFrame:
        """Frame at rest (``P = 0``) with the chart triangle as its shape."""
        return FujiwaraFrame(self.shape(x, y), np.zeros(3, dtype=complex), self.system)


def to_chart(Q) -> tuple:
    """Chart coordinates ``(x, y)`` of the triangle ``Q`` (complex or planar)."""
    Q = np.asarray(Q)
    if Q.dtype != complex and Q.ndim == 2:
        Q = Q[:, 0] + 1j * Q[:, 1]
    d = Q[1] - Q[0]
    if d == 0:
        raise CollisionSingularity("bodies 1 and 2 coincide; no chart point")
    z = PIN1 + 2.0 * (Q[2] - Q[0]) / d
    return float(z.real), float(z.imag)


class CentralConfigResult(NamedTuple):
    kind: ConfigKind
    shape: np.ndarray  # complex Q, barycentric, I = 1
    mu_c: float
    rho_check: float
    ratio: float = float("nan")  # r(middle, right) / r(left, middle) for rectilinear kinds

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.shape.real, self.shape.imag], axis=-1)

    @property
    def chart_point(self) -> tuple:
        return to_chart(self.shape)


def _result(kind, Q, sys, ratio=float("nan")) -> CentralConfigResult:
    frame = FujiwaraFrame(Q, np.zeros(3, dtype=complex), sys)
    mu = float(U_of(Q, sys))
    rho = math.sqrt(max(rho_of(frame, sys, mu).rho2_G, 0.0))
    return CentralConfigResult(kind, Q, mu, rho, ratio)


def equilateral_config(sys: MassSystem):
    """Both equilateral central configurations (body 3 above, then below)."""
    out = []
    for kind, sgn in ((ConfigKind.EQUILATERAL_PLUS, 1.0), (ConfigKind.EQUILATERAL_MINUS, -1.0)):
        Q = normalize_shape([PIN1, PIN2, complex(0.0, sgn * math.sqrt(3.0))], sys.masses)
        out.append(_result(kind, Q, sys))
    return tuple(out)


#: body order (left, middle, right) for each middle index, 1-based
_LINE_ORDER = {1: (3, 1, 2), 2: (1, 2, 3), 3: (2, 3, 1)}


def collinear_residual(s, m_left, m_mid, m_right, a=1.0):
    """Central-configuration residual of bodies at ``0, 1, 1 + s``.

    The accelerations must be an affine function of position, so the
    residual is ``(acc_R - acc_M)/s - (acc_M - acc_L)``.  Vectorised in ``s``.
    """
    s = np.asarray(s, dtype=float)
    p = -(a + 1.0)
    accL = m_mid + m_right * (1.0 + s) ** p
    accM = -m_left + m_right * s**p
    accR = -m_left * (1.0 + s) ** p - m_mid * s**p
    return (accR - accM) / s - (accM - accL)


def euler_collinear(sys: MassSystem, middle_index: int) -> CentralConfigResult:
    """Rectilinear central configuration with body ``middle_index`` (1-based) in the middle.

    The distance ratio ``s = r(middle, right) / r(left, middle)`` is scanned
    geometrically over ``[1e-6, 1e6]`` and refined by bisection with a
    Newton polish.  The output is barycentric and scaled to ``I = 1``.

    Raises
    ------
    RootNotBracketed
        If no sign change is found.
    """
    if sys.n != 3:
        raise ValueError("masses: Euler configurations need exactly 3 bodies")
    if middle_index not in _LINE_ORDER:
        raise ValueError(f"middle_index must be 1, 2 or 3, got {middle_index}")
    order = [i - 1 for i in _LINE_ORDER[middle_index]]
    mL, mM, mR = (float(sys.masses[i]) for i in order)
    a = sys.a

    def F(s):
        return float(collinear_residual(s, mL, mM, mR, a))

    grid = np.geomspace(1e-6, 1e6, 241)
    brackets = sign_change_brackets(lambda s: collinear_residual(s, mL, mM, mR, a), grid)
    if not brackets:
        raise RootNotBracketed(f"no collinear configuration found for middle body {middle_index}")
    s = bisect_newton(F, *brackets[0])
    z = np.empty(3, dtype=complex)
    z[order[0]], z[order[1]], z[order[2]] = 0.0, 1.0, 1.0 + s
    Q = normalize_shape(z, sys.masses)
    return _result(ConfigKind(f"Rectilinear{middle_index}"), Q, sys, ratio=s)


@dataclass(frozen=True)
class CriticalMeasures:
    mu_c: tuple  # (mu_c1, mu_c2, mu_c3), indexed by the middle body
    mu_eq: float

    def as_dict(self) -> dict:
        return {"mu_c1": self.mu_c[0], "mu_c2": self.mu_c[1], "mu_c3": self.mu_c[2], "mu_eq": self.mu_eq}


def critical_measures(sys: MassSystem) -> CriticalMeasures:
    """``mu`` at the three rectilinear configurations and at the equilateral one."""
    mu_c = tuple(euler_collinear(sys, k).mu_c for k in (1, 2, 3))
    mu_eq = equilateral_config(sys)[0].mu_c
    return CriticalMeasures(mu_c, mu_eq)


class ShapeInfo(NamedTuple):
    kind: ShapeClass
    Delta: float
    rho: float
    gaps: tuple  # |r12 - r23|, |r23 - r31|, |r31 - r12|


def classify_shape(frame: FujiwaraFrame, sys: MassSystem, tol=1e-9, rho_tol=1e-9) -> ShapeInfo:
    """Classify a triangle as collinear, isosceles, equilateral or generic.

    ``|Delta| <= tol`` counts as collinear (a rectilinear central
    configuration if also ``rho <= rho_tol``); a pair of equal sides within
    ``tol`` counts as isosceles.  The raw numbers are returned for
    re-thresholding.
    """
    Q = frame.Q
    r = [abs(Q[j] - Q[k]) for j, k, _ in CYCLIC]  # r12, r23, r31
    gaps = (abs(r[0] - r[1]), abs(r[1] - r[2]), abs(r[2] - r[0]))
    Delta = frame.Delta
    mu = float(U_of(Q, sys))
    rho = math.sqrt(max(rho_of(frame, sys, mu).rho2_G, 0.0))
    if abs(Delta) <= tol:
        kind = ShapeClass.RECTILINEAR_CC if rho <= rho_tol else ShapeClass.OTHER_COLLINEAR
    elif all(g <= tol for g in gaps):
        kind = ShapeClass.EQUILATERAL
    elif any(g <= tol for g in gaps):
        kind = ShapeClass.ISOSCELES
    else:
        kind = ShapeClass.GENERIC
    return ShapeInfo(kind, Delta, rho, gaps)
