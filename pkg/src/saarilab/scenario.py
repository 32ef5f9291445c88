"""Scenario files and initial-state presets.

A scenario is a flat text file of ``key = value`` lines.  Dotted keys group
settings into sections; values are JSON literals, comma-separated number
lists or bare words.  ``#`` starts a comment.  Example::

    masses = 1, 1, 1
    a = 1
    initial.preset = lagrange_circular
    initial.side = 1
    controls.periods = 10
    output.stride = 1
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .central_config import euler_collinear
from .dynamics import MassSystem, PhaseState, reduce_to_barycenter, scalar_diagnostics
from .integrate import Controls

PRESETS = ("lagrange_circular", "euler_collinear_spin", "equilateral_freefall", "custom")

_KNOWN = {
    "masses", "a",
    "initial.preset", "initial.side", "initial.size", "initial.omega_scale", "initial.radial_scale",
    "initial.middle_index", "initial.positions", "initial.momenta", "initial.perturb", "initial.seed",
    "controls.t_end", "controls.periods", "controls.rel_tol", "controls.abs_tol", "controls.max_step",
    "controls.n_samples",
    "output.stride", "output.path",
}


class ScenarioError(ValueError):
    """Malformed scenario; the message names the line or field."""


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        try:
            return [float(v) for v in text.split(",")]
        except ValueError:
            pass
    return text


def parse_scenario_text(text: str) -> dict:
    """Parse ``key = value`` lines into a flat dict (keys keep their dots)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN:
            raise ScenarioError(f"line {lineno}: unknown field {key!r}")
        if key in out:
            raise ScenarioError(f"line {lineno}: duplicate field {key!r}")
        out[key] = _parse_value(value)
    return out


def _num(d, key, default=None, kind=float):
    if key not in d:
        if default is None:
            raise ScenarioError(f"{key}: required field missing")
        return default
    v = d[key]
    try:
        if kind is int:
            if isinstance(v, bool) or float(v) != int(float(v)):
                raise ValueError
            return int(float(v))
        return float(v)
    except (TypeError, ValueError):
        raise ScenarioError(f"{key}: expected a number, got {v!r}") from None


@dataclass
class Scenario:
    masses: list
    a: float = 1.0
    preset: str = "custom"
    params: dict = field(default_factory=dict)
    controls: Controls = field(default_factory=Controls)
    periods: float | None = None
    stride: int = 1
    path: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        masses = d.get("masses")
        if masses is None:
            raise ScenarioError("masses: required field missing")
        if isinstance(masses, (int, float)):
            masses = [masses]
        try:
            masses = [float(m) for m in masses]
        except (TypeError, ValueError):
            raise ScenarioError(f"masses: expected a list of numbers, got {masses!r}") from None
        if len(masses) < 3:
            raise ScenarioError(f"masses: need at least 3 bodies, got {len(masses)}")
        if any(not math.isfinite(m) or m <= 0 for m in masses):
            raise ScenarioError(f"masses: every mass must be positive, got {masses}")
        a = _num(d, "a", 1.0)
        if not math.isfinite(a) or a <= 0:
            raise ScenarioError(f"a: exponent must be positive, got {a}")
        preset = str(d.get("initial.preset", "custom"))
        if preset not in PRESETS:
            raise ScenarioError(f"initial.preset: unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        params = {k.split(".", 1)[1]: v for k, v in d.items() if k.startswith("initial.") and k != "initial.preset"}
        ctl = Controls(
            t_end=_num(d, "controls.t_end", 10.0),
            rel_tol=_num(d, "controls.rel_tol", 1e-12),
            abs_tol=_num(d, "controls.abs_tol", 1e-12),
            max_step=_num(d, "controls.max_step", math.inf),
            n_samples=_num(d, "controls.n_samples", 0, int) or None,
        )
        for name in ("rel_tol", "abs_tol", "max_step"):
            if getattr(ctl, name) <= 0:
                raise ScenarioError(f"controls.{name}: must be positive")
        periods = _num(d, "controls.periods") if "controls.periods" in d else None
        if periods is not None and periods <= 0:
            raise ScenarioError("controls.periods: must be positive")
        stride = _num(d, "output.stride", 1, int)
        if stride < 1:
            raise ScenarioError("output.stride: must be at least 1")
        path = d.get("output.path")
        return cls(masses, a, preset, params, ctl, periods, stride, None if path is None else str(path))

    @classmethod
    def from_text(cls, text: str) -> "Scenario":
        return cls.from_dict(parse_scenario_text(text))

    @classmethod
    def from_file(cls, path) -> "Scenario":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file: {exc}") from None
        return cls.from_text(text)

    def system(self) -> MassSystem:
        return MassSystem(self.masses, self.a)

    def build(self, seed: int | None = None):
        """Return ``(system, initial_state, controls, expected)``.

        ``expected`` holds the analytic diagnostics a preset guarantees
        (empty for ``custom``) and the period of rigidly rotating presets.
        """
        sys = self.system()
        p = self.params
        try:
            if self.preset == "lagrange_circular":
                state, expected = lagrange_circular(sys, _num(p, "side", 1.0), _num(p, "omega_scale", 1.0),
                                                    _num(p, "radial_scale", 0.0))
            elif self.preset == "euler_collinear_spin":
                state, expected = euler_collinear_spin(sys, _num(p, "middle_index", 2, int), _num(p, "size", 1.0),
                                                       _num(p, "omega_scale", 1.0))
            elif self.preset == "equilateral_freefall":
                state, expected = equilateral_freefall(sys, _num(p, "side", 1.0))
            else:
                state, expected = custom_state(sys, p.get("positions"), p.get("momenta"))
        except ScenarioError:
            raise
        except ValueError as exc:
            raise ScenarioError(f"initial: {exc}") from None
        amp = _num(p, "perturb", 0.0)
        if amp:
            s = _num(p, "seed", 0, int) if seed is None else seed
            state = perturb(state, sys, amp, np.random.default_rng(s))
            expected = {k: v for k, v in expected.items() if k == "period"}
        ctl = self.controls
        if self.periods is not None:
            if "period" not in expected:
                raise ScenarioError("controls.periods: preset has no rotation period; use controls.t_end")
            from dataclasses import replace

            ctl = replace(ctl, t_end=self.periods * expected["period"])
        return sys, state, ctl, expected


def _rotate90(v):
    return np.stack([-v[:, 1], v[:, 0]], axis=1)


def _expected(state, sys, **extra):
    d = scalar_diagnostics(state, sys)
    out = {"mu": d.mu, "C": d.C, "H": d.H, "I": d.I, "B": d.B}
    out.update(extra)
    return out


def lagrange_circular(sys: MassSystem, side: float = 1.0, omega_scale: float = 1.0, radial_scale: float = 0.0):
    """Equilateral triangle in rigid rotation.

    With ``omega_scale = 1`` and no radial velocity this is the circular
    relative equilibrium, ``omega^2 = M / side^(a+2)``, for any masses.
    ``radial_scale`` adds the homothetic velocity ``radial_scale * omega * q``.
    """
    if sys.n != 3:
        raise ValueError("masses: the Lagrange preset needs 3 bodies")
    if side <= 0:
        raise ScenarioError("initial.side: must be positive")
    ang = np.pi / 2 + 2 * np.pi / 3 * np.arange(3)
    q = side / math.sqrt(3) * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    q = q - sys.masses @ q / sys.total_mass
    omega = omega_scale * math.sqrt(sys.total_mass / side ** (sys.a + 2))
    m = sys.masses[:, None]
    p = m * omega * (_rotate90(q) + radial_scale * q)
    state = PhaseState(q, p)
    if omega == 0:
        return state, _expected(state, sys)
    return state, _expected(state, sys, period=2 * math.pi / abs(omega), omega=omega)


def euler_collinear_spin(sys: MassSystem, middle_index: int = 2, size: float = 1.0, omega_scale: float = 1.0):
    """Rectilinear central configuration (scaled to ``I = size^2``) in rigid rotation.

    ``omega^2 = a U / I`` makes it a relative equilibrium.
    """
    if size <= 0:
        raise ScenarioError("initial.size: must be positive")
    cc = euler_collinear(sys, middle_index)
    q = size * cc.points
    d0 = scalar_diagnostics(PhaseState(q, np.zeros_like(q)), sys)
    omega = omega_scale * math.sqrt(sys.a * d0.U / d0.I)
    p = sys.masses[:, None] * omega * _rotate90(q)
    state = PhaseState(q, p)
    return state, _expected(state, sys, period=2 * math.pi / omega, omega=omega)


def equilateral_freefall(sys: MassSystem, side: float = 1.0):
    """Equilateral triangle released from rest (homothetic collapse)."""
    state, _ = lagrange_circular(sys, side, omega_scale=0.0)
    return state, _expected(state, sys)


def custom_state(sys: MassSystem, positions, momenta):
    if positions is None:
        raise ScenarioError("initial.positions: required for the custom preset")
    try:
        q = np.array(positions, dtype=float)
        p = np.zeros_like(q) if momenta is None else np.array(momenta, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("initial.positions: expected nested numeric lists") from None
    if q.shape != (sys.n, 2):
        raise ScenarioError(f"initial.positions: expected {sys.n} planar points, got shape {q.shape}")
    if p.shape != q.shape:
        raise ScenarioError(f"initial.momenta: expected shape {q.shape}, got {p.shape}")
    return reduce_to_barycenter(PhaseState(q, p), sys), {}


def perturb(state: PhaseState, sys: MassSystem, amplitude: float, rng) -> PhaseState:
    """Add Gaussian noise of relative size ``amplitude`` and re-centre."""
    qs = np.max(np.abs(state.q))
    ps = max(float(np.max(np.abs(state.p))), qs)
    q = state.q + amplitude * qs * rng.standard_normal(state.q.shape)
    p = state.p + amplitude * ps * rng.standard_normal(state.p.shape)
    return reduce_to_barycenter(PhaseState(q, p, state.t), sys)
