"""Scalar root finding: bracket scans, bisection and a Newton polish."""

from __future__ import annotations

import math

import numpy as np

from .errors import RootNotBracketed


def sign_change_brackets(f, grid):
    """Return ``(lo, hi)`` pairs of adjacent grid points where ``f`` changes sign.

    ``f`` must accept a numpy array.  Exact zeros on the grid are returned as
    degenerate brackets ``(x, x)``.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(f(grid), dtype=float)
    out = []
    for i in range(grid.size):
        if vals[i] == 0.0:
            out.append((grid[i], grid[i]))
    s = np.sign(vals)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    out.extend((grid[i], grid[i + 1]) for i in idx)
    out.sort()
    return out


def bisect_newton(f, lo, hi, df=None, xtol=0.0, rtol=4 * np.finfo(float).eps, maxiter=200):
    """Root of ``f`` in ``[lo, hi]`` by bisection followed by Newton polish.

    Bisection runs until the bracket is within ``64 * rtol`` relative width;
    then safeguarded Newton steps (falling back to bisection whenever a step
    leaves the bracket) converge to the requested tolerance.  With ``df=None``
    the polish uses secant slopes built from the bracket ends.
    """
    lo, hi = float(lo), float(hi)
    if lo == hi:
        return lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise RootNotBracketed(f"no sign change on [{lo:g}, {hi:g}]")

    def tol(x):
        return xtol + rtol * abs(x)

    coarse = 64 * rtol
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol + coarse * max(abs(lo), abs(hi)):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fm * flo < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm

    x = lo if abs(flo) < abs(fhi) else hi
    fx = flo if x == lo else fhi
    for _ in range(maxiter):
        if df is not None:
            slope = df(x)
        else:
            slope = (fhi - flo) / (hi - lo) if hi > lo else 0.0
        step_ok = slope != 0.0 and math.isfinite(slope)
        xn = x - fx / slope if step_ok else 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        fn = f(xn)
        if fn == 0.0:
            return xn
        if fn * flo < 0:
            hi, fhi = xn, fn
        else:
            lo, flo = xn, fn
        done = abs(xn - x) <= tol(xn) or hi - lo <= tol(xn)
        x, fx = xn, fn
        if done:
            break
    return x
