"""Quadrature and extrapolation helpers shared across the toolkit."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


def adaptive_simpson(
    fn: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    max_depth: int = 30,
) -> tuple[float, float]:
    """Adaptive Simpson integration of ``fn`` on [a, b].

    Returns (value, estimated absolute error). The tolerance is relative
    to the running magnitude of the integral, with an absolute floor so
    that integrals near zero terminate.
    """
    if a == b:
        return 0.0, 0.0

    fa, fb = fn(a), fn(b)
    m = 0.5 * (a + b)
    fm = fn(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # the 3-point estimate can badly underestimate peaked integrands;
    # seed the tolerance scale from a 33-point composite rule instead
    grid = np.linspace(a, b, 33)
    vals = np.array([fn(float(s)) for s in grid[1:-1]])
    coarse = composite_simpson(
        np.concatenate([[fa], vals, [fb]]), float(grid[1] - grid[0]))
    scale = max(abs(coarse), 1e-300)

    def recurse(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = fn(lm), fn(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= tol:
            return left + right + delta / 15.0, abs(delta) / 15.0
        # halving the budget keeps the summed error below the request
        lv, le = recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1)
        rv, re = recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1)
        return lv + rv, le + re

    tol0 = rel_tol * scale + 1e-300
    return recurse(a, fa, m, fm, b, fb, whole, tol0, 0)


def composite_simpson(values: np.ndarray, dx: float) -> float:
    """Composite Simpson rule on a uniform grid (odd point count preferred).

    Falls back to a trapezoid correction on the last interval when the
    number of intervals is odd.
    """
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    if n == 0:
        return 0.0
    if n == 1:
        return 0.5 * dx * (values[0] + values[1])
    if n % 2 == 1:
        head = composite_simpson(values[:-1], dx)
        # 3-point closure on the trailing interval keeps O(dx^4) accuracy
        tail = dx / 12.0 * (-values[-3] + 8.0 * values[-2] + 5.0 * values[-1])
        return head + tail
    s = values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum()
    return s * dx / 3.0


def cumulative_simpson(values: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative integral of uniformly sampled values along the last axis.

    Entry k approximates the integral from the grid start to grid point k;
    the local-quadratic increments make the result 4th-order accurate.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    out = np.zeros(values.shape)
    if n < 2:
        return out
    if n == 2:
        out[..., 1] = 0.5 * dx * (values[..., 0] + values[..., 1])
        return out
    inc = np.empty(values.shape[:-1] + (n - 1,))
    if n == 3:
        # quadratic increments on a 3-point grid
        inc[..., 0] = dx / 12.0 * (5.0 * values[..., 0] + 8.0 * values[..., 1]
                                   - values[..., 2])
        inc[..., 1] = dx / 12.0 * (-values[..., 0] + 8.0 * values[..., 1]
                                   + 5.0 * values[..., 2])
    else:
        # integral over [k, k+1] from the local cubic through four
        # neighbouring grid points; local O(dx^5), global O(dx^4)
        f0, f1, f2, f3 = (values[..., 0], values[..., 1],
                          values[..., 2], values[..., 3])
        inc[..., 0] = dx / 24.0 * (9.0 * f0 + 19.0 * f1 - 5.0 * f2 + f3)
        inc[..., 1] = dx / 24.0 * (-f0 + 13.0 * f1 + 13.0 * f2 - f3)
        inc[..., 2:] = dx / 24.0 * (values[..., :-3] - 5.0 * values[..., 1:-2]
                                    + 19.0 * values[..., 2:-1]
                                    + 9.0 * values[..., 3:])
    np.cumsum(inc, axis=-1, out=out[..., 1:])
    return out


def neville_extrapolate(ts: Sequence[float], vals: Sequence[float], at: float = 0.0) -> float:
    """Polynomial (Neville) extrapolation of vals(ts) to ``at``.

    Used as a Richardson-type limit estimator: when the error expansion is a
    power series in t, the degree-(m-1) extrapolant converges at order m.
    """
    t = np.asarray(ts, dtype=float)
    p = np.asarray(vals, dtype=float).copy()
    m = t.size
    for j in range(1, m):
        p[: m - j] = ((at - t[j:m]) * p[: m - j] + (t[: m - j] - at) * p[1 : m - j + 1]) / (
            t[: m - j] - t[j:m]
        )
    return float(p[0])


def fit_loglog_slope(xs: np.ndarray, ys: np.ndarray, floor: float = 1e-14,
                     tail: int = 6) -> float:
    """Least-squares slope of log|ys| against log(xs), ignoring values below floor.

    Only the ``tail`` smallest xs above the floor are used: the decay rate
    is an asymptotic statement and higher-order terms pollute large xs.
    Returns NaN when fewer than two usable points remain.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys, dtype=float))
    mask = ys > floor
    if mask.sum() < 2:
        return math.nan
    order = np.argsort(xs[mask])[:tail]
    lx, ly = np.log(xs[mask][order]), np.log(ys[mask][order])
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope)
