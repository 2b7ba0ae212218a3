"""Re-parametrized distances along weighted geodesics.

For a unit-speed minimal geodesic gamma from x to y of length L and
weight f, the partial re-parametrized distance at fraction t is

    d_t(x, y) = integral_0^{t L} exp(-a f(gamma(s))) ds,   a = 2(1-eps)/(n-1).

The full distance is d_f(x, y) = d_1(x, y). These are computed by
adaptive Simpson quadrature on the analytic geodesic, or all at once on
a fixed grid via cumulative Simpson when many fractions are needed.
"""

from __future__ import annotations

import math

import numpy as np

from .params import DimensionParams
from .quadrature import adaptive_simpson, cumulative_simpson
from .spaces import GeodesicSegment, ModelSpace, WeightFunction, segment_between


def weight_along(space: ModelSpace, weight: WeightFunction,
                 seg: GeodesicSegment, s):
    """f(gamma(s)) for arclength s, vectorized."""
    pts = space.geodesic(seg.start, seg.direction, np.asarray(s, dtype=float))
    return weight.eval(pts)


def reparam_partial(space: ModelSpace, weight: WeightFunction,
                    params: DimensionParams, seg: GeodesicSegment,
                    t: float, rel_tol: float = 1e-10) -> float:
    """d_t(x, y) along the given segment, t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"fraction t must lie in [0, 1], got {t}")
    a = params.a
    if a == 0.0 or weight.is_constant:
        f0 = float(weight.eval(seg.start)) if weight.is_constant else 0.0
        scale = math.exp(-a * f0) if weight.is_constant else 1.0
        return scale * t * seg.length
    upper = t * seg.length
    if upper == 0.0:
        return 0.0
    fn = lambda s: math.exp(-a * float(weight_along(space, weight, seg, s)))
    val, _ = adaptive_simpson(fn, 0.0, upper, rel_tol=rel_tol)
    return val


def reparam_distance(space, weight, params, x, y, rel_tol: float = 1e-10) -> float:
    """Full re-parametrized distance d_f(x, y)."""
    seg = segment_between(space, x, y)
    return reparam_partial(space, weight, params, seg, 1.0, rel_tol=rel_tol)


def reparam_profile(space: ModelSpace, weight: WeightFunction,
                    params: DimensionParams, seg: GeodesicSegment,
                    grid_size: int = 512):
    """(s_grid, d(s)) with d(s) = integral_0^s e^{-a f(gamma)} on a uniform grid.

    Fourth-order cumulative Simpson; d(s_grid[-1]) is the full distance.
    grid_size is rounded up to an even interval count.
    """
    m = grid_size + (grid_size % 2)
    s = np.linspace(0.0, seg.length, m + 1)
    fs = np.asarray(weight_along(space, weight, seg, s), dtype=float)
    integrand = np.exp(-params.a * fs)
    if seg.length == 0.0:
        return s, np.zeros_like(s)
    d = cumulative_simpson(integrand, s[1] - s[0])
    return s, d


def asymmetry_bound_margin(space: ModelSpace, weight: WeightFunction,
                           params: DimensionParams, seg: GeodesicSegment,
                           t: float, grad_sup: float) -> float:
    """Margin of |d_t/(t d_f) - 1| <= |a| A e^{|a| A r} d(x,y), A = (1-t) grad_sup.

    ``grad_sup`` must dominate the gradient norm of the weight on a ball
    of radius r = d(x,y) around x. Nonnegative margin means the bound holds.
    """
    a = params.a
    r = seg.length
    d_full = reparam_partial(space, weight, params, seg, 1.0)
    d_t = reparam_partial(space, weight, params, seg, t)
    lhs = abs(d_t / (t * d_full) - 1.0)
    big_a = (1.0 - t) * grad_sup
    rhs = abs(a) * big_a * math.exp(abs(a) * big_a * r) * r
    return rhs - lhs


def tau_directional(space: ModelSpace, x, v) -> float:
    """Largest t with d(x, gamma_v(t)) = t; the model-space cut distance."""
    return space.tau(x, v)


def tau_reparam(space: ModelSpace, weight: WeightFunction,
                params: DimensionParams, x, v,
                rel_tol: float = 1e-10) -> float:
    """Re-parametrized length of the maximal minimizing ray from x along v.

    When the ray minimizes forever the improper integral is evaluated on
    a capped horizon of 1e3 if the integrand decays there, otherwise the
    value is reported as +inf. On the sphere it is the weighted length up
    to the antipode.
    """
    T = space.tau(x, v)
    a = params.a
    if math.isinf(T):
        if a == 0.0:
            return math.inf
        horizon = 1e3
        tail = math.exp(-a * float(weight.eval(space.geodesic(x, v, horizon))))
        if tail > 1e-12:
            return math.inf
        T = horizon
    elif a == 0.0:
        return T
    fn = lambda s: math.exp(-a * float(weight.eval(space.geodesic(x, v, s))))
    val, _ = adaptive_simpson(fn, 0.0, T, rel_tol=rel_tol)
    return val
