"""Twisted distortion coefficients and their small-t / small-distance limits.

beta_{kappa,t}(x,y) = (s_kappa(d_t(x,y)) / (t s_kappa(d_f(x,y))))^{1/c}
with d_t the partial re-parametrized distance. The companion scalars are

    b(x,y)   = (e^{-a f(x)} d(x,y) / s_kappa(d_f(x,y)))^{1/c}
    bfrak(x,y) = (1/(c+1)) (e^{-a f(x)} d(x,y) c_kappa(d_f)/s_kappa(d_f) - 1)

which arise as the t -> 0 limits of beta_t(x,y) and of
(1 - beta_{1-t}(y,x)^{c/(c+1)})/t respectively.

All powers are taken in log space since 1/c can be large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DimensionParams, c_kappa, diam_kappa, s_kappa
from .quadrature import neville_extrapolate
from .report import CheckReport
from .spaces import ModelSpace, WeightFunction, segment_between
from .reparam import reparam_partial

# distances within this of C_kappa count as past the conjugate radius
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class TwistedCoefficient:
    value: float  # in ]0, +inf]
    regime: str  # "unit" | "finite" | "infinite"

    def power(self, exponent: float) -> float:
        """value**exponent, stable in log space; +inf stays +inf."""
        if self.regime == "infinite":
            return math.inf
        if self.regime == "unit":
            return 1.0
        return math.exp(exponent * math.log(self.value))


def _classify(d_f: float, kappa: float) -> str:
    if d_f == 0.0:
        return "unit"
    if d_f >= diam_kappa(kappa) - BOUNDARY_TOL:
        return "infinite"
    return "finite"


def beta(space: ModelSpace, weight: WeightFunction, params: DimensionParams,
         kappa: float, t: float, x, y) -> TwistedCoefficient:
    """Twisted coefficient beta_{kappa,t}(x,y) for t in ]0,1[."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in ]0,1[, got {t}")
    seg = segment_between(space, x, y)
    if seg.length == 0.0:
        return TwistedCoefficient(1.0, "unit")
    d_full = reparam_partial(space, weight, params, seg, 1.0)
    regime = _classify(d_full, kappa)
    if regime != "finite":
        return TwistedCoefficient(math.inf, "infinite")
    d_t = reparam_partial(space, weight, params, seg, t)
    log_ratio = math.log(s_kappa(kappa, d_t)) - math.log(t * s_kappa(kappa, d_full))
    return TwistedCoefficient(math.exp(params.inv_c * log_ratio), "finite")


def beta_from_partials(params: DimensionParams, kappa: float, t: float,
                       d_t: float, d_full: float) -> TwistedCoefficient:
    """beta from precomputed re-parametrized distances (grid pipelines)."""
    if d_full == 0.0:
        return TwistedCoefficient(1.0, "unit")
    regime = _classify(d_full, kappa)
    if regime != "finite":
        return TwistedCoefficient(math.inf, "infinite")
    log_ratio = math.log(s_kappa(kappa, d_t)) - math.log(t * s_kappa(kappa, d_full))
    return TwistedCoefficient(math.exp(params.inv_c * log_ratio), "finite")


def beta_power_array(params: DimensionParams, kappa: float, ts, d_ts, d_full,
                     exponent: float) -> np.ndarray:
    """Vectorized beta_t^{exponent} over a grid of fractions and partials.

    Finite regime required; callers classify first.
    """
    ts = np.asarray(ts, dtype=float)
    d_ts = np.asarray(d_ts, dtype=float)
    log_ratio = np.log(s_kappa(kappa, d_ts)) - np.log(ts * s_kappa(kappa, d_full))
    return np.exp(exponent * params.inv_c * log_ratio)


def classical_distortion(kappa: float, N: float, t: float, theta: float) -> float:
    """Unweighted distortion (s_K(t theta)/(t s_K(theta)))^{N-1}, K = kappa.

    Reference implementation for the eps = 1 reduction.
    """
    if theta == 0.0:
        return 1.0
    if theta >= diam_kappa(kappa) - BOUNDARY_TOL:
        return math.inf
    return math.exp((N - 1.0) * (math.log(s_kappa(kappa, t * theta))
                                 - math.log(t * s_kappa(kappa, theta))))


def b_coeff(space, weight, params, kappa: float, x, y) -> float:
    """Small-t limit of beta_t(x,y); 1 at x = y, +inf past the conjugate radius."""
    seg = segment_between(space, x, y)
    if seg.length == 0.0:
        return 1.0
    d_f = reparam_partial(space, weight, params, seg, 1.0)
    if _classify(d_f, kappa) != "finite":
        return math.inf
    fx = float(weight.eval(seg.start))
    log_ratio = -params.a * fx + math.log(seg.length) - math.log(s_kappa(kappa, d_f))
    return math.exp(params.inv_c * log_ratio)


def frak_b(space, weight, params, kappa: float, x, y) -> float:
    """Small-t limit of (1 - beta_{1-t}(y,x)^{c/(c+1)})/t; 0 at x = y."""
    seg = segment_between(space, x, y)
    if seg.length == 0.0:
        return 0.0
    d_f = reparam_partial(space, weight, params, seg, 1.0)
    if _classify(d_f, kappa) != "finite":
        return math.inf
    fx = float(weight.eval(seg.start))
    ratio = math.exp(-params.a * fx) * seg.length * c_kappa(kappa, d_f) / s_kappa(kappa, d_f)
    return (ratio - 1.0) / (params.c + 1.0)


def check_limits(space, weight, params, kappa: float, x, y,
                 t_grid, tol: float = 1e-6) -> CheckReport:
    """Verify the t -> 0 limits of beta against b and bfrak by extrapolation,
    and the small-distance decay |beta_t - 1| = O(d(x,y))."""
    t_grid = sorted(float(t) for t in t_grid)
    seg = segment_between(space, x, y)
    margins = []
    provenance = {"kappa": kappa, "t_grid": t_grid}

    # limit 1: beta_t(x, y) -> b(x, y)
    b_target = b_coeff(space, weight, params, kappa, x, y)
    vals = [beta(space, weight, params, kappa, t, x, y).value for t in t_grid]
    b_extrap = neville_extrapolate(t_grid, vals, at=0.0)
    margins.append(tol - abs(b_extrap - b_target))
    provenance["b_limit"] = {"target": b_target, "extrapolated": b_extrap}

    # limit 2: (1 - beta_{1-t}(y, x)^{c/(c+1)})/t -> bfrak(x, y)
    fb_target = frak_b(space, weight, params, kappa, x, y)
    cr = params.c_ratio
    quots = [(1.0 - beta(space, weight, params, kappa, 1.0 - t, y, x).power(cr)) / t
             for t in t_grid]
    fb_extrap = neville_extrapolate(t_grid, quots, at=0.0)
    margins.append(tol - abs(fb_extrap - fb_target))
    provenance["frak_b_limit"] = {"target": fb_target, "extrapolated": fb_extrap}

    # limit 3: |beta_t - 1| -> 0 at least linearly in d(x,y). The linear
    # rate comes from the asymmetry of the re-parametrized distance,
    # |d_t/(t d_f) - 1| <= |a| A e^{|a| A r} d(x,y) with
    # A = (1-t) sup||grad f||; curvature adds a quadratic correction.
    t_mid = 0.5
    r = seg.length
    rng = np.random.default_rng(12345)
    grad_sup = 0.0
    for _ in range(200):
        s = rng.uniform(0.0, r)
        pt = space.geodesic(seg.start, seg.direction, s)
        grad_sup = max(grad_sup, float(np.linalg.norm(weight.grad(pt))))
    aa = abs(params.a)
    B = aa * (1.0 - t_mid) * grad_sup * math.exp(
        aa * (1.0 - t_mid) * grad_sup * r) * 2.0
    decay_rows = []
    decay_margin = math.inf
    for k in range(6):
        dk = seg.length * 0.5**k
        yk = space.geodesic(seg.start, seg.direction, dk)
        bk = beta(space, weight, params, kappa, t_mid, seg.start, yk)
        dev = abs(bk.value - 1.0)
        # conservative envelope: linear asymmetry term plus curvature term
        lim = math.expm1(params.inv_c * (B * dk + abs(kappa) * dk * dk / 3.0))
        decay_rows.append({"d": dk, "dev": dev, "bound": lim})
        decay_margin = min(decay_margin, lim - dev + 1e-12)
    margins.append(float(decay_margin))
    provenance["decay"] = decay_rows

    return CheckReport(name="coefficient_limits", margins=margins,
                       tolerance=0.0, provenance=provenance)
