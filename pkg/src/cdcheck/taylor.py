"""Numerical verification of the small-delta expansions.

Each series check evaluates an exact quantity along a geodesic through x
with unit tangent v at symmetric offsets delta, subtracts the claimed
partial sum through the delta^2 term, and fits the remainder decay on a
log-log grid. A fitted slope of at least 2.8 certifies the O(delta^3)
remainder; identically vanishing remainders pass at the noise floor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .params import DimensionParams, s_kappa
from .quadrature import fit_loglog_slope
from .report import CheckReport
from .spaces import ModelSpace, WeightFunction, segment_between
from .reparam import asymmetry_bound_margin, reparam_partial

SLOPE_MIN = 2.8
NOISE_FLOOR = 5e-15

TERMS = ("app1_fwd", "app1_rev", "app1_full", "app2_fwd", "app2_rev",
         "app3_fwd", "app3_rev", "app4_fwd", "app4_rev", "app6")


@dataclass
class SeriesCheck:
    term: str
    deltas: np.ndarray
    exact: np.ndarray
    series: np.ndarray
    slope: float

    @property
    def remainder(self) -> np.ndarray:
        return self.exact - self.series

    @property
    def passed(self) -> bool:
        scale = 1.0 + np.abs(self.exact)
        if np.all(np.abs(self.remainder) <= NOISE_FLOOR * scale):
            return True
        return self.slope >= SLOPE_MIN

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["delta", "exact", "series", "remainder"])
            for d, e, s, r in zip(self.deltas, self.exact, self.series,
                                  self.remainder):
                w.writerow([f"{d:.17g}", f"{e:.17g}", f"{s:.17g}", f"{r:.17g}"])


def _pointwise_data(space, weight, params, x, v):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    fx = float(weight.eval(x))
    grad = np.asarray(weight.grad(x), dtype=float)
    gfv = float(space.inner(x, grad, v))
    hvv = float(weight.hess(x, v, v))
    return fx, gfv, hvv


def theta_eps(params: DimensionParams, gradf_v: float) -> float:
    """theta = -(1/(n-1)) (1/eps) (eps - eps0) g(grad f, v); needs eps != 0."""
    if params.eps == 0.0:
        raise PreconditionError("theta requires eps != 0", failed="eps != 0")
    if math.isinf(params.eps0):
        if gradf_v == 0.0:
            return 0.0
        raise PreconditionError("theta is undefined for N = n with a"
                                " non-vanishing weight gradient",
                                failed="finite eps0")
    return -(params.eps - params.eps0) * gradf_v / ((params.n - 1) * params.eps)


def _betas(space, weight, params, kappa, x, v, delta):
    """(beta_fwd, beta_rev) at the symmetric pair, tight quadrature."""
    yp = space.geodesic(x, v, delta)
    ym = space.geodesic(x, v, -delta)
    seg = segment_between(space, yp, ym)
    d_half = reparam_partial(space, weight, params, seg, 0.5, rel_tol=1e-13)
    d_full = reparam_partial(space, weight, params, seg, 1.0, rel_tol=1e-13)
    # reversed orientation: first half of the geodesic from gamma(-delta)
    d_half_rev = d_full - d_half
    log_sf = math.log(0.5 * s_kappa(kappa, d_full))
    b_fwd = math.exp(params.inv_c * (math.log(s_kappa(kappa, d_half)) - log_sf))
    b_rev = math.exp(params.inv_c * (math.log(s_kappa(kappa, d_half_rev)) - log_sf))
    return b_fwd, b_rev, d_half, d_half_rev, d_full


def check_series(space: ModelSpace, weight: WeightFunction,
                 params: DimensionParams, kappa: float, x, v,
                 term: str, grid=None) -> SeriesCheck:
    """Exact-versus-series comparison for one expansion term."""
    if term not in TERMS:
        raise PreconditionError(f"unknown series term: {term}", failed="term id")
    if grid is None:
        grid = [2.0 ** -k for k in range(4, 15)]
    deltas = np.asarray(sorted(grid, reverse=True), dtype=float)
    fx, gfv, hvv = _pointwise_data(space, weight, params, x, v)
    a = params.a
    alpha = 0.5 * a  # (1-eps)/(n-1)
    e0 = math.exp(-a * fx)
    kap_eff = params.inv_c * kappa * math.exp(-2.0 * a * fx)
    A = (2.0 * alpha**2 * gfv**2 / 3.0) - (alpha * hvv / 3.0)
    n = params.n

    exact = np.empty_like(deltas)
    series = np.empty_like(deltas)
    for i, d in enumerate(deltas):
        if term.startswith("app1"):
            yp = space.geodesic(x, v, d)
            ym = space.geodesic(x, v, -d)
            seg = segment_between(space, yp, ym)
            d_half = reparam_partial(space, weight, params, seg, 0.5,
                                     rel_tol=1e-13)
            d_full = reparam_partial(space, weight, params, seg, 1.0,
                                     rel_tol=1e-13)
            if term == "app1_fwd":
                exact[i] = d_half
                series[i] = e0 * d * (1.0 - alpha * gfv * d + A * d * d)
            elif term == "app1_rev":
                exact[i] = d_full - d_half
                series[i] = e0 * d * (1.0 + alpha * gfv * d + A * d * d)
            else:
                exact[i] = d_full
                series[i] = 2.0 * e0 * d * (1.0 + A * d * d)
        elif term.startswith("app2"):
            b_fwd, b_rev, *_ = _betas(space, weight, params, kappa, x, v, d)
            coef2 = kap_eff + (1.0 - params.c) * (params.inv_c * alpha * gfv) ** 2
            if term == "app2_fwd":
                exact[i] = b_fwd
                series[i] = (1.0 - params.inv_c * alpha * gfv * d
                             + 0.5 * coef2 * d * d)
            else:
                exact[i] = b_rev
                series[i] = (1.0 + params.inv_c * alpha * gfv * d
                             + 0.5 * coef2 * d * d)
        elif term.startswith("app3"):
            sign = -1.0 if term == "app3_fwd" else 1.0
            y = space.geodesic(x, v, sign * d)
            exact[i] = math.exp(-float(weight.eval(y)) + fx)
            lead = gfv if term == "app3_fwd" else -gfv
            series[i] = 1.0 + lead * d + 0.5 * (gfv**2 - hvv) * d * d
        elif term.startswith("app4"):
            th = theta_eps(params, gfv)
            sign = 1.0 if term == "app4_fwd" else -1.0
            exact[i] = (1.0 + sign * th * d) ** n
            series[i] = (1.0 + sign * n * th * d
                         + 0.5 * n * (n - 1) * th**2 * d * d)
        else:  # app6
            th = theta_eps(params, gfv)
            b_fwd, b_rev, *_ = _betas(space, weight, params, kappa, x, v, d)
            fp = float(weight.eval(space.geodesic(x, v, d)))
            fm = float(weight.eval(space.geodesic(x, v, -d)))
            cr = params.c_ratio
            left = (math.exp(-fm + fx) * (1.0 + th * d) ** n * b_fwd) ** cr
            right = (math.exp(-fp + fx) * (1.0 - th * d) ** n * b_rev) ** cr
            exact[i] = 0.5 * (left + right)
            F = f_of_theta(params, gfv, th)
            series[i] = 1.0 + cr * (kap_eff - hvv
                                    - F / (params.c + 1.0)) * 0.5 * d * d
    rem = exact - series
    scale = float(np.max(1.0 + np.abs(exact)))
    slope = fit_loglog_slope(deltas, rem, floor=NOISE_FLOOR * scale)
    return SeriesCheck(term=term, deltas=deltas, exact=exact, series=series,
                       slope=slope)


def f_of_theta(params: DimensionParams, gradf_v: float, theta: float) -> float:
    """F(theta) = n(n-(n-1)(c+1))theta^2 + 2n(alpha-c)g theta + (alpha^2+2alpha-c)g^2."""
    n, c = params.n, params.c
    alpha = (1.0 - params.eps) / (n - 1.0)
    g = gradf_v
    return (n * (n - (n - 1.0) * (c + 1.0)) * theta**2
            + 2.0 * n * (alpha - c) * g * theta
            + (alpha**2 + 2.0 * alpha - c) * g**2)


def check_F_identity(params: DimensionParams, gradf_v: float,
                     theta_grid, tol: float = 1e-10) -> CheckReport:
    """Algebraic identity tying F(theta) to the square completing the
    converse argument:

    F(theta) + (c+1) g^2/(N-n) = (n/eps0) (eps theta + (eps-eps0) g/(n-1))^2.
    """
    if params.N == params.n:
        raise PreconditionError("identity needs N != n", failed="N != n")
    if math.isinf(params.eps0):
        raise PreconditionError("identity needs finite eps0", failed="eps0 finite")
    n, c, eps, eps0 = params.n, params.c, params.eps, params.eps0
    g = gradf_v
    margins = []
    for th in theta_grid:
        lhs = f_of_theta(params, g, th)
        if not math.isinf(params.N):
            lhs += (c + 1.0) * g**2 / (params.N - n)
        rhs = (n / eps0) * (eps * th + (eps - eps0) * g / (n - 1.0)) ** 2
        margins.append(tol - abs(lhs - rhs))
    return CheckReport(name="F_identity", margins=margins, tolerance=0.0,
                       provenance={"gradf_v": gradf_v})


def check_limit_bound(space: ModelSpace, weight: WeightFunction,
                      params: DimensionParams, t: float, x, v,
                      r: float = 1.0, levels: int = 8,
                      grad_samples: int = 400, seed: int = 0) -> CheckReport:
    """Asymmetry bound on a shrinking pair sequence d(x,y) = r 2^{-j}.

    The gradient sup over the ball is estimated by dense sampling, which
    under-estimates the true sup and therefore only tightens the bound.
    """
    rng = np.random.default_rng(seed)
    sup = 0.0
    for _ in range(grad_samples):
        u = space.sample_unit(rng, x)
        s = r * rng.random()
        p = space.geodesic(x, u, s)
        gn = space.norm(p, np.asarray(weight.grad(p), dtype=float))
        sup = max(sup, gn)
    margins = []
    for j in range(levels):
        y = space.geodesic(x, v, r * 2.0**-j)
        seg = segment_between(space, x, y)
        margins.append(asymmetry_bound_margin(space, weight, params, seg,
                                              t, sup))
    return CheckReport(name="limit_bound", margins=margins, tolerance=1e-12,
                       provenance={"t": t, "r": r, "grad_sup": sup})
