"""Optimal transport and entropy functionals.

Two regimes are supported. Small discrete measures get an exact plan
from a linear program (min-cost flow formulation). Absolutely continuous
measures live on quasi-1D product configurations: either Euclidean R^n
with weight f(x) = f1(x_1) and densities depending on x_1 only (the
transverse factor is shared and the optimal map moves only the first
coordinate), or rotationally symmetric densities on the round 2-sphere
parametrized by colatitude. Both reduce to monotone CDF matching on an
axis grid with reference measure m = base * e^{-f1} / Z.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

from .errors import ConfigError, IntegrabilityError, SizeError
from .params import DimensionParams
from .quadrature import composite_simpson, cumulative_simpson, neville_extrapolate
from .report import CheckReport

MAX_SUPPORT = 512


# ----------------------------------------------------------------------
# discrete measures and exact plans
# ----------------------------------------------------------------------
@dataclass
class DiscreteMeasure:
    support: np.ndarray  # (m, ambient)
    weights: np.ndarray

    def __post_init__(self):
        self.support = np.atleast_2d(np.asarray(self.support, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise ConfigError("weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigError("weights must sum to 1")

    def to_json(self) -> str:
        return json.dumps({"points": self.support.tolist(),
                           "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        obj = json.loads(text)
        return cls(np.asarray(obj["points"]), np.asarray(obj["weights"]))


@dataclass
class TransportPlan:
    pairs: list  # (i, j, mass)
    cost: float

    @property
    def w2(self) -> float:
        return math.sqrt(max(self.cost, 0.0))


def solve_discrete_ot(mu: DiscreteMeasure, nu: DiscreteMeasure,
                      space=None, dist=None) -> TransportPlan:
    """Exact optimal plan for squared-distance cost.

    ``dist(x, y)`` defaults to the model-space distance. Uniform measures
    of equal size use the assignment solver; the general case is the
    transportation linear program (HiGHS).
    """
    m, k = len(mu.weights), len(nu.weights)
    if m > MAX_SUPPORT or k > MAX_SUPPORT:
        raise SizeError(f"support size exceeds {MAX_SUPPORT}")
    if dist is None:
        dist = space.distance
    cost = np.empty((m, k))
    for i in range(m):
        for j in range(k):
            cost[i, j] = dist(mu.support[i], nu.support[j]) ** 2

    uniform = (m == k and np.allclose(mu.weights, 1.0 / m, atol=1e-14)
               and np.allclose(nu.weights, 1.0 / k, atol=1e-14))
    if uniform:
        rows, cols = linear_sum_assignment(cost)
        pairs = [(int(i), int(j), 1.0 / m) for i, j in zip(rows, cols)]
        total = float(cost[rows, cols].sum() / m)
        return TransportPlan(pairs, total)

    # transportation LP: variables p_ij >= 0, row/col marginal equalities
    a_eq = []
    for i in range(m):
        row = np.zeros(m * k)
        row[i * k:(i + 1) * k] = 1.0
        a_eq.append(row)
    for j in range(k):
        col = np.zeros(m * k)
        col[j::k] = 1.0
        a_eq.append(col)
    b_eq = np.concatenate([mu.weights, nu.weights])
    res = linprog(cost.ravel(), A_eq=np.asarray(a_eq), b_eq=b_eq,
                  bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    plan = res.x.reshape(m, k)
    pairs = [(i, j, float(plan[i, j]))
             for i in range(m) for j in range(k) if plan[i, j] > 1e-12]
    total = float((plan * cost).sum())
    # marginal sanity
    if (np.abs(plan.sum(axis=1) - mu.weights).max() > 1e-10
            or np.abs(plan.sum(axis=0) - nu.weights).max() > 1e-10):
        raise RuntimeError("transport plan marginals drifted beyond 1e-10")
    return TransportPlan(pairs, total)


# ----------------------------------------------------------------------
# quasi-1D geometries
# ----------------------------------------------------------------------
class AxisGeometry:
    """Shared machinery for 1D-reducible configurations.

    The axis carries a uniform grid, the weight component f1, a base
    volume factor, and the normalized reference density m(x) so that
    integral rho * m dx = 1 characterizes a probability density rho
    relative to the reference measure.
    """

    def __init__(self, lo: float, hi: float, points: int, f1: Callable,
                 base: Callable, ambient_dim: int, kind: str,
                 tail_exponent: float | None = None):
        if points < 16:
            raise ConfigError("axis grid needs at least 16 points")
        self.lo, self.hi = float(lo), float(hi)
        self.xs = np.linspace(lo, hi, points)
        self.dx = self.xs[1] - self.xs[0]
        self.f1 = f1
        self.f_vals = np.asarray(f1(self.xs), dtype=float)
        if self.f_vals.shape != self.xs.shape:
            self.f_vals = np.full_like(self.xs, float(f1(self.xs[0])))
        self.base_vals = np.asarray(base(self.xs), dtype=float)
        self.ambient_dim = ambient_dim
        self.kind = kind
        self.tail_exponent = tail_exponent
        raw = self.base_vals * np.exp(-self.f_vals)
        self.mass_norm = composite_simpson(raw, self.dx)
        self.m_density = raw / self.mass_norm
        self._g_cache: dict[float, np.ndarray] = {}

    # geodesic distance between axis points
    def distance(self, x, y):
        return np.abs(np.asarray(y, dtype=float) - np.asarray(x, dtype=float))

    def _g_table(self, a: float) -> np.ndarray:
        """Antiderivative G(x) = int_lo^x e^{-a f1}; makes every d_t O(1)."""
        tab = self._g_cache.get(a)
        if tab is None:
            tab = cumulative_simpson(np.exp(-a * self.f_vals), self.dx)
            self._g_cache[a] = tab
        return tab

    def reparam_partial(self, params: DimensionParams, x, y, t):
        """d_t(x, y) along the axis geodesic, vectorized."""
        a = params.a
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if a == 0.0:
            return np.abs(t * (y - x))
        g = self._g_table(a)
        mid = x + t * (y - x)
        return np.abs(np.interp(mid, self.xs, g) - np.interp(x, self.xs, g))

    def f_at(self, x):
        return np.interp(x, self.xs, self.f_vals)

    def integrate(self, values) -> float:
        return composite_simpson(np.asarray(values, dtype=float), self.dx)

    def moment_condition_ok(self, params: DimensionParams) -> bool:
        """Remark-style integrability of (1 + d^2)^{-1/c} against m.

        Bounded-window geometries are always fine; a polynomial tail
        descriptor q (meaning m ~ |x|^{-q}) must satisfy q + 2/c > 1.
        """
        if self.tail_exponent is None:
            return True
        return self.tail_exponent + 2.0 * params.inv_c > 1.0


class LineGeometry(AxisGeometry):
    """Euclidean R^n with weight f(x) = f1(x_1), densities in x_1 only."""

    def __init__(self, f1: Callable, lo: float = -2.0, hi: float = 2.0,
                 points: int = 4096, ambient_dim: int = 2,
                 tail_exponent: float | None = None):
        if ambient_dim < 2:
            raise ConfigError("product configuration needs ambient dimension >= 2")
        super().__init__(lo, hi, points, f1, lambda x: np.ones_like(x),
                         ambient_dim, "line", tail_exponent)


class MeridianGeometry(AxisGeometry):
    """Rotationally symmetric densities on the unit 2-sphere.

    The axis is the colatitude in [0, pi]; the base factor sin(theta)
    is the surface-measure marginal; transport moves along meridians.
    """

    def __init__(self, f1: Callable = lambda th: np.zeros_like(th),
                 points: int = 4096):
        super().__init__(0.0, math.pi, points, f1, np.sin, 2, "meridian")


@dataclass
class DensityField:
    """Grid density relative to the geometry's reference measure."""

    geometry: AxisGeometry
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.geometry.xs.shape:
            raise ConfigError("density grid does not match the geometry grid")
        if np.any(self.values < -1e-12):
            raise ConfigError("density must be nonnegative")
        self.values = np.clip(self.values, 0.0, None)

    def mass(self) -> float:
        return self.geometry.integrate(self.values * self.geometry.m_density)

    def normalized(self) -> "DensityField":
        return DensityField(self.geometry, self.values / self.mass())

    def check_mass(self, tol: float = 1e-8) -> None:
        m = self.mass()
        if abs(m - 1.0) > tol:
            raise ConfigError(f"density mass {m} is not 1 within {tol}")

    def sup(self) -> float:
        return float(self.values.max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "rho"])
            for x, r in zip(self.geometry.xs, self.values):
                w.writerow([f"{x:.17g}", f"{r:.17g}"])


def density_from_callable(geometry: AxisGeometry, fn: Callable,
                          normalize: bool = True) -> DensityField:
    vals = np.clip(np.asarray(fn(geometry.xs), dtype=float), 0.0, None)
    d = DensityField(geometry, vals)
    return d.normalized() if normalize else d


# ----------------------------------------------------------------------
# monotone transport and displacement interpolation
# ----------------------------------------------------------------------
def _cdf(rho: DensityField) -> np.ndarray:
    g = rho.geometry
    cdf = cumulative_simpson(rho.values * g.m_density, g.dx)
    cdf = np.maximum.accumulate(cdf / cdf[-1])
    return np.clip(cdf, 0.0, 1.0)


def _quantile(cdf: np.ndarray, xs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Generalized inverse inf{x : cdf(x) >= u}, flat stretches included."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    idx = np.clip(np.searchsorted(cdf, u, side="left"), 1, cdf.size - 1)
    p0 = cdf[idx - 1]
    p1 = cdf[idx]
    gap = p1 - p0
    frac = np.where(gap > 0, (u - p0) / np.where(gap > 0, gap, 1.0), 1.0)
    out = xs[idx - 1] + np.clip(frac, 0.0, 1.0) * (xs[idx] - xs[idx - 1])
    # u = 0 sits in the flat head of the CDF; use the left support edge
    zero = u <= 0.0
    if np.any(zero):
        i0 = max(int(np.searchsorted(cdf, 0.0, side="right")) - 1, 0)
        out = np.where(zero, xs[i0], out)
    return out


class MonotoneInterpolation:
    """Displacement interpolation between two axis densities.

    Carries the monotone map T (sampled on the grid), its derivative
    from the Monge-Ampere identity, and produces the intermediate
    density both in pushforward coordinates (x-space, exact for
    integration by substitution) and re-sampled on the standard grid.
    """

    def __init__(self, rho0: DensityField, rho1: DensityField):
        if rho0.geometry is not rho1.geometry:
            raise ConfigError("densities must share one geometry")
        rho0.check_mass(1e-7)
        rho1.check_mass(1e-7)
        self.g = rho0.geometry
        self.rho0 = rho0
        self.rho1 = rho1
        xs = self.g.xs
        cdf0 = _cdf(rho0)
        cdf1 = _cdf(rho1)
        self.T = _quantile(cdf1, xs, cdf0)
        # Monge-Ampere: T'(x) = rho0(x) m(x) / (rho1(T(x)) m(T(x)))
        num = rho0.values * self.g.m_density
        den = (np.interp(self.T, xs, rho1.values)
               * np.interp(self.T, xs, self.g.m_density))
        with np.errstate(divide="ignore", invalid="ignore"):
            tp = np.where(num > 0, num / den, 1.0)
        self.Tprime = np.where(np.isfinite(tp), tp, 1.0)

    def map_at(self, t: float) -> np.ndarray:
        return (1.0 - t) * self.g.xs + t * self.T

    def map_deriv(self, t: float) -> np.ndarray:
        return (1.0 - t) + t * self.Tprime

    def density_along(self, t: float) -> np.ndarray:
        """rho_t evaluated at F_t(x), indexed by the source grid x."""
        if t == 0.0:
            return self.rho0.values.copy()
        if t == 1.0:
            return np.interp(self.T, self.g.xs, self.rho1.values)
        ft = self.map_at(t)
        m_ft = np.interp(ft, self.g.xs, self.g.m_density)
        num = self.rho0.values * self.g.m_density
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = num / (m_ft * self.map_deriv(t))
        return np.where(num > 0, rho, 0.0)

    def density_at(self, t: float) -> DensityField:
        """rho_t re-sampled on the standard grid (for entropy by grid quadrature)."""
        if t == 0.0:
            return self.rho0
        if t == 1.0:
            return self.rho1
        ft = self.map_at(t)
        vals_along = self.density_along(t)
        on_grid = np.interp(self.g.xs, ft, vals_along, left=0.0, right=0.0)
        return DensityField(self.g, on_grid)

    def pushforward_integral(self, t: float, integrand_of_rho) -> float:
        """integral of integrand(rho_t) d m by substitution y = F_t(x).

        Avoids any re-sampling error: the weight m(F_t) F_t' dx is exact
        up to quadrature on the source grid.
        """
        ft = self.map_at(t)
        m_ft = np.interp(ft, self.g.xs, self.g.m_density)
        jac = self.map_deriv(t)
        rho = self.density_along(t)
        support = self.rho0.values * self.g.m_density > 0
        vals = np.where(support, integrand_of_rho(rho) * m_ft * jac, 0.0)
        return self.g.integrate(vals)


def monotone_1d_transport(rho0: DensityField, rho1: DensityField) -> MonotoneInterpolation:
    return MonotoneInterpolation(rho0, rho1)


def w2_axis(rho0: DensityField, rho1: DensityField,
            sizes=(128, 256, 512)) -> float:
    """W2 between axis densities by equal-mass quantization.

    Each measure is reduced to m quantile points, matched monotonically
    (optimal in 1D); the midpoint-rule costs are Richardson-extrapolated
    in 1/m^2 over the given sizes.
    """
    xs = rho0.geometry.xs
    cdf0 = _cdf(rho0)
    cdf1 = _cdf(rho1)
    costs, hs = [], []
    for m in sizes:
        u = (np.arange(m) + 0.5) / m
        q0 = _quantile(cdf0, xs, u)
        q1 = _quantile(cdf1, xs, u)
        costs.append(float(np.mean((q0 - q1) ** 2)))
        hs.append(1.0 / m**2)
    cost = neville_extrapolate(hs, costs, at=0.0)
    return math.sqrt(max(cost, 0.0))


# ----------------------------------------------------------------------
# entropies, DC membership, Fisher information
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class EntropyValue:
    functional: str
    value: float


def renyi_pointwise(r: np.ndarray, params: DimensionParams) -> np.ndarray:
    """H(r) = c^{-1}(c+1) r (1 - r^{-c/(c+1)}) = ((c+1)/c)(r - r^{1/(c+1)})."""
    r = np.asarray(r, dtype=float)
    coef = (params.c + 1.0) / params.c
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = coef * (r[pos] - r[pos] ** (1.0 / (params.c + 1.0)))
    return out


def entropy_functional(rho: DensityField, params: DimensionParams,
                       functional: str = "renyi") -> EntropyValue:
    """U_m(mu) = integral of U(rho) d m on the grid."""
    g = rho.geometry
    if functional == "renyi":
        vals = renyi_pointwise(rho.values, params)
    elif functional == "rlogr":
        if not g.moment_condition_ok(params):
            raise IntegrabilityError(
                "reference measure fails the (1+d^2)^{-1/c} moment condition")
        r = rho.values
        vals = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0)
    else:
        raise ConfigError(f"unknown entropy functional: {functional}")
    return EntropyValue(functional, g.integrate(vals * g.m_density))


def dc_membership(U: Callable[[float], float], params: DimensionParams,
                  r_lo: float = 1e-6, r_hi: float = 1e6,
                  points: int = 241, tol: float = 1e-8) -> CheckReport:
    """Numerical membership test for the displacement convexity class.

    Checks U(0) = 0, convexity of U, and convexity of
    phi(r) = r^{(c+1)/c} U(r^{-(c+1)/c}) by second divided differences on
    a log-spaced grid, each scaled by the local function magnitude.
    """
    rs = np.geomspace(r_lo, r_hi, points)
    u_vals = np.array([float(U(r)) for r in rs])
    margins = [tol - abs(float(U(0.0)))]

    def convexity_margins(xs, ys):
        s = np.diff(ys) / np.diff(xs)
        d2 = 2.0 * np.diff(s) / (xs[2:] - xs[:-2])
        scale = 1.0 + np.abs(ys[1:-1]) / np.maximum(xs[1:-1] ** 2, 1e-30)
        return d2 / scale

    margins.extend(float(v) for v in convexity_margins(rs, u_vals))
    p = (params.c + 1.0) / params.c
    phi_arg = rs ** (-p)
    phi = rs ** p * np.array([float(U(v)) for v in phi_arg])
    margins.extend(float(v) for v in convexity_margins(rs, phi))
    return CheckReport(name="dc_membership", margins=margins, tolerance=tol,
                       provenance={"r_lo": r_lo, "r_hi": r_hi, "points": points})


def fisher_information(rho: DensityField, params: DimensionParams) -> float:
    """I_m(mu) = integral of |grad rho^{1/(c+1)}|^2 / rho d m.

    Central differences on the grid; vanishing-density points contribute
    0 when the root's gradient also vanishes there, +inf otherwise.
    """
    g = rho.geometry
    p = 1.0 / (params.c + 1.0)
    root = rho.values ** p
    grad = np.gradient(root, g.dx)
    tiny = rho.values < 1e-12
    if np.any(tiny & (np.abs(grad) >= 1e-12)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(tiny, 0.0, grad**2 / np.where(tiny, 1.0, rho.values))
    return g.integrate(integrand * g.m_density)
