"""End-to-end inequality checks on quasi-1D configurations.

Everything here consumes axis geometries from the transport module: the
displacement convexity condition with twisted coefficients, the weighted
Brunn-Minkowski inequality, the p-mean interpolation family, and the
functional inequalities (HWI, log-Sobolev, transport-energy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError, PreconditionError, RegionError
from .params import DimensionParams, c_kappa, diam_kappa, s_kappa
from .ot import (AxisGeometry, DensityField, MonotoneInterpolation,
                 entropy_functional, fisher_information,
                 monotone_1d_transport, renyi_pointwise, w2_axis)
from .report import CheckReport


# ----------------------------------------------------------------------
# shared helpers
# ----------------------------------------------------------------------
def _beta_power(params: DimensionParams, kappa: float, d_part, d_full,
                frac, exponent: float = 1.0) -> np.ndarray:
    """(s_k(d_part)/(frac * s_k(d_full)))^{exponent/c}, elementwise; 1 at d_full=0."""
    d_part = np.asarray(d_part, dtype=float)
    d_full = np.asarray(d_full, dtype=float)
    pos = d_full > 0
    out = np.ones(np.broadcast(d_part, d_full).shape)
    lp = np.log(s_kappa(kappa, d_part[pos]))
    lf = np.log(np.asarray(frac * s_kappa(kappa, d_full))[pos] if np.ndim(frac) else
                frac * s_kappa(kappa, d_full[pos]))
    out[pos] = np.exp(exponent * params.inv_c * (lp - lf))
    return out


def geometry_curvature_margin(geometry: AxisGeometry,
                              params: DimensionParams, kappa: float) -> float:
    """Worst-case margin of Ric_f^N >= c^{-1} kappa e^{-4(1-eps)f/(n-1)}
    over the geometry's window.

    Line geometry: f = f1(x_1) in flat space, so for a unit vector v the
    weighted Ricci is s (f1'' - f1'^2/(N-n)) with s = v_1^2 in [0, 1].
    Meridian geometry requires constant f (round-sphere Ricci is 1).
    """
    f = geometry.f_vals
    rhs = params.inv_c * kappa * np.exp(-2.0 * params.a * f)
    constant = np.ptp(f) < 1e-12
    if geometry.kind == "meridian":
        if not constant:
            raise PreconditionError(
                "curvature margin on the sphere needs a constant weight",
                failed="constant weight")
        return float(np.min(1.0 - rhs))
    if constant:
        return float(np.min(-rhs))
    fp = np.gradient(f, geometry.dx)
    fpp = np.gradient(fp, geometry.dx)
    drift = fpp if math.isinf(params.N) else fpp - fp**2 / (params.N - params.n)
    ric_min = np.minimum(drift, 0.0)  # minimized over the direction split
    # central differences smear the endpoints; drop two points per side
    return float(np.min((ric_min - rhs)[2:-2]))


def _require_curvature(geometry, params, kappa):
    margin = geometry_curvature_margin(geometry, params, kappa)
    if margin < 0.0:
        raise PreconditionError(
            f"curvature bound fails on the window (margin {margin:.3e})",
            failed="curvature bound")
    return margin


def _u_pointwise(functional: str, r: np.ndarray, params: DimensionParams):
    r = np.asarray(r, dtype=float)
    if functional == "renyi":
        return renyi_pointwise(r, params)
    if functional == "rlogr":
        return np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0)
    raise PreconditionError(f"unknown functional id: {functional}",
                            failed="functional id")


# ----------------------------------------------------------------------
# displacement convexity
# ----------------------------------------------------------------------
def check_twcd(rho0: DensityField, rho1: DensityField,
               params: DimensionParams, kappa: float, t_grid,
               functional: str = "renyi", tol: float = 1e-6,
               require_curvature: bool = True) -> CheckReport:
    """Twisted displacement convexity along the monotone interpolation.

    For each t the margin is RHS(t) - U_m(mu_t) with the beta-weighted
    right-hand side evaluated through the deterministic coupling
    pi = (id x T)_# mu_0.
    """
    g = rho0.geometry
    curv = geometry_curvature_margin(g, params, kappa) if require_curvature else None
    if require_curvature and curv < 0.0:
        raise PreconditionError(
            f"curvature bound fails on the window (margin {curv:.3e})",
            failed="curvature bound")
    interp = monotone_1d_transport(rho0, rho1)
    xs = g.xs
    T = interp.T
    d_full = g.reparam_partial(params, xs, T, 1.0)
    if np.any(d_full >= diam_kappa(kappa) - 1e-12):
        raise PreconditionError(
            "re-parametrized distance reaches the conjugate radius",
            failed="d_f < C_kappa")
    support = rho0.values * g.m_density > 0
    rho1_at_T = np.interp(T, xs, rho1.values)

    margins = []
    per_t = []
    for t in sorted(float(v) for v in t_grid):
        lhs = interp.pushforward_integral(
            t, lambda r: _u_pointwise(functional, r, params))
        d_t = g.reparam_partial(params, xs, T, t)
        b_fwd = _beta_power(params, kappa, d_t, d_full, t)
        b_rev = _beta_power(params, kappa, d_full - d_t, d_full, 1.0 - t)
        u0 = _u_pointwise(functional,
                          np.where(support, rho0.values / b_rev, 0.0), params)
        term0 = g.integrate(np.where(support, u0 * b_rev * g.m_density, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            u1 = _u_pointwise(functional,
                              np.where(rho1_at_T > 0, rho1_at_T / b_fwd, 0.0),
                              params)
            w1 = np.where(support & (rho1_at_T > 0),
                          u1 * b_fwd / np.where(rho1_at_T > 0, rho1_at_T, 1.0)
                          * rho0.values * g.m_density, 0.0)
        term1 = g.integrate(w1)
        rhs = (1.0 - t) * term0 + t * term1
        margins.append(rhs - lhs)
        per_t.append({"t": t, "lhs": lhs, "rhs": rhs, "margin": rhs - lhs})

    return CheckReport(name="twcd", margins=margins, tolerance=tol,
                       provenance={"kappa": kappa, "functional": functional,
                                   "curvature_margin": curv, "rows": per_t})


# ----------------------------------------------------------------------
# Brunn-Minkowski
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class RegionPair:
    """Two regions plus an interpolation parameter.

    Supported region dicts: {"kind": "interval", "bounds": (a, b)} on an
    axis geometry, or {"kind": "ball", "center": ..., "radius": r} in
    unweighted Euclidean space.
    """

    X: dict
    Y: dict
    t: float


def _interval_measure(geometry: AxisGeometry, lo: float, hi: float) -> float:
    from .quadrature import cumulative_simpson

    tab = getattr(geometry, "_m_cumulative", None)
    if tab is None:
        tab = cumulative_simpson(geometry.m_density, geometry.dx)
        geometry._m_cumulative = tab
    a, b = min(lo, hi), max(lo, hi)
    return float(np.interp(b, geometry.xs, tab) - np.interp(a, geometry.xs, tab))


def _inf_beta_powers(geometry, params, kappa, xlo, xhi, ylo, yhi, t, k):
    """Sampled infima of beta_{1-t}(y,x)^{c/(c+1)} and beta_t(x,y)^{c/(c+1)}
    over the interval product, on a k x k grid."""
    xg = np.linspace(xlo, xhi, k)
    yg = np.linspace(ylo, yhi, k)
    X, Y = np.meshgrid(xg, yg, indexing="ij")
    d_full = geometry.reparam_partial(params, X.ravel(), Y.ravel(), 1.0)
    if np.any(d_full >= diam_kappa(kappa) - 1e-12):
        raise PreconditionError("region pair reaches the conjugate radius",
                                failed="d_f < C_kappa")
    d_t = geometry.reparam_partial(params, X.ravel(), Y.ravel(), t)
    cr = params.c / (params.c + 1.0)
    fwd = _beta_power(params, kappa, d_t, d_full, t, exponent=cr)
    rev = _beta_power(params, kappa, d_full - d_t, d_full, 1.0 - t, exponent=cr)
    return float(rev.min()), float(fwd.min())


def check_brunn_minkowski(pair: RegionPair, geometry_or_space, weight_or_none,
                          params: DimensionParams, kappa: float,
                          samples: int = 64, tol: float = 1e-6) -> CheckReport:
    """Weighted Brunn-Minkowski with sampled coefficient infima.

    m(Z_t)^{c/(c+1)} >= (1-t) (inf beta_{1-t})^{c/(c+1)} m(X)^{c/(c+1)}
                        + t (inf beta_t)^{c/(c+1)} m(Y)^{c/(c+1)}.
    """
    t = pair.t
    cr = params.c / (params.c + 1.0)
    kx, ky = pair.X.get("kind"), pair.Y.get("kind")
    if kx == ky == "interval":
        g: AxisGeometry = geometry_or_space
        xlo, xhi = pair.X["bounds"]
        ylo, yhi = pair.Y["bounds"]
        m_x = _interval_measure(g, xlo, xhi)
        m_y = _interval_measure(g, ylo, yhi)
        m_z = _interval_measure(g, (1 - t) * xlo + t * ylo,
                                (1 - t) * xhi + t * yhi)
        rev, fwd = _inf_beta_powers(g, params, kappa, xlo, xhi, ylo, yhi,
                                    t, samples)
        rev2, fwd2 = _inf_beta_powers(g, params, kappa, xlo, xhi, ylo, yhi,
                                      t, 2 * samples)
        refine_drift = max(abs(rev - rev2), abs(fwd - fwd2))
        rev, fwd = rev2, fwd2
    elif kx == ky == "ball":
        space = geometry_or_space
        if weight_or_none is not None and not weight_or_none.is_constant:
            raise RegionError("ball regions support constant weights only")
        f0 = float(weight_or_none.eval(np.zeros(space.dim))) if weight_or_none else 0.0
        c0 = np.asarray(pair.X.get("center", np.zeros(space.dim)), dtype=float)
        c1 = np.asarray(pair.Y.get("center", np.zeros(space.dim)), dtype=float)
        r0, r1 = pair.X["radius"], pair.Y["radius"]
        n = space.dim
        omega = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
        scale = math.exp(-f0)
        m_x = scale * omega * r0**n
        m_y = scale * omega * r1**n
        m_z = scale * omega * ((1 - t) * r0 + t * r1) ** n
        rev, fwd, refine_drift = _inf_beta_balls(space, params, kappa, f0,
                                                 c0, r0, c1, r1, t, samples)
    else:
        raise RegionError(f"unsupported region kinds: {kx}, {ky}")

    lhs = m_z**cr
    rhs = (1 - t) * rev * m_x**cr + t * fwd * m_y**cr
    margin = (lhs - rhs) / (1.0 + abs(rhs))
    return CheckReport(name="brunn_minkowski", margins=[margin], tolerance=tol,
                       provenance={"kappa": kappa, "t": t,
                                   "measures": {"X": m_x, "Y": m_y, "Z": m_z},
                                   "inf_beta_refine_drift": refine_drift})


def _inf_beta_balls(space, params, kappa, f0, c0, r0, c1, r1, t, samples):
    """Monte Carlo infima of the beta powers over a Euclidean ball pair."""
    rng = np.random.default_rng(1234)
    cr = params.c / (params.c + 1.0)
    scale = math.exp(-params.a * f0)
    vals = []
    for count in (samples**2, 4 * samples**2):
        n = space.dim
        u = rng.normal(size=(count, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        xs = c0 + r0 * rng.random((count, 1)) ** (1.0 / n) * u
        u = rng.normal(size=(count, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        ys = c1 + r1 * rng.random((count, 1)) ** (1.0 / n) * u
        d = np.linalg.norm(xs - ys, axis=1) * scale
        if np.any(d >= diam_kappa(kappa) - 1e-12):
            raise PreconditionError("ball pair reaches the conjugate radius",
                                    failed="d_f < C_kappa")
        fwd = _beta_power(params, kappa, t * d, d, t, exponent=cr)
        rev = _beta_power(params, kappa, (1 - t) * d, d, 1 - t, exponent=cr)
        vals.append((float(rev.min()), float(fwd.min())))
    drift = max(abs(vals[0][0] - vals[1][0]), abs(vals[0][1] - vals[1][1]))
    return vals[1][0], vals[1][1], drift


# ----------------------------------------------------------------------
# p-mean interpolation
# ----------------------------------------------------------------------
def p_mean(a: float, b: float, t: float, p: float) -> float:
    if p == math.inf:
        return max(a, b)
    if p == -math.inf:
        return min(a, b)
    if a <= 0.0 or b <= 0.0:
        return 0.0
    if p == 0.0:
        return a ** (1.0 - t) * b**t
    return ((1.0 - t) * a**p + t * b**p) ** (1.0 / p)


def conclusion_exponent(p: float, params: DimensionParams) -> float:
    """c p / ((1+c) p + c), with the boundary p = -c/(c+1) sent to -inf."""
    c = params.c
    den = (1.0 + c) * p + c
    if abs(den) < 1e-15:
        return -math.inf
    return c * p / den


def check_interpolation(geometry: AxisGeometry, params: DimensionParams,
                        kappa: float, psi0, psi1, psi, X: tuple, Y: tuple,
                        t: float, p: float, samples: int = 10000,
                        seed: int = 0, tol: float = 1e-6) -> CheckReport:
    """p-mean interpolation inequality on the axis.

    The pointwise hypothesis is sampled on random (x, y) in X x Y with
    z the exact geodesic t-point; HypothesisError aborts the check if it
    fails, otherwise the integral conclusion margin is reported.
    """
    if p < -params.c / (params.c + 1.0) - 1e-15:
        raise PreconditionError("p must be >= -c/(c+1)", failed="p range")
    _require_curvature(geometry, params, kappa)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(X[0], X[1], samples)
    ys = rng.uniform(Y[0], Y[1], samples)
    zs = (1.0 - t) * xs + t * ys
    d_full = geometry.reparam_partial(params, xs, ys, 1.0)
    if np.any(d_full >= diam_kappa(kappa) - 1e-12):
        raise PreconditionError("pair reaches the conjugate radius",
                                failed="d_f < C_kappa")
    d_t = geometry.reparam_partial(params, xs, ys, t)
    b_fwd = _beta_power(params, kappa, d_t, d_full, t)
    b_rev = _beta_power(params, kappa, d_full - d_t, d_full, 1.0 - t)
    p0 = np.asarray(psi0(xs), dtype=float)
    p1 = np.asarray(psi1(ys), dtype=float)
    pz = np.asarray(psi(zs), dtype=float)
    hyp = np.array([p_mean(a, b, t, p)
                    for a, b in zip(p0 / b_rev, p1 / b_fwd)])
    worst = float(np.min(pz - hyp))
    if worst < -1e-9 * (1.0 + float(np.max(np.abs(hyp)))):
        raise HypothesisError(
            f"pointwise p-mean hypothesis fails (worst margin {worst:.3e})")

    g = geometry
    i0 = g.integrate(np.asarray(psi0(g.xs), dtype=float) * g.m_density)
    i1 = g.integrate(np.asarray(psi1(g.xs), dtype=float) * g.m_density)
    iz = g.integrate(np.asarray(psi(g.xs), dtype=float) * g.m_density)
    q = conclusion_exponent(p, params)
    rhs = p_mean(i0, i1, t, q)
    margin = (iz - rhs) / (1.0 + abs(rhs))
    return CheckReport(name="interpolation", margins=[margin], tolerance=tol,
                       provenance={"kappa": kappa, "t": t, "p": p, "q": q,
                                   "integrals": {"psi0": i0, "psi1": i1,
                                                 "psi": iz},
                                   "hypothesis_worst": worst})


# ----------------------------------------------------------------------
# functional inequalities
# ----------------------------------------------------------------------
def _functional_preconditions(rho: DensityField, params: DimensionParams,
                              kappa: float, delta: float | None):
    g = rho.geometry
    if kappa <= 0.0:
        raise PreconditionError("kappa must be positive", failed="kappa > 0")
    if np.ptp(g.f_vals) > 1e-12:
        raise PreconditionError(
            "the m-constant hypothesis is only verifiable for constant"
            " weights; got a non-constant weight",
            failed="m-constant")
    f0 = float(g.f_vals[0])
    if delta is not None:
        if (1.0 - params.eps) * f0 > (params.n - 1.0) * delta + 1e-12:
            raise PreconditionError("(1-eps) f <= (n-1) delta fails",
                                    failed="delta bound")
    _require_curvature(g, params, kappa)
    rho.check_mass(1e-7)
    return f0


def check_hwi_lsi(rho: DensityField, params: DimensionParams, kappa: float,
                  delta: float, tol: float = 1e-5) -> CheckReport:
    """HWI and log-Sobolev margins for mu = rho m against m itself."""
    g = rho.geometry
    _functional_preconditions(rho, params, kappa, delta)
    ones = DensityField(g, np.ones_like(g.xs))
    H = entropy_functional(rho, params, "renyi").value
    I = fisher_information(rho, params)
    W2 = w2_axis(rho, ones)
    cr = params.c / (params.c + 1.0)
    sup = rho.sup()
    amp = 1.0 + 2.0 * sup ** (-cr)
    hwi_rhs = math.sqrt(I) * W2 - kappa * math.exp(-4.0 * delta) / (6.0 * params.c) * amp * W2**2
    lsi_rhs = 3.0 * params.c / (amp * 2.0 * kappa * math.exp(-4.0 * delta)) * I
    margins = [hwi_rhs - H, lsi_rhs - H]
    return CheckReport(name="hwi_lsi", margins=margins, tolerance=tol,
                       provenance={"kappa": kappa, "delta": delta,
                                   "H": H, "I": I, "W2": W2,
                                   "sup_rho": sup})


def check_transport_energy(rho: DensityField, params: DimensionParams,
                           kappa: float, tol: float = 1e-5) -> CheckReport:
    """Transport-energy lower bound on the entropy of mu = rho m.

    The optimal coupling of (mu, m) is the monotone map; the b-type
    coefficients are evaluated on its graph.
    """
    g = rho.geometry
    f0 = _functional_preconditions(rho, params, kappa, None)
    ones = DensityField(g, np.ones_like(g.xs))
    interp = monotone_1d_transport(rho, ones)
    H = entropy_functional(rho, params, "renyi").value
    c = params.c
    ratio = (c + 1.0) / c

    p13 = rho.values ** (1.0 / (c + 1.0))
    log_term = g.integrate(np.where(rho.values > 0,
                                    p13 * np.log(np.where(rho.values > 0,
                                                          rho.values, 1.0)),
                                    0.0) * g.m_density)

    d_f = g.reparam_partial(params, g.xs, interp.T, 1.0)
    if np.any(d_f >= diam_kappa(kappa) - 1e-12):
        raise PreconditionError("coupling reaches the conjugate radius",
                                failed="d_f < C_kappa")
    base = math.exp(-params.a * f0) * np.abs(interp.T - g.xs)
    pos = d_f > 0
    b_pow = np.ones_like(d_f)  # b^{c/(c+1)} with the unit value at the diagonal
    b_pow[pos] = np.exp((np.log(base[pos]) - np.log(s_kappa(kappa, d_f[pos])))
                        / (c + 1.0))
    frak = np.zeros_like(d_f)
    frak[pos] = (base[pos] * c_kappa(kappa, d_f[pos]) / s_kappa(kappa, d_f[pos])
                 - 1.0) / (c + 1.0)
    pair_term = g.integrate((frak + np.exp(1.0 - b_pow))
                            * rho.values * g.m_density)
    rhs = 0.5 * ratio + 0.5 * log_term - 0.5 * ratio * pair_term
    margin = H - rhs
    return CheckReport(name="transport_energy", margins=[margin],
                       tolerance=tol,
                       provenance={"kappa": kappa, "H": H,
                                   "log_term": log_term,
                                   "pair_term": pair_term})


def young_margin(a: float, b: float) -> float:
    """Margin of the Young-type inequality ab <= a log a - 2a + e^{b+1}."""
    lhs = a * b
    rhs = (a * math.log(a) if a > 0 else 0.0) - 2.0 * a + math.exp(b + 1.0)
    return rhs - lhs
