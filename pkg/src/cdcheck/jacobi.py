"""Matrix Jacobi fields along synthetic transport rays.

A transport ray is a point x, a tangent w standing in for the potential
gradient, and a symmetric matrix S standing in for the potential Hessian
in an orthonormal frame whose last vector points along w. The map
F_t = exp_x(t w) pushes the frame along the geodesic, the differential
solves the matrix Jacobi equation

    E''(t) = -k |w|^2 (E(t) - e_n e_n^T E(t)),   E(0) = I, E'(0) = S,

with k the constant sectional curvature, and everything downstream
(weighted Jacobian J_t, the scalars h, l, D, Dbar) comes from E.
Integration is classic 4th-order Runge-Kutta on a uniform t-grid; the
constant-coefficient closed form serves as the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, SingularJacobian
from .params import DimensionParams, s_kappa
from .quadrature import cumulative_simpson
from .report import CheckReport
from .spaces import Hyperbolic, ModelSpace, WeightFunction, ricci_fN_batch

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class TransportRay:
    """Base point, transport direction w, and Hessian surrogate S.

    S lives in an orthonormal frame at x whose last vector is w/|w|.
    """

    x: np.ndarray
    w: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.S, dtype=float)
        if not np.allclose(s, s.T, atol=SYMMETRY_TOL, rtol=0.0):
            raise PreconditionError("Hessian surrogate must be symmetric",
                                    failed="S symmetric")


@dataclass
class JacobianTrajectory:
    """Per-grid-point state of a transport ray on t in [0, 1]."""

    ray: TransportRay
    ts: np.ndarray
    E: np.ndarray  # (T, n, n)
    det: np.ndarray
    J: np.ndarray
    h: np.ndarray
    l: np.ndarray
    D: np.ndarray
    Dbar: np.ndarray
    a_nn: np.ndarray
    f_gamma: np.ndarray  # f along the geodesic
    theta: float  # |w|
    direction: np.ndarray = field(default=None)  # unit tangent, None if theta=0

    def as_rows(self):
        """Rows (t, det, J, h, l, D, Dbar) for CSV export."""
        return np.column_stack([self.ts, self.det, self.J, self.h,
                                self.l, self.D, self.Dbar])


def _rk4_jacobi(Ss: np.ndarray, k_theta2: np.ndarray, steps: int):
    """Batched RK4 for E'' = -k theta^2 P E, P zeroing the last row.

    Ss: (B, n, n); k_theta2: (B,). Returns (E, Ep) of shape (B, T, n, n).
    """
    B, n, _ = Ss.shape
    T = steps + 1
    dt = 1.0 / steps
    coef = -k_theta2[:, None, None]

    def acc(E):
        out = coef * E
        out[:, -1, :] = 0.0
        return out

    E = np.broadcast_to(np.eye(n), (B, n, n)).copy()
    Ep = Ss.copy()
    Es = np.empty((B, T, n, n))
    Eps = np.empty((B, T, n, n))
    Es[:, 0] = E
    Eps[:, 0] = Ep
    for i in range(steps):
        k1e, k1p = Ep, acc(E)
        k2e, k2p = Ep + 0.5 * dt * k1p, acc(E + 0.5 * dt * k1e)
        k3e, k3p = Ep + 0.5 * dt * k2p, acc(E + 0.5 * dt * k2e)
        k4e, k4p = Ep + dt * k3p, acc(E + dt * k3e)
        E = E + dt / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        Ep = Ep + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        Es[:, i + 1] = E
        Eps[:, i + 1] = Ep
    return Es, Eps


def jacobi_closed_form(S: np.ndarray, k_theta2: float, ts: np.ndarray):
    """Exact solution of the constant-coefficient Jacobi system.

    Row-block form: the last row evolves linearly, the rest by the
    scalar propagator (cos, sinc) of frequency sqrt(k) theta.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    ts = np.asarray(ts, dtype=float)
    w2 = k_theta2
    if abs(w2) < 1e-300:
        C = np.ones_like(ts)
        Sn = ts.copy()
    elif w2 > 0:
        om = math.sqrt(w2)
        C = np.cos(om * ts)
        Sn = np.sin(om * ts) / om
    else:
        om = math.sqrt(-w2)
        C = np.cosh(om * ts)
        Sn = np.sinh(om * ts) / om
    E = np.empty(ts.shape + (n, n))
    eye = np.eye(n)
    E[..., :-1, :] = (C[:, None, None] * eye[:-1, :]
                      + Sn[:, None, None] * S[:-1, :])
    E[..., -1, :] = eye[-1, :] + ts[:, None] * S[-1, :]
    return E


def integrate_jacobi_batch(space: ModelSpace, weight: WeightFunction,
                           params: DimensionParams, xs, ws, Ss,
                           steps: int = 128):
    """Vectorized trajectory computation for a batch of rays.

    Returns a dict of arrays keyed by the trajectory field names plus an
    ``admissible`` mask (det > 0 on the whole grid). Inadmissible rows
    carry NaN downstream values.
    """
    xs = np.asarray(xs, dtype=float)
    ws = np.asarray(ws, dtype=float)
    Ss = np.asarray(Ss, dtype=float)
    B = xs.shape[0]
    n = space.dim
    thetas = np.array([space.norm(x, w) for x, w in zip(xs, ws)])
    ts = np.linspace(0.0, 1.0, steps + 1)
    dt = ts[1] - ts[0]

    # zero-speed rays degenerate to the identity trajectory
    Ss = np.where((thetas > 1e-14)[:, None, None], Ss, 0.0)
    Es, Eps = _rk4_jacobi(Ss, space.sec * thetas**2, steps)
    det = np.linalg.det(Es)
    admissible = np.all(det > 0.0, axis=1)

    # a_nn = last row of E' times last column of E^{-1}
    a_nn = np.full((B, steps + 1), np.nan)
    if admissible.any():
        inv = np.linalg.inv(Es[admissible])
        a_nn[admissible] = np.einsum("btj,btj->bt",
                                     Eps[admissible][:, :, -1, :],
                                     inv[:, :, :, -1])

    # f along each geodesic; zero-speed rays sit at the base point
    f_gamma = np.empty((B, steps + 1))
    live = thetas > 1e-14
    if live.any():
        pts = _geodesic_points(space, xs[live], ws[live], thetas[live], ts)
        f_gamma[live] = np.asarray(weight.eval(pts), dtype=float)
    if (~live).any():
        f_gamma[~live] = np.asarray(weight.eval(xs[~live]), dtype=float)[:, None]

    int_ann = cumulative_simpson(a_nn, dt)
    with np.errstate(invalid="ignore"):
        logdet = np.where(det > 0, np.log(np.where(det > 0, det, 1.0)), np.nan)
    h = logdet - int_ann
    l = h - f_gamma + f_gamma[:, :1]
    J = np.exp(logdet - f_gamma + f_gamma[:, :1])
    D = np.exp(params.c * l)
    Dbar = np.exp(int_ann)
    return {"ts": ts, "E": Es, "Ep": Eps, "det": det, "J": J, "h": h, "l": l,
            "D": D, "Dbar": Dbar, "a_nn": a_nn, "f_gamma": f_gamma,
            "thetas": thetas, "admissible": admissible}


def _geodesic_points(space, xs, ws, thetas, ts):
    """(B, T, ambient) geodesic points; broadcast fast paths per model."""
    vs = ws / thetas[:, None]
    svals = thetas[:, None] * ts[None, :]
    kind = space.kind
    if kind == "euclidean":
        return xs[:, None, :] + svals[..., None] * vs[:, None, :]
    if kind == "sphere":
        ang = svals[..., None] / space.radius
        return (np.cos(ang) * xs[:, None, :]
                + space.radius * np.sin(ang) * vs[:, None, :])
    return np.stack([space.geodesic(x, v, s)
                     for x, v, s in zip(xs, vs, svals)])


def integrate_jacobi(space: ModelSpace, weight: WeightFunction,
                     params: DimensionParams, ray: TransportRay,
                     steps: int = 128) -> JacobianTrajectory:
    """Trajectory of a single ray; raises SingularJacobian if det E hits 0."""
    theta = space.norm(ray.x, ray.w)
    out = integrate_jacobi_batch(space, weight, params,
                                 ray.x[None, :], ray.w[None, :],
                                 np.asarray(ray.S, float)[None, :, :], steps)
    if not out["admissible"][0]:
        raise SingularJacobian("det(dF_t) vanishes on [0, 1]; ray inadmissible")
    direction = None
    if theta > 1e-14:
        direction = np.asarray(ray.w, float) / theta
    return JacobianTrajectory(
        ray=ray, ts=out["ts"], E=out["E"][0], det=out["det"][0], J=out["J"][0],
        h=out["h"][0], l=out["l"][0], D=out["D"][0], Dbar=out["Dbar"][0],
        a_nn=out["a_nn"][0], f_gamma=out["f_gamma"][0], theta=theta,
        direction=direction,
    )


# -- finite-difference stencils (uniform grid, 5 points) ----------------
def _deriv1_5pt(y: np.ndarray, dt: float) -> np.ndarray:
    """First derivative at interior points [2:-2]."""
    return (y[..., :-4] - 8.0 * y[..., 1:-3] + 8.0 * y[..., 3:-1]
            - y[..., 4:]) / (12.0 * dt)


def _deriv2_5pt(y: np.ndarray, dt: float) -> np.ndarray:
    """Second derivative at interior points [2:-2]."""
    return (-y[..., :-4] + 16.0 * y[..., 1:-3] - 30.0 * y[..., 2:-2]
            + 16.0 * y[..., 3:-1] - y[..., 4:]) / (12.0 * dt**2)


def check_riccati(traj: JacobianTrajectory, space: ModelSpace,
                  weight: WeightFunction, params: DimensionParams,
                  tol: float = 1e-8) -> CheckReport:
    """Differential inequalities for h and l along the trajectory.

        h'' <= -h'^2/(n-1) - Ric_g(gamma')
        (e^{a f} l')' <= -e^{a f} (c l'^2 + Ric_f^N(gamma'))

    Margins are (RHS - LHS)/(1 + |RHS|) at interior grid points.
    """
    n = space.dim
    ts, dt = traj.ts, traj.ts[1] - traj.ts[0]
    theta2 = traj.theta**2
    margins = []

    hp = _deriv1_5pt(traj.h, dt)
    hpp = _deriv2_5pt(traj.h, dt)
    ric_g = (n - 1) * space.sec * theta2
    rhs1 = -hp**2 / (n - 1) - ric_g
    m1 = (rhs1 - hpp) / (1.0 + np.abs(rhs1))
    margins.extend(float(v) for v in m1)

    if traj.theta > 1e-14:
        pts = _geodesic_points(space, traj.ray.x[None, :],
                               traj.ray.w[None, :],
                               np.array([traj.theta]), ts)[0]
        vels = space.velocity(traj.ray.x, traj.direction, traj.theta * ts)
        ric_fn = theta2 * ricci_fN_batch(space, weight, params, pts, vels)
    else:
        ric_fn = np.zeros_like(ts)
    ef = np.exp(params.a * traj.f_gamma)
    lp = _deriv1_5pt(traj.l, dt)
    w = ef[2:-2] * lp
    wp = _deriv1_5pt(w, dt)  # valid on indices [4:-4] of the base grid
    inner = slice(4, len(ts) - 4)
    rhs2 = -ef[inner] * (params.c * lp[2:-2]**2 + ric_fn[inner])
    m2 = (rhs2 - wp) / (1.0 + np.abs(rhs2))
    margins.extend(float(v) for v in m2)

    return CheckReport(name="riccati", margins=margins, tolerance=tol,
                       provenance={"theta": traj.theta, "steps": len(ts) - 1})


def _partials_from_f(params, f_gamma, theta, dt):
    """Re-parametrized partial distances d_t(x,y) on the ray's own grid."""
    integrand = theta * np.exp(-params.a * f_gamma)
    return cumulative_simpson(integrand, dt)


def concavity_margins(ts, D, Dbar, J, d_partial, params: DimensionParams,
                      kappa: float):
    """Margins of the three concavity inequalities on the grid interior.

    (i)  Dbar(t) >= (1-t) Dbar(0) + t Dbar(1)
    (ii) D(t) >= [s_k(d_f - d_t)/s_k(d_f)] D(0) + [s_k(d_t)/s_k(d_f)] D(1)
    (iii) J_t^{c/(c+1)} >= (1-t) beta_{1-t}(y,x)^{c/(c+1)} J_0^{c/(c+1)}
                           + t beta_t(x,y)^{c/(c+1)} J_1^{c/(c+1)}

    with d_{1-t}(y,x) = d_f(x,y) - d_t(x,y) by reversal of the geodesic.
    All margins are scaled by 1/(1 + |RHS|). Works on batched rows.
    """
    d_full = d_partial[..., -1:]
    inner = slice(1, ts.size - 1)
    t = ts[inner]
    s_full = s_kappa(kappa, d_full)
    s_t = s_kappa(kappa, d_partial[..., inner])
    s_rev = s_kappa(kappa, d_full - d_partial[..., inner])

    rhs1 = (1.0 - t) * Dbar[..., :1] + t * Dbar[..., -1:]
    m1 = (Dbar[..., inner] - rhs1) / (1.0 + np.abs(rhs1))

    rhs2 = (s_rev / s_full) * D[..., :1] + (s_t / s_full) * D[..., -1:]
    m2 = (D[..., inner] - rhs2) / (1.0 + np.abs(rhs2))

    # beta^{c/(c+1)} = (s-ratio / t)^{1/(c+1)}; combine exponents in logs
    p = 1.0 / (params.c + 1.0)
    with np.errstate(divide="ignore"):
        brev = np.exp(p * (np.log(s_rev) - np.log((1.0 - t) * s_full)))
        bfwd = np.exp(p * (np.log(s_t) - np.log(t * s_full)))
    cr = params.c_ratio
    Jcr = np.where(J > 0, J, np.nan) ** cr
    rhs3 = (1.0 - t) * brev * Jcr[..., :1] + t * bfwd * Jcr[..., -1:]
    m3 = (Jcr[..., inner] - rhs3) / (1.0 + np.abs(rhs3))
    return m1, m2, m3


def check_jacobian_concavity(traj: JacobianTrajectory,
                             params: DimensionParams, kappa: float,
                             tol: float = 1e-8) -> CheckReport:
    """The three trajectory inequalities for a single ray."""
    from .params import diam_kappa

    dt = traj.ts[1] - traj.ts[0]
    d_partial = _partials_from_f(params, traj.f_gamma, traj.theta, dt)
    if d_partial[-1] >= diam_kappa(kappa) - 1e-12 and traj.theta > 0:
        raise PreconditionError(
            "re-parametrized length reaches the conjugate radius",
            failed="d_f < C_kappa")
    if traj.theta <= 1e-14:
        # degenerate ray: distances vanish, s-ratios are taken as t
        d_partial = traj.ts * 1e-30
    m1, m2, m3 = concavity_margins(traj.ts, traj.D, traj.Dbar, traj.J,
                                   d_partial, params, kappa)
    margins = [float(v) for part in (m1, m2, m3) for v in part]
    return CheckReport(name="jacobian_concavity", margins=margins,
                       tolerance=tol,
                       provenance={"kappa": kappa, "theta": traj.theta,
                                   "d_f": float(d_partial[-1])})


def refine_ray_margin(space: ModelSpace, weight: WeightFunction,
                      params: DimensionParams, kappa: float,
                      x, w, S, steps: int = 4096) -> float | None:
    """Re-check one ray's concavity margin on a much finer grid.

    Rays whose determinant dips close to zero mid-trajectory produce
    large discretization error at the default resolution; refinement
    either confirms the margin or reveals the ray as inadmissible
    (``None``). A margin that stays negative is a genuine violation.
    """
    try:
        traj = integrate_jacobi(space, weight, params,
                                TransportRay(x, w, S), steps)
        rep = check_jacobian_concavity(traj, params, kappa)
    except (SingularJacobian, PreconditionError):
        return None
    return rep.min_margin


def sample_rays(space: ModelSpace, rng: np.random.Generator, count: int,
                region: dict | None = None,
                theta_range: tuple[float, float] = (0.2, 1.2)):
    """Random admissible-candidate rays: eigenvalues uniform in
    [-0.8, 0.8]/theta with a Haar-random eigenframe."""
    n = space.dim
    xs, ws, Ss = [], [], []
    for _ in range(count):
        x = space.sample_point(rng, region)
        vhat = space.sample_unit(rng, x)
        theta = rng.uniform(*theta_range)
        lam = rng.uniform(-0.8, 0.8, size=n) / theta
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        S = (q * lam) @ q.T
        S = 0.5 * (S + S.T)
        xs.append(x)
        ws.append(theta * vhat)
        Ss.append(S)
    return np.asarray(xs), np.asarray(ws), np.asarray(Ss)


def falsify_jacobian(space: ModelSpace, weight: WeightFunction,
                     params: DimensionParams, kappa: float,
                     trials: int = 10000, seed: int = 0,
                     region: dict | None = None,
                     theta_range: tuple[float, float] = (0.2, 1.4),
                     steps: int = 64,
                     violation: float = 1e-6) -> CheckReport:
    """Counterexample search for the Jacobian concavity inequality.

    When the pointwise curvature bound fails, random rays are scanned for
    a violation of the beta-interpolation inequality. The report passes
    iff a margin below -``violation`` is found; when the curvature bound
    holds the search is skipped and the report is a vacuous pass.
    """
    from .params import diam_kappa
    from .spaces import check_curvature_bound

    curv = check_curvature_bound(space, weight, params, kappa,
                                 {"count": 400, "seed": seed, "region": region})
    if curv.passed:
        return CheckReport(name="falsify_jacobian", margins=[0.0],
                           tolerance=0.0, vacuous=True,
                           provenance={"curvature_min_margin": curv.min_margin})

    rng = np.random.default_rng(seed)
    worst = math.inf
    batch = 500
    done = 0
    while done < trials and worst > -violation:
        m = min(batch, trials - done)
        xs, ws, Ss = sample_rays(space, rng, m, region, theta_range)
        out = integrate_jacobi_batch(space, weight, params, xs, ws, Ss, steps)
        ok = out["admissible"]
        if ok.any():
            dt = out["ts"][1] - out["ts"][0]
            d_partial = _partials_from_f(params, out["f_gamma"][ok],
                                         out["thetas"][ok, None], dt)
            below = d_partial[:, -1] < diam_kappa(kappa) - 1e-12
            if below.any():
                _, _, m3 = concavity_margins(out["ts"], out["D"][ok][below],
                                             out["Dbar"][ok][below],
                                             out["J"][ok][below],
                                             d_partial[below], params, kappa)
                worst = min(worst, float(np.nanmin(m3)))
        done += m
    found = worst < -violation
    return CheckReport(name="falsify_jacobian",
                       margins=[-worst - violation],
                       tolerance=0.0,
                       provenance={"worst_margin": worst, "trials": done,
                                   "violation_found": found})
