"""Constant-curvature model spaces with weights.

Three models are provided: Euclidean R^d, the round sphere of a given
radius (points stored as embedding vectors in R^{d+1}), and hyperbolic
space in upper-half-space coordinates (last coordinate positive). All
geodesic, log-map, and frame operations are closed form.

Weight functions carry value/gradient/Hessian access, either analytic
(the named presets) or by geodesic finite differences.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, CutLocusError
from .params import DimensionParams
from .report import CheckReport

# sphere segments this close to the antipode are treated as cut-locus hits
CUT_MARGIN = 1e-6


def _orthonormal_completion(existing: np.ndarray, dim: int) -> np.ndarray:
    """Columns orthonormal to the given ones, completing a basis of R^dim."""
    k = existing.shape[1]
    m = np.concatenate([existing, np.eye(dim)], axis=1)
    q, _ = np.linalg.qr(m)
    return q[:, k:dim]


class ModelSpace:
    """Base class: a complete simply connected space of constant curvature."""

    kind: str
    dim: int
    sec: float  # constant sectional curvature
    ambient: int  # length of point coordinate arrays

    # -- core geometry -------------------------------------------------
    def geodesic(self, x, v, t):
        """Point(s) gamma_v(t) of the unit-speed geodesic; t scalar or array."""
        raise NotImplementedError

    def velocity(self, x, v, t):
        """Unit tangent(s) of gamma_v at parameter t."""
        raise NotImplementedError

    def log(self, x, y):
        """(unit tangent v, length L) with geodesic(x, v, L) == y."""
        raise NotImplementedError

    def distance(self, x, y) -> float:
        return self.log(x, y)[1]

    def inner(self, x, u, v) -> float:
        raise NotImplementedError

    def norm(self, x, u) -> float:
        return math.sqrt(max(self.inner(x, u, u), 0.0))

    def frame(self, x, last=None) -> np.ndarray:
        """Orthonormal tangent frame at x, rows = frame vectors.

        When ``last`` (a unit tangent) is given it becomes the final row.
        """
        raise NotImplementedError

    def tau(self, x, v) -> float:
        """sup{t > 0 : d(x, gamma_v(t)) = t}; pi*radius on the sphere, +inf otherwise."""
        raise NotImplementedError

    def check_point(self, x) -> None:
        """Validate the manifold constraint to 1e-12."""

    # -- sampling ------------------------------------------------------
    def sample_point(self, rng: np.random.Generator, region: dict | None = None):
        raise NotImplementedError

    def sample_unit(self, rng: np.random.Generator, x) -> np.ndarray:
        fr = self.frame(x)
        coeff = rng.normal(size=self.dim)
        coeff /= np.linalg.norm(coeff)
        return coeff @ fr


class Euclidean(ModelSpace):
    kind = "euclidean"

    def __init__(self, dim: int):
        if dim < 2:
            raise ConfigError("model dimension must be >= 2")
        self.dim = dim
        self.ambient = dim
        self.sec = 0.0

    def geodesic(self, x, v, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(x) + t[..., None] * np.asarray(v)

    def velocity(self, x, v, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(v), t.shape + (self.dim,)).copy()

    def log(self, x, y):
        d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        length = float(np.linalg.norm(d))
        if length < 1e-15:
            v = np.zeros(self.dim)
            v[0] = 1.0
            return v, 0.0
        return d / length, length

    def inner(self, x, u, v):
        return float(np.dot(u, v))

    def frame(self, x, last=None):
        if last is None:
            return np.eye(self.dim)
        rest = _orthonormal_completion(np.asarray(last, dtype=float)[:, None], self.dim)
        return np.vstack([rest.T, np.asarray(last, dtype=float)])

    def tau(self, x, v):
        return math.inf

    def sample_point(self, rng, region=None):
        r = (region or {}).get("radius", 1.0)
        center = np.asarray((region or {}).get("center", np.zeros(self.dim)), dtype=float)
        u = rng.normal(size=self.dim)
        u /= np.linalg.norm(u)
        return center + r * rng.random() ** (1.0 / self.dim) * u


class Sphere(ModelSpace):
    kind = "sphere"

    def __init__(self, dim: int, radius: float = 1.0):
        if dim < 2:
            raise ConfigError("model dimension must be >= 2")
        if radius <= 0:
            raise ConfigError("sphere radius must be positive")
        self.dim = dim
        self.radius = float(radius)
        self.ambient = dim + 1
        self.sec = 1.0 / radius**2

    def check_point(self, x):
        r = np.linalg.norm(x)
        if abs(r - self.radius) > 1e-12 * (1.0 + self.radius):
            raise ConfigError(f"point does not satisfy |x| = {self.radius}: |x| = {r}")

    def geodesic(self, x, v, t):
        t = np.asarray(t, dtype=float)
        ang = t[..., None] / self.radius
        return np.cos(ang) * np.asarray(x) + self.radius * np.sin(ang) * np.asarray(v)

    def velocity(self, x, v, t):
        t = np.asarray(t, dtype=float)
        ang = t[..., None] / self.radius
        return -np.sin(ang) * np.asarray(x) / self.radius + np.cos(ang) * np.asarray(v)

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cosang = float(np.dot(x, y)) / self.radius**2
        cosang = max(-1.0, min(1.0, cosang))
        if cosang > 0.0:
            # chord formula, well-conditioned for small angles
            chord = float(np.linalg.norm(x - y)) / self.radius
            ang = 2.0 * math.asin(min(1.0, 0.5 * chord))
        else:
            ang = math.acos(cosang)
        length = self.radius * ang
        if length < 1e-15:
            fr = self.frame(x)
            return fr[0], 0.0
        if ang > math.pi - CUT_MARGIN:
            raise CutLocusError("antipodal pair on the sphere: minimal geodesic not unique")
        v = y - cosang * x
        v /= np.linalg.norm(v)
        return v, length

    def inner(self, x, u, v):
        return float(np.dot(u, v))

    def frame(self, x, last=None):
        normal = np.asarray(x, dtype=float)[:, None] / self.radius
        if last is None:
            return _orthonormal_completion(normal, self.ambient).T
        fixed = np.concatenate([normal, np.asarray(last, dtype=float)[:, None]], axis=1)
        rest = _orthonormal_completion(fixed, self.ambient)
        return np.vstack([rest.T, np.asarray(last, dtype=float)])

    def tau(self, x, v):
        return math.pi * self.radius

    def sample_point(self, rng, region=None):
        u = rng.normal(size=self.ambient)
        return self.radius * u / np.linalg.norm(u)


class Hyperbolic(ModelSpace):
    """Hyperbolic space in upper-half-space coordinates (x_1..x_{d-1}, y > 0).

    ``scale`` sets the curvature to -1/scale^2; the metric is
    scale^2 (dx^2 + dy^2)/y^2. Geodesics reduce to the 2D half-plane
    closed forms in the vertical slice containing the initial velocity.
    """

    kind = "hyperbolic"

    def __init__(self, dim: int, scale: float = 1.0):
        if dim < 2:
            raise ConfigError("model dimension must be >= 2")
        if scale <= 0:
            raise ConfigError("hyperbolic scale must be positive")
        self.dim = dim
        self.scale = float(scale)
        self.ambient = dim
        self.sec = -1.0 / scale**2

    def check_point(self, x):
        if x[-1] <= 0:
            raise ConfigError("upper-half-space point must have positive last coordinate")

    # slice geodesic in curvature -1 normalization: point (0, y0),
    # tangent (us, uy) with us^2 + uy^2 = y0^2, arclength t
    @staticmethod
    def _slice_geodesic(y0, us, uy, t):
        t = np.asarray(t, dtype=float)
        if abs(us) < 1e-14 * y0:
            sg = 1.0 if uy >= 0 else -1.0
            y = y0 * np.exp(sg * t)
            s = np.zeros_like(y)
            vs = np.zeros_like(y)
            vy = sg * y
            return s, y, vs, vy
        xi = y0 * uy / us
        r = math.hypot(xi, y0)
        s0 = math.atanh(max(-1 + 1e-16, min(1 - 1e-16, -xi / r)))
        sg = 1.0 if us > 0 else -1.0
        sp = s0 + sg * t
        s = xi + r * np.tanh(sp)
        y = r / np.cosh(sp)
        vs = sg * r / np.cosh(sp) ** 2
        vy = -sg * r * np.tanh(sp) / np.cosh(sp)
        return s, y, vs, vy

    def _split(self, x, v):
        """Unit-curvature slice data for scale-a point/tangent."""
        x = np.asarray(x, dtype=float)
        u = self.scale * np.asarray(v, dtype=float)  # |u|_euc = y in curvature -1
        uh = u[:-1]
        h = np.linalg.norm(uh)
        if h < 1e-14 * x[-1]:
            return x, None, 0.0, u[-1]
        return x, uh / h, float(h), float(u[-1])

    def geodesic(self, x, v, t):
        x, eh, us, uy = self._split(x, v)
        t1 = np.asarray(t, dtype=float) / self.scale
        s, y, _, _ = self._slice_geodesic(x[-1], us, uy, t1)
        out = np.broadcast_to(x, np.shape(t1) + (self.ambient,)).copy()
        if eh is not None:
            out[..., :-1] = x[:-1] + s[..., None] * eh
        out[..., -1] = y
        return out

    def velocity(self, x, v, t):
        x, eh, us, uy = self._split(x, v)
        t1 = np.asarray(t, dtype=float) / self.scale
        _, _, vs, vy = self._slice_geodesic(x[-1], us, uy, t1)
        out = np.zeros(np.shape(t1) + (self.ambient,))
        if eh is not None:
            out[..., :-1] = vs[..., None] * eh
        out[..., -1] = vy
        return out / self.scale  # back to scale-a unit tangents

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dh = y[:-1] - x[:-1]
        h = np.linalg.norm(dh)
        y0, y1 = x[-1], y[-1]
        if h < 1e-15 and abs(y1 - y0) < 1e-15 * y0:
            fr = self.frame(x)
            return fr[0], 0.0
        if h < 1e-14 * y0:
            length = abs(math.log(y1 / y0))
            sg = 1.0 if y1 > y0 else -1.0
            v = np.zeros(self.ambient)
            v[-1] = sg * y0 / self.scale
            return v, self.scale * length
        eh = dh / h
        xi = (h * h + y1 * y1 - y0 * y0) / (2.0 * h)
        r = math.hypot(xi, y0)
        sp = math.atanh(max(-1 + 1e-16, min(1 - 1e-16, -xi / r)))
        sq = math.atanh(max(-1 + 1e-16, min(1 - 1e-16, (h - xi) / r)))
        length = abs(sq - sp)
        sg = 1.0 if sq > sp else -1.0
        vs = sg * r / math.cosh(sp) ** 2
        vy = -sg * r * math.tanh(sp) / math.cosh(sp)
        v = np.zeros(self.ambient)
        v[:-1] = vs * eh
        v[-1] = vy
        return v / self.scale, self.scale * length

    def inner(self, x, u, v):
        y = x[-1]
        return float(np.dot(u, v)) * self.scale**2 / y**2

    def frame(self, x, last=None):
        y = x[-1]
        if last is None:
            return np.eye(self.ambient) * (y / self.scale)
        e_last = np.asarray(last, dtype=float) * self.scale / y  # euclidean-unit
        rest = _orthonormal_completion(e_last[:, None], self.ambient)
        fr = np.vstack([rest.T, e_last]) * (y / self.scale)
        return fr

    def tau(self, x, v):
        return math.inf

    def sample_point(self, rng, region=None):
        r = (region or {}).get("radius", 1.0)
        out = np.empty(self.ambient)
        out[:-1] = rng.uniform(-r, r, size=self.ambient - 1)
        out[-1] = math.exp(rng.uniform(-r, r))
        return out


def make_space(kind: str, dim: int, **kw) -> ModelSpace:
    if kind == "euclidean":
        return Euclidean(dim)
    if kind == "sphere":
        return Sphere(dim, kw.get("radius", 1.0))
    if kind == "hyperbolic":
        return Hyperbolic(dim, kw.get("scale", 1.0))
    raise ConfigError(f"unknown space kind: {kind}")


@dataclass(frozen=True)
class GeodesicSegment:
    """A minimal geodesic between two points, with cut-locus clearance."""

    start: np.ndarray
    end: np.ndarray
    direction: np.ndarray
    length: float
    cut_clear: bool


def segment_between(space: ModelSpace, x, y) -> GeodesicSegment:
    """The minimal geodesic from x to y; raises CutLocusError on sphere antipodes."""
    v, length = space.log(x, y)
    cut_clear = True
    if isinstance(space, Sphere):
        cut_clear = length < math.pi * space.radius - CUT_MARGIN
        if not cut_clear:
            raise CutLocusError("segment reaches the antipodal cut locus")
    return GeodesicSegment(np.asarray(x, float), np.asarray(y, float), v, length, cut_clear)


class WeightFunction:
    """Smooth density exponent f with gradient and Hessian access.

    ``eval`` is vectorized over leading axes. Analytic instances supply
    vectorized ``grad`` and ``hess``; finite-difference instances use
    geodesic central differences (gradient step 1e-5*(1+|x|), Hessian
    step 1e-4*(1+|x|)).
    """

    def __init__(self, eval_fn, grad_fn=None, hess_fn=None, *, space=None,
                 mode="analytic", is_constant=False, name="custom"):
        self._eval = eval_fn
        self._grad = grad_fn
        self._hess = hess_fn
        self._space = space
        self.mode = mode
        self.is_constant = is_constant
        self.name = name
        if mode == "finite-difference" and space is None:
            raise ConfigError("finite-difference weights need the model space")

    def eval(self, x):
        return self._eval(np.asarray(x, dtype=float))

    def grad(self, x):
        if self._grad is not None:
            return self._grad(np.asarray(x, dtype=float))
        return self._fd_grad(np.asarray(x, dtype=float))

    def hess(self, x, u, w):
        if self._hess is not None:
            return self._hess(np.asarray(x, dtype=float), np.asarray(u, float), np.asarray(w, float))
        return self._fd_hess(np.asarray(x, dtype=float), np.asarray(u, float), np.asarray(w, float))

    # -- finite differences along geodesics ----------------------------
    def _fd_grad(self, x):
        if x.ndim > 1:
            return np.stack([self._fd_grad(p) for p in x])
        sp = self._space
        h = 1e-5 * (1.0 + np.linalg.norm(x))
        fr = sp.frame(x)
        g = np.zeros(sp.ambient)
        for e in fr:
            df = (self.eval(sp.geodesic(x, e, h)) - self.eval(sp.geodesic(x, -e, h))) / (2 * h)
            g += float(df) * e
        return g

    def _second_along(self, x, e, h):
        f0 = float(self.eval(x))
        fp = float(self.eval(self._space.geodesic(x, e, h)))
        fm = float(self.eval(self._space.geodesic(x, -e, h)))
        return (fp - 2.0 * f0 + fm) / h**2

    def _quadratic(self, x, u):
        """Hess f(u, u) for a general tangent u via the unit geodesic."""
        sp = self._space
        nu = sp.norm(x, u)
        if nu < 1e-14:
            return 0.0
        h = 1e-4 * (1.0 + np.linalg.norm(x))
        return nu**2 * self._second_along(x, np.asarray(u) / nu, h)

    def _fd_hess(self, x, u, w):
        if x.ndim > 1:
            return np.array([self._fd_hess(p, uu, ww) for p, uu, ww in zip(x, u, w)])
        quu = self._quadratic(x, u)
        qww = self._quadratic(x, w)
        qpm = self._quadratic(x, np.asarray(u) + np.asarray(w))
        return 0.5 * (qpm - quu - qww)


def constant_weight(value: float = 0.0) -> WeightFunction:
    def ev(x):
        return np.full(np.shape(x)[:-1], float(value)) if np.ndim(x) > 1 else float(value)

    def gr(x):
        return np.zeros(np.shape(x))

    def he(x, u, w):
        return np.zeros(np.shape(x)[:-1]) if np.ndim(x) > 1 else 0.0

    return WeightFunction(ev, gr, he, is_constant=True, name=f"constant({value})")


def _euclidean_linear(a: float) -> WeightFunction:
    def ev(x):
        return a * x[..., 0]

    def gr(x):
        g = np.zeros(np.shape(x))
        g[..., 0] = a
        return g

    def he(x, u, w):
        return np.zeros(np.shape(x)[:-1]) if np.ndim(x) > 1 else 0.0

    return WeightFunction(ev, gr, he, name=f"linear({a})")


def _euclidean_quadratic(a: float) -> WeightFunction:
    def ev(x):
        return 0.5 * a * np.sum(x * x, axis=-1)

    def gr(x):
        return a * x

    def he(x, u, w):
        return a * np.sum(u * w, axis=-1)

    return WeightFunction(ev, gr, he, name=f"quadratic({a})")


def _sphere_cosine(space: Sphere, a: float) -> WeightFunction:
    """f = a cos(theta) = a z / R on the sphere; z is an eigenfunction, so
    grad and Hessian are closed form: hess f = -(a z / R^3) g."""
    R = space.radius
    axis = np.zeros(space.ambient)
    axis[-1] = 1.0

    def ev(x):
        return a * x[..., -1] / R

    def gr(x):
        z = x[..., -1]
        return (a / R) * (axis - z[..., None] * x / R**2)

    def he(x, u, w):
        z = x[..., -1]
        return -(a * z / R**3) * np.sum(u * w, axis=-1)

    return WeightFunction(ev, gr, he, name=f"cosine({a})")


def _sphere_linear(space: Sphere, a: float) -> WeightFunction:
    """f = a * colatitude; distance function from the pole, so the Hessian
    is the classical cot comparison form. Singular at the poles."""
    R = space.radius
    axis = np.zeros(space.ambient)
    axis[-1] = 1.0

    def theta(x):
        return np.arccos(np.clip(x[..., -1] / R, -1.0, 1.0))

    def ev(x):
        return a * theta(x)

    def gr(x):
        z = x[..., -1]
        w = axis - z[..., None] * x / R**2
        nw = np.linalg.norm(w, axis=-1)
        nw = np.where(nw < 1e-300, 1.0, nw)
        return -(a / R) * w / nw[..., None]

    def he(x, u, w):
        th = theta(x)
        gth = gr(x) / a  # unit co-vector of theta, scaled
        cot = np.cos(th) / np.sin(th)
        guv = np.sum(u * w, axis=-1)
        du = np.sum(gth * u, axis=-1)
        dw = np.sum(gth * w, axis=-1)
        return a * (cot / R**2) * (guv - R**2 * du * dw)

    return WeightFunction(ev, gr, he, name=f"linear({a})")


_PRESET_RE = re.compile(r"^([a-z]+)(?:[:(]([-+0-9.eE]+)\)?)?$")


def weight_preset(space: ModelSpace, spec: str) -> WeightFunction:
    """Named weight presets: zero, linear(a), quadratic(a), cosine(a)."""
    m = _PRESET_RE.match(spec.strip())
    if not m:
        raise ConfigError(f"cannot parse weight preset: {spec!r}")
    name, arg = m.group(1), float(m.group(2)) if m.group(2) else 1.0
    if name == "zero":
        return constant_weight(0.0)
    if name == "constant":
        return constant_weight(arg)
    if name == "linear":
        if isinstance(space, Euclidean):
            return _euclidean_linear(arg)
        if isinstance(space, Sphere):
            return _sphere_linear(space, arg)
        return WeightFunction(lambda x: arg * x[..., 0], space=space,
                              mode="finite-difference", name=f"linear({arg})")
    if name == "quadratic":
        if isinstance(space, Euclidean):
            return _euclidean_quadratic(arg)
        fn = lambda x: 0.5 * arg * np.sum(x * x, axis=-1)
        return WeightFunction(fn, space=space, mode="finite-difference",
                              name=f"quadratic({arg})")
    if name == "cosine":
        if not isinstance(space, Sphere):
            raise ConfigError("cosine weight is defined on the sphere only")
        return _sphere_cosine(space, arg)
    raise ConfigError(f"unknown weight preset: {name}")


def ricci_fN(space: ModelSpace, weight: WeightFunction, params: DimensionParams,
             x, v) -> float:
    """N-weighted Ricci curvature Ric_f^N(v, v) for a unit tangent v.

    The last term vanishes for N = +inf; N = n requires a constant weight.
    """
    arr = ricci_fN_batch(space, weight, params,
                         np.asarray(x, float)[None, :], np.asarray(v, float)[None, :])
    return float(arr[0])


def ricci_fN_batch(space, weight, params, xs, vs) -> np.ndarray:
    n, N = params.n, params.N
    if N == n and not weight.is_constant:
        raise ConfigError("N = n requires a constant weight function")
    ric_g = (n - 1) * space.sec * np.ones(xs.shape[0])
    hess = np.asarray(weight.hess(xs, vs, vs), dtype=float)
    out = ric_g + hess
    if not math.isinf(N) and N != n:
        grads = np.asarray(weight.grad(xs), dtype=float)
        if isinstance(space, Hyperbolic):
            gv = np.array([space.inner(x, g, v) for x, g, v in zip(xs, grads, vs)])
        else:
            gv = np.sum(grads * vs, axis=-1)
        out = out - gv * gv / (N - n)
    return out


def check_curvature_bound(space: ModelSpace, weight: WeightFunction,
                          params: DimensionParams, kappa: float,
                          sampling: dict) -> CheckReport:
    """Sampled verification of Ric_f^N >= c^{-1} kappa e^{-4(1-eps)f/(n-1)} g.

    margin(x, v) = Ric_f^N(v) - c^{-1} kappa e^{-4(1-eps)f(x)/(n-1)}.
    """
    count = sampling.get("count", 200)
    seed = sampling.get("seed", 0)
    region = sampling.get("region")
    tol = sampling.get("tol", 1e-9)
    rng = np.random.default_rng(seed)
    xs = np.stack([space.sample_point(rng, region) for _ in range(count)])
    vs = np.stack([space.sample_unit(rng, x) for x in xs])
    ric = ricci_fN_batch(space, weight, params, xs, vs)
    f = np.asarray(weight.eval(xs), dtype=float)
    rhs = params.inv_c * kappa * np.exp(-2.0 * params.a * f)
    margins = ric - rhs
    return CheckReport(
        name="curvature_bound",
        margins=[float(m) for m in margins],
        tolerance=tol,
        provenance={"kappa": kappa, "count": count, "seed": seed,
                    "space": space.kind, "weight": weight.name},
    )
