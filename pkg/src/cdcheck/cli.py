"""Command-line driver.

Usage:
    cdcheck run --config cfg.json [--seed S] [--out-dir D] [--quiet]
    cdcheck validate --config cfg.json

The config is a JSON object; unknown fields are rejected. Exit codes:
0 all checks pass, 1 at least one inequality fails beyond tolerance,
2 configuration or precondition error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import coefficients, jacobi, suites, taylor
from .errors import CdCheckError, ConfigError, PreconditionError
from .ot import (DensityField, LineGeometry, MeridianGeometry,
                 density_from_callable)
from .params import validate_params
from .report import CheckReport, canonical_json, report_hash
from .spaces import check_curvature_bound, make_space, weight_preset

SUITES = ("curvature", "jacobian", "twcd", "bm", "interpolation",
          "functional", "taylor", "limits", "all")

_TOP_KEYS = {"space", "weight", "params", "kappa", "suite", "sampling",
             "tolerances", "geometry", "densities", "regions",
             "interpolation", "functional", "out_dir"}
_DEFAULT_SAMPLING = {"trials": 1000, "seed": 0,
                     "t_grid": [0.1, 0.25, 0.5, 0.75, 0.9]}


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    return resolve_config(cfg)


def resolve_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    for key in ("space", "params", "kappa", "suite"):
        if key not in cfg:
            raise ConfigError(f"missing config field: {key}")
    if cfg["suite"] not in SUITES:
        raise ConfigError(f"unknown suite: {cfg['suite']}")
    out = dict(cfg)
    out.setdefault("weight", "zero")
    sampling = dict(_DEFAULT_SAMPLING)
    sampling.update(cfg.get("sampling", {}))
    out["sampling"] = sampling
    out.setdefault("tolerances", {})
    p = dict(cfg["params"])
    if isinstance(p.get("N"), str):
        if p["N"].lower() not in ("inf", "+inf", "infinity"):
            raise ConfigError(f"cannot parse N: {p['N']}")
        p["N"] = math.inf
    out["params"] = p
    sp = dict(cfg["space"])
    if "kind" not in sp or "dim" not in sp:
        raise ConfigError("space spec needs kind and dim")
    out["space"] = sp
    # materialize the objects once to surface validation errors early
    validate_params(p["n"], p["N"], p["eps"])
    space = make_space(sp["kind"], sp["dim"],
                       **{k: v for k, v in sp.items()
                          if k not in ("kind", "dim")})
    weight_preset(space, out["weight"])
    return out


def _build(cfg):
    sp = cfg["space"]
    space = make_space(sp["kind"], sp["dim"],
                       **{k: v for k, v in sp.items()
                          if k not in ("kind", "dim")})
    weight = weight_preset(space, cfg["weight"])
    p = cfg["params"]
    params = validate_params(p["n"], p["N"], p["eps"])
    return space, weight, params


def _build_geometry(cfg, params):
    g = dict(cfg.get("geometry", {"kind": "line"}))
    kind = g.pop("kind", "line")
    f1_spec = g.pop("f1", "zero")
    f1 = _axis_weight(f1_spec)
    if kind == "line":
        return LineGeometry(f1, **g)
    if kind == "meridian":
        return MeridianGeometry(f1, **g)
    raise ConfigError(f"unknown geometry kind: {kind}")


def _axis_weight(spec):
    import re

    m = re.match(r"^([a-z]+)(?:[:(]([-+0-9.eE]+)\)?)?$", str(spec).strip())
    if not m:
        raise ConfigError(f"cannot parse axis weight: {spec!r}")
    name, arg = m.group(1), float(m.group(2)) if m.group(2) else 1.0
    if name == "zero":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if name == "constant":
        return lambda x: np.full_like(np.asarray(x, dtype=float), arg)
    if name == "linear":
        return lambda x: arg * np.asarray(x, dtype=float)
    if name == "quadratic":
        return lambda x: 0.5 * arg * np.asarray(x, dtype=float) ** 2
    raise ConfigError(f"unknown axis weight preset: {name}")


def _axis_density(geometry, spec) -> DensityField:
    kind = spec.get("kind", "bump")
    if kind == "bump":
        m0 = spec.get("center", 0.0)
        w = spec.get("width", 0.5)
        return density_from_callable(
            geometry, lambda x: np.exp(-0.5 * ((x - m0) / w) ** 2))
    if kind == "uniform":
        lo, hi = spec["bounds"]
        return density_from_callable(
            geometry, lambda x: ((x >= lo) & (x <= hi)).astype(float))
    if kind == "cosine":
        a = spec.get("amplitude", 0.1)
        return density_from_callable(geometry,
                                     lambda th: 1.0 + a * np.cos(th))
    raise ConfigError(f"unknown density kind: {kind}")


# ----------------------------------------------------------------------
# suite runners, each returning a list of CheckReport
# ----------------------------------------------------------------------
def _run_curvature(cfg, space, weight, params):
    s = cfg["sampling"]
    tol = cfg["tolerances"].get("curvature", 1e-9)
    rep = check_curvature_bound(space, weight, params, cfg["kappa"],
                                {"count": s["trials"], "seed": s["seed"],
                                 "region": s.get("region"), "tol": tol})
    return [rep]


def _run_jacobian(cfg, space, weight, params, out_dir):
    s = cfg["sampling"]
    kappa = cfg["kappa"]
    tol = cfg["tolerances"].get("jacobian", 1e-8)
    rng = np.random.default_rng(s["seed"])
    trials = s["trials"]
    steps = s.get("steps", 128)
    margins = []
    worst = (math.inf, None)
    batch = 250
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        xs, ws, Ss = jacobi.sample_rays(space, rng, m,
                                        region=s.get("region"),
                                        theta_range=tuple(s.get(
                                            "theta_range", (0.2, 1.2))))
        out = jacobi.integrate_jacobi_batch(space, weight, params,
                                            xs, ws, Ss, steps)
        ok = out["admissible"]
        if not ok.any():
            done += m
            continue
        dt = out["ts"][1] - out["ts"][0]
        d_partial = jacobi._partials_from_f(params, out["f_gamma"][ok],
                                            out["thetas"][ok, None], dt)
        from .params import diam_kappa

        below = d_partial[:, -1] < diam_kappa(kappa) - 1e-12
        if below.any():
            m1, m2, m3 = jacobi.concavity_margins(
                out["ts"], out["D"][ok][below], out["Dbar"][ok][below],
                out["J"][ok][below], d_partial[below], params, kappa)
            ray_min = np.nanmin(np.concatenate([m1, m2, m3], axis=-1), axis=-1)
            det_min = np.min(out["det"][ok][below], axis=-1)
            for j, val in enumerate(ray_min):
                val = float(val)
                if val < -tol and det_min[j] < 0.1:
                    # rays whose determinant dips near zero carry large
                    # discretization error; confirm or dismiss on a fine grid
                    idx = np.flatnonzero(ok)[np.flatnonzero(below)[j]]
                    ref = jacobi.refine_ray_margin(space, weight, params,
                                                   kappa, xs[idx], ws[idx],
                                                   Ss[idx])
                    if ref is None:
                        continue
                    val = ref
                margins.append(val)
                if val < worst[0]:
                    idx = np.flatnonzero(ok)[np.flatnonzero(below)[j]]
                    worst = (val, (xs[idx], ws[idx], Ss[idx]))
        done += m
    rep = CheckReport(name="jacobian_concavity", margins=margins,
                      tolerance=tol,
                      provenance={"kappa": kappa, "trials": trials,
                                  "seed": s["seed"], "steps": steps})
    reports = [rep]
    if worst[1] is not None and out_dir is not None:
        x, w, S = worst[1]
        traj = jacobi.integrate_jacobi(space, weight, params,
                                       jacobi.TransportRay(x, w, S), steps)
        _write_trajectory(out_dir / "worst_ray.csv", traj)
        if worst[0] < -tol:
            record = {"x": x.tolist(), "w": w.tolist(), "S": S.tolist(),
                      "margin": worst[0]}
            (out_dir / "counterexample.json").write_text(
                canonical_json(record))
    return reports


def _write_trajectory(path, traj):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "det", "J", "h", "l", "D", "Dbar"])
        for row in traj.as_rows():
            w.writerow([f"{v:.17g}" for v in row])


def _run_twcd(cfg, params, out_dir):
    geometry = _build_geometry(cfg, params)
    dens = cfg.get("densities",
                   [{"kind": "bump", "center": -0.5, "width": 0.4},
                    {"kind": "bump", "center": 0.5, "width": 0.6}])
    rho0 = _axis_density(geometry, dens[0])
    rho1 = _axis_density(geometry, dens[1])
    tol = cfg["tolerances"].get("twcd", 1e-6)
    rep = suites.check_twcd(rho0, rho1, params, cfg["kappa"],
                            cfg["sampling"]["t_grid"], tol=tol)
    if out_dir is not None:
        with open(out_dir / "twcd.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lhs", "rhs", "margin"])
            for row in rep.provenance["rows"]:
                w.writerow([f"{row[k]:.17g}"
                            for k in ("t", "lhs", "rhs", "margin")])
    return [rep]


def _run_bm(cfg, space, weight, params):
    regions = cfg.get("regions")
    tol = cfg["tolerances"].get("bm", 1e-6)
    t_grid = cfg["sampling"]["t_grid"]
    reports = []
    if regions and regions.get("kind") == "ball":
        for t in t_grid:
            pair = suites.RegionPair(
                {"kind": "ball", "radius": regions["radii"][0]},
                {"kind": "ball", "radius": regions["radii"][1]}, t)
            reports.append(suites.check_brunn_minkowski(
                pair, space, weight, params, cfg["kappa"], tol=tol))
    else:
        geometry = _build_geometry(cfg, params)
        bounds = (regions or {}).get("bounds",
                                     [(-1.0, -0.25), (0.25, 1.0)])
        for t in t_grid:
            pair = suites.RegionPair(
                {"kind": "interval", "bounds": tuple(bounds[0])},
                {"kind": "interval", "bounds": tuple(bounds[1])}, t)
            reports.append(suites.check_brunn_minkowski(
                pair, geometry, None, params, cfg["kappa"], tol=tol))
    return reports


def _run_interpolation(cfg, params):
    geometry = _build_geometry(cfg, params)
    icfg = cfg.get("interpolation", {})
    t = icfg.get("t", 0.5)
    p = icfg.get("p", 0.0)
    X = tuple(icfg.get("X", (-1.0, -0.2)))
    Y = tuple(icfg.get("Y", (0.2, 1.0)))
    tol = cfg["tolerances"].get("interpolation", 1e-6)
    psi0 = lambda x: np.exp(-0.5 * ((np.asarray(x) - np.mean(X)) / 0.3) ** 2) \
        * ((np.asarray(x) >= X[0]) & (np.asarray(x) <= X[1]))
    psi1 = lambda y: np.exp(-0.5 * ((np.asarray(y) - np.mean(Y)) / 0.3) ** 2) \
        * ((np.asarray(y) >= Y[0]) & (np.asarray(y) <= Y[1]))
    psi = envelope_psi(geometry, params, cfg["kappa"], psi0, psi1, X, Y, t, p)
    rep = suites.check_interpolation(geometry, params, cfg["kappa"],
                                     psi0, psi1, psi, X, Y, t, p,
                                     seed=cfg["sampling"]["seed"], tol=tol)
    return [rep]


def envelope_psi(geometry, params, kappa, psi0, psi1, X, Y, t, p,
                 resolution: int = 4096, slack: float = 1e-4):
    """Tight admissible middle function for the p-mean hypothesis.

    For each z the hypothesis right-hand side is maximized over the pairs
    (x, y) in X x Y with (1-t)x + ty = z; a relative slack keeps the
    sampled hypothesis safe against interpolation error.
    """
    xs = np.linspace(X[0], X[1], resolution)
    zs = np.linspace((1 - t) * X[0] + t * Y[0],
                     (1 - t) * X[1] + t * Y[1], resolution)
    env = np.zeros_like(zs)
    for i, z in enumerate(zs):
        x = xs
        y = (z - (1 - t) * x) / t
        okay = (y >= Y[0]) & (y <= Y[1])
        if not okay.any():
            continue
        x, y = x[okay], y[okay]
        d_full = geometry.reparam_partial(params, x, y, 1.0)
        d_t = geometry.reparam_partial(params, x, y, t)
        b_fwd = suites._beta_power(params, kappa, d_t, d_full, t)
        b_rev = suites._beta_power(params, kappa, d_full - d_t, d_full, 1 - t)
        a = np.asarray(psi0(x), dtype=float) / b_rev
        b = np.asarray(psi1(y), dtype=float) / b_fwd
        pos = (a > 0.0) & (b > 0.0)
        if not pos.any():
            continue
        a, b = a[pos], b[pos]
        if p == 0.0:
            vals = a ** (1.0 - t) * b ** t
        elif math.isinf(p):
            vals = np.maximum(a, b) if p > 0 else np.minimum(a, b)
        else:
            vals = ((1.0 - t) * a ** p + t * b ** p) ** (1.0 / p)
        env[i] = float(vals.max())
    env *= 1.0 + slack
    env += slack * float(env.max())

    def psi(z):
        return np.interp(np.asarray(z, dtype=float), zs, env,
                         left=0.0, right=0.0) * 1.0

    return psi


def _run_functional(cfg, params):
    geometry = _build_geometry(cfg, params)
    fcfg = cfg.get("functional", {})
    spec = fcfg.get("density", {"kind": "cosine", "amplitude": 0.1})
    rho = _axis_density(geometry, spec)
    f0 = float(geometry.f_vals[0])
    delta = fcfg.get("delta", (1.0 - params.eps) * f0 / (params.n - 1.0))
    tol = cfg["tolerances"].get("functional", 1e-5)
    return [suites.check_hwi_lsi(rho, params, cfg["kappa"], delta, tol=tol),
            suites.check_transport_energy(rho, params, cfg["kappa"], tol=tol)]


def _run_taylor(cfg, space, weight, params, out_dir):
    rng = np.random.default_rng(cfg["sampling"]["seed"])
    x = space.sample_point(rng, cfg["sampling"].get("region"))
    v = space.sample_unit(rng, x)
    reports = []
    margins = []
    for term in taylor.TERMS:
        if term in ("app4_fwd", "app4_rev", "app6") and params.eps == 0.0:
            continue
        chk = taylor.check_series(space, weight, params, cfg["kappa"],
                                  x, v, term)
        if out_dir is not None:
            chk.to_csv(out_dir / f"taylor_{term}.csv")
        slope = chk.slope
        if math.isnan(slope):  # remainder at the noise floor
            margins.append(0.0)
        else:
            margins.append(slope - taylor.SLOPE_MIN)
    reports.append(CheckReport(name="taylor_series", margins=margins,
                               tolerance=0.0,
                               provenance={"x": np.asarray(x).tolist()}))
    if params.N != params.n and not math.isinf(params.eps0):
        grid = np.linspace(-3.0, 3.0, 101)
        reports.append(taylor.check_F_identity(params, 0.7, grid))
    return reports


def _run_limits(cfg, space, weight, params):
    rng = np.random.default_rng(cfg["sampling"]["seed"])
    x = space.sample_point(rng, cfg["sampling"].get("region"))
    v = space.sample_unit(rng, x)
    y = space.geodesic(x, v, 0.4)
    reports = [taylor.check_limit_bound(space, weight, params, 0.5, x, v,
                                        r=0.5, seed=cfg["sampling"]["seed"]),
               coefficients.check_limits(space, weight, params, cfg["kappa"],
                                         x, y, [0.1, 0.05, 0.02, 0.01,
                                                0.005, 0.002, 0.001])]
    return reports


def run_suite(cfg: dict, out_dir) -> list[CheckReport]:
    space, weight, params = _build(cfg)
    suite = cfg["suite"]
    runners = {
        "curvature": lambda: _run_curvature(cfg, space, weight, params),
        "jacobian": lambda: _run_jacobian(cfg, space, weight, params, out_dir),
        "twcd": lambda: _run_twcd(cfg, params, out_dir),
        "bm": lambda: _run_bm(cfg, space, weight, params),
        "interpolation": lambda: _run_interpolation(cfg, params),
        "functional": lambda: _run_functional(cfg, params),
        "taylor": lambda: _run_taylor(cfg, space, weight, params, out_dir),
        "limits": lambda: _run_limits(cfg, space, weight, params),
    }
    if suite == "all":
        reports = []
        for name, fn in runners.items():
            try:
                reports.extend(fn())
            except PreconditionError as exc:
                reports.append(CheckReport(
                    name=name, margins=[], tolerance=0.0, vacuous=True,
                    provenance={"skipped": str(exc)}))
        return reports
    return runners[suite]()


def _report_payload(cfg: dict, rep: CheckReport) -> dict:
    payload = {
        "name": rep.name,
        "params": cfg["params"],
        "kappa": cfg["kappa"],
        "seed": cfg["sampling"]["seed"],
        "margins": [None if math.isnan(m) else m for m in rep.margins],
        "min_margin": None if math.isnan(rep.min_margin) else rep.min_margin,
        "tolerance": rep.tolerance,
        "verdict": rep.verdict,
        "config": cfg,
        "provenance": rep.provenance,
    }
    return payload


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (CdCheckError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["sampling"]["seed"] = args.seed
    out_dir = Path(args.out_dir or cfg.get("out_dir") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        reports = run_suite(cfg, out_dir)
    except PreconditionError as exc:
        print(f"precondition failed: {exc} [{exc.failed}]", file=sys.stderr)
        return 2
    except CdCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    payloads = [_report_payload(cfg, rep) for rep in reports]
    bundle = {"suite": cfg["suite"], "reports": payloads,
              "hash": report_hash({"suite": cfg["suite"],
                                   "reports": payloads}),
              "timestamp": time.time()}
    path = out_dir / f"{cfg['suite']}_report.json"
    path.write_text(canonical_json(bundle))
    failed = [p for p in payloads if p["verdict"] == "fail"]
    if not args.quiet:
        for p in payloads:
            mm = p["min_margin"]
            mm_s = "n/a" if mm is None else f"{mm:.3e}"
            print(f"{p['name']}: {p['verdict']} (min margin {mm_s})")
        print(f"report written to {path}")
    return 1 if failed else 0


def cmd_validate(args) -> int:
    try:
        load_config(args.config)
    except (CdCheckError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print("config ok")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cdcheck",
        description="numerical checks for weighted curvature-dimension"
                    " inequalities")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a suite from a JSON config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--out-dir", default=None)
    run_p.add_argument("--quiet", action="store_true")
    run_p.set_defaults(fn=cmd_run)
    val_p = sub.add_parser("validate", help="schema-check a config")
    val_p.add_argument("--config", required=True)
    val_p.set_defaults(fn=cmd_validate)
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
