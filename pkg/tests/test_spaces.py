import math

import numpy as np
import pytest

from cdcheck.errors import ConfigError, CutLocusError
from cdcheck.params import validate_params
from cdcheck.spaces import (check_curvature_bound, constant_weight,
                            make_space, ricci_fN, segment_between,
                            weight_preset)


class TestGeodesics:
    def test_euclidean_straight_line(self):
        sp = make_space("euclidean", 2)
        p = sp.geodesic(np.array([0.0, 0.0]), np.array([1.0, 0.0]), 2.0)
        np.testing.assert_allclose(p, [2.0, 0.0], atol=1e-14)

    def test_sphere_antipode(self):
        sp = make_space("sphere", 2)
        north = np.array([0.0, 0.0, 1.0])
        v = sp.frame(north)[0]
        p = sp.geodesic(north, v, math.pi)
        np.testing.assert_allclose(p, -north, atol=1e-12)

    def test_hyperbolic_vertical(self):
        sp = make_space("hyperbolic", 2)
        x = np.array([0.0, 1.0])
        p = sp.geodesic(x, np.array([0.0, 1.0]), 1.0)
        np.testing.assert_allclose(p, [0.0, math.e], rtol=1e-12)

    @pytest.mark.parametrize("kind,dim", [("euclidean", 3), ("sphere", 2),
                                          ("hyperbolic", 2)])
    def test_unit_speed(self, kind, dim):
        sp = make_space(kind, dim)
        rng = np.random.default_rng(5)
        x = sp.sample_point(rng)
        v = sp.sample_unit(rng, x)
        h = 1e-5
        ts = np.linspace(0.1, 1.0, 7)
        for t in ts:
            a = sp.geodesic(x, v, t - h)
            b = sp.geodesic(x, v, t + h)
            speed = sp.distance(a, b) / (2 * h)
            assert speed == pytest.approx(1.0, abs=1e-8)


class TestLogMap:
    def test_euclidean_example(self):
        sp = make_space("euclidean", 2)
        v, L = sp.log(np.array([0.0, 0.0]), np.array([3.0, 4.0]))
        np.testing.assert_allclose(v, [0.6, 0.8], atol=1e-14)
        assert L == pytest.approx(5.0)

    def test_degenerate_pair(self):
        sp = make_space("sphere", 2)
        x = np.array([0.0, 0.0, 1.0])
        v, L = sp.log(x, x)
        assert L == 0.0

    @pytest.mark.parametrize("kind,dim", [("euclidean", 3), ("sphere", 2),
                                          ("hyperbolic", 2)])
    def test_roundtrip(self, kind, dim):
        sp = make_space(kind, dim)
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(1000):
            x = sp.sample_point(rng)
            y = sp.sample_point(rng)
            if sp.kind == "sphere" and sp.distance(x, y) > math.pi - 1e-3:
                continue
            v, L = sp.log(x, y)
            z = sp.geodesic(x, v, L)
            worst = max(worst, float(np.max(np.abs(z - y))))
        assert worst < 1e-10

    def test_cut_locus_rejected(self):
        sp = make_space("sphere", 2)
        x = np.array([0.0, 0.0, 1.0])
        with pytest.raises(CutLocusError):
            segment_between(sp, x, -x)


class TestWeights:
    @pytest.mark.parametrize("kind,dim,preset", [
        ("euclidean", 2, "linear(0.7)"),
        ("euclidean", 3, "quadratic(0.4)"),
        ("sphere", 2, "cosine(0.3)"),
        ("sphere", 2, "linear(0.2)"),
    ])
    def test_gradient_matches_fd(self, kind, dim, preset):
        sp = make_space(kind, dim)
        w = weight_preset(sp, preset)
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = sp.sample_point(rng)
            if sp.kind == "sphere" and abs(x[-1]) > 0.95:
                continue
            v = sp.sample_unit(rng, x)
            h = 1e-6
            fd = (w.eval(sp.geodesic(x, v, h))
                  - w.eval(sp.geodesic(x, v, -h))) / (2 * h)
            assert np.dot(w.grad(x), v) == pytest.approx(fd, abs=1e-6)

    @pytest.mark.parametrize("kind,dim,preset", [
        ("euclidean", 2, "quadratic(0.5)"),
        ("sphere", 2, "cosine(0.4)"),
        ("sphere", 2, "linear(0.2)"),
    ])
    def test_hessian_matches_geodesic_fd(self, kind, dim, preset):
        # nabla^2 f(v,v) = (f o gamma)''(0) for unit-speed geodesics
        sp = make_space(kind, dim)
        w = weight_preset(sp, preset)
        rng = np.random.default_rng(4)
        for _ in range(20):
            x = sp.sample_point(rng)
            if sp.kind == "sphere" and abs(x[-1]) > 0.9:
                continue
            v = sp.sample_unit(rng, x)
            h = 1e-4
            fd = (w.eval(sp.geodesic(x, v, h)) - 2 * w.eval(x)
                  + w.eval(sp.geodesic(x, v, -h))) / h**2
            assert w.hess(x, v, v) == pytest.approx(fd, abs=5e-6)

    def test_hessian_symmetry(self):
        sp = make_space("euclidean", 3)
        w = weight_preset(sp, "quadratic(0.8)")
        rng = np.random.default_rng(9)
        x = sp.sample_point(rng)
        u = sp.sample_unit(rng, x)
        v = sp.sample_unit(rng, x)
        assert w.hess(x, u, v) == pytest.approx(w.hess(x, v, u), rel=1e-6)


class TestRicci:
    def test_flat_unweighted(self):
        sp = make_space("euclidean", 2)
        w = constant_weight(0.0)
        p = validate_params(2, math.inf, 0.0)
        x = np.array([0.3, -0.2])
        v = np.array([1.0, 0.0])
        assert ricci_fN(sp, w, p, x, v) == pytest.approx(0.0, abs=1e-12)

    def test_round_sphere(self):
        sp = make_space("sphere", 2)
        w = constant_weight(0.0)
        p = validate_params(2, 2, 1.0)
        rng = np.random.default_rng(1)
        x = sp.sample_point(rng)
        v = sp.sample_unit(rng, x)
        assert ricci_fN(sp, w, p, x, v) == pytest.approx(1.0, rel=1e-10)

    def test_linear_weight_N1(self):
        # f = x1, N = 1: hessian 0, -g(grad f, v)^2/(1-2) = +v1^2
        sp = make_space("euclidean", 2)
        w = weight_preset(sp, "linear(1.0)")
        p = validate_params(2, 1.0, 0.0)
        x = np.array([0.4, 0.1])
        for v1 in (1.0, 0.6, 0.0):
            v = np.array([v1, math.sqrt(max(0.0, 1 - v1**2))])
            assert ricci_fN(sp, w, p, x, v) == pytest.approx(v1**2, abs=1e-8)

    def test_large_N_converges_to_infinite(self):
        sp = make_space("euclidean", 3)
        w = weight_preset(sp, "quadratic(0.5)")
        rng = np.random.default_rng(2)
        x = sp.sample_point(rng)
        v = sp.sample_unit(rng, x)
        big = ricci_fN(sp, w, validate_params(3, 1e6, 0.5), x, v)
        inf = ricci_fN(sp, w, validate_params(3, math.inf, 0.5), x, v)
        assert abs(big - inf) < 1e-4

    def test_N_equals_n_requires_constant_weight(self):
        sp = make_space("euclidean", 2)
        w = weight_preset(sp, "linear(1.0)")
        with pytest.raises(ConfigError):
            ricci_fN(sp, w, validate_params(2, 2, 1.0),
                     np.array([0.0, 0.0]), np.array([1.0, 0.0]))


class TestCurvatureBound:
    def test_round_sphere_sharp(self):
        sp = make_space("sphere", 2)
        rep = check_curvature_bound(sp, constant_weight(0.0),
                                    validate_params(2, 2, 1.0), 1.0,
                                    {"count": 100, "seed": 0})
        assert rep.verdict == "pass"
        assert abs(rep.min_margin) < 1e-10

    def test_flat_kappa_zero(self):
        sp = make_space("euclidean", 3)
        rep = check_curvature_bound(sp, constant_weight(0.0),
                                    validate_params(3, 5, 1.0), 0.0,
                                    {"count": 100, "seed": 0})
        assert rep.verdict == "pass"
        assert abs(rep.min_margin) < 1e-12

    def test_flat_positive_kappa_fails(self):
        sp = make_space("euclidean", 3)
        p = validate_params(3, 5, 1.0)
        rep = check_curvature_bound(sp, constant_weight(0.0), p, 0.1,
                                    {"count": 100, "seed": 0})
        assert rep.verdict == "fail"
        assert rep.min_margin == pytest.approx(-0.1 * p.inv_c, rel=1e-12)


class TestPointValidity:
    def test_sphere_points_unit_norm(self):
        sp = make_space("sphere", 2)
        rng = np.random.default_rng(7)
        for _ in range(50):
            x = sp.sample_point(rng)
            assert abs(np.linalg.norm(x) - 1.0) < 1e-12

    def test_hyperbolic_points_in_model(self):
        sp = make_space("hyperbolic", 2)
        rng = np.random.default_rng(8)
        for _ in range(50):
            assert sp.sample_point(rng)[-1] > 0.0
