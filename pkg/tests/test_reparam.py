import math

import numpy as np
import pytest

from cdcheck.params import validate_params
from cdcheck.reparam import (reparam_distance, reparam_partial,
                             reparam_profile, tau_reparam)
from cdcheck.spaces import (constant_weight, make_space, segment_between,
                            weight_preset)


@pytest.fixture
def flat2():
    return make_space("euclidean", 2)


class TestPartial:
    def test_zero_weight_is_linear(self, flat2):
        p = validate_params(2, 4, 0.5)
        seg = segment_between(flat2, np.zeros(2), np.array([1.3, 0.0]))
        for t in (0.2, 0.5, 0.9):
            val = reparam_partial(flat2, constant_weight(0.0), p, seg, t)
            assert val == pytest.approx(t * 1.3, rel=1e-12)

    def test_constant_weight_scaling(self, flat2):
        p = validate_params(2, 4, 0.5)
        f0 = 0.8
        seg = segment_between(flat2, np.zeros(2), np.array([1.0, 0.5]))
        val = reparam_partial(flat2, constant_weight(f0), p, seg, 0.4)
        expect = 0.4 * seg.length * math.exp(-2 * (1 - 0.5) * f0 / (2 - 1))
        assert val == pytest.approx(expect, rel=1e-12)

    def test_linear_weight_closed_form(self, flat2):
        # f(x) = x1, n=2, eps=0: integrand e^{-2s} along the x1 axis
        p = validate_params(2, 4, 0.0)
        w = weight_preset(flat2, "linear(1.0)")
        L = 0.9
        seg = segment_between(flat2, np.zeros(2), np.array([L, 0.0]))
        val = reparam_partial(flat2, w, p, seg, 1.0)
        assert val == pytest.approx((1 - math.exp(-2 * L)) / 2, rel=1e-10)

    def test_monotone_bound(self, flat2):
        p = validate_params(2, 6, 0.3)
        w = weight_preset(flat2, "quadratic(0.5)")
        rng = np.random.default_rng(0)
        for _ in range(25):
            x, y = rng.normal(size=(2, 2))
            seg = segment_between(flat2, x, y)
            pts = np.array([flat2.geodesic(x, seg.direction, s)
                            for s in np.linspace(0, seg.length, 64)])
            min_f = float(np.min(w.eval(pts)))
            for t in (0.3, 0.7, 1.0):
                val = reparam_partial(flat2, w, p, seg, t)
                assert val <= math.exp(-p.a * min_f) * t * seg.length + 1e-12


class TestDistance:
    def test_coincident_points(self, flat2):
        p = validate_params(2, 4, 0.5)
        w = weight_preset(flat2, "linear(0.5)")
        x = np.array([0.2, 0.3])
        assert reparam_distance(flat2, w, p, x, x) == 0.0

    def test_additivity_split(self, flat2):
        # d_t(x,y) + d_{1-t}(y,x) = d_f(x,y)
        p = validate_params(2, 5, 0.4)
        w = weight_preset(flat2, "quadratic(0.6)")
        rng = np.random.default_rng(1)
        for _ in range(100):
            x, y = rng.normal(size=(2, 2))
            t = rng.uniform(0.05, 0.95)
            seg_xy = segment_between(flat2, x, y)
            seg_yx = segment_between(flat2, y, x)
            full = reparam_partial(flat2, w, p, seg_xy, 1.0)
            a = reparam_partial(flat2, w, p, seg_xy, t)
            b = reparam_partial(flat2, w, p, seg_yx, 1.0 - t)
            assert abs(a + b - full) < 1e-9

    def test_full_length_symmetry(self, flat2):
        p = validate_params(2, 5, 0.4)
        w = weight_preset(flat2, "linear(0.8)")
        rng = np.random.default_rng(2)
        for _ in range(50):
            x, y = rng.normal(size=(2, 2))
            d_xy = reparam_distance(flat2, w, p, x, y)
            d_yx = reparam_distance(flat2, w, p, y, x)
            assert abs(d_xy - d_yx) < 1e-9

    def test_strictly_increasing_in_t(self, flat2):
        p = validate_params(2, 5, 0.4)
        w = weight_preset(flat2, "quadratic(0.5)")
        seg = segment_between(flat2, np.array([-0.5, 0.1]),
                              np.array([0.8, -0.3]))
        ts = np.linspace(0.05, 1.0, 20)
        vals = [reparam_partial(flat2, w, p, seg, t) for t in ts]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_profile_matches_pointwise(self, flat2):
        p = validate_params(2, 5, 0.4)
        w = weight_preset(flat2, "quadratic(0.5)")
        seg = segment_between(flat2, np.zeros(2), np.array([1.1, 0.4]))
        ss, prof = reparam_profile(flat2, w, p, seg)
        for i in range(0, len(ss), 97):
            direct = reparam_partial(flat2, w, p, seg, ss[i] / seg.length)
            assert prof[i] == pytest.approx(direct, abs=1e-9)


class TestHorizon:
    def test_round_sphere(self):
        sp = make_space("sphere", 2)
        p = validate_params(2, 2, 1.0)
        x = np.array([0.0, 0.0, 1.0])
        v = sp.frame(x)[0]
        tau = tau_reparam(sp, constant_weight(0.0), p, x, v)
        assert tau == pytest.approx(math.pi, rel=1e-6)

    def test_flat_infinite(self, flat2):
        p = validate_params(2, 4, 0.5)
        tau = tau_reparam(flat2, constant_weight(0.0), p,
                          np.zeros(2), np.array([1.0, 0.0]))
        assert math.isinf(tau)
