import math

import numpy as np
import pytest

from cdcheck.coefficients import (b_coeff, beta, check_limits,
                                  classical_distortion, frak_b)
from cdcheck.params import s_kappa, validate_params
from cdcheck.spaces import constant_weight, make_space, weight_preset


@pytest.fixture
def flat2():
    return make_space("euclidean", 2)


class TestBeta:
    def test_unit_regime_at_coincidence(self, flat2):
        p = validate_params(2, 4, 0.5)
        x = np.array([0.1, 0.2])
        b = beta(flat2, constant_weight(0.0), p, 1.0, 0.5, x, x)
        assert b.value == 1.0
        assert b.regime == "unit"

    def test_flat_constant_weight(self, flat2):
        # kappa = 0 with constant f: s_0 is linear so the ratio is 1
        p = validate_params(2, 4, 0.5)
        x = np.zeros(2)
        y = np.array([0.8, 0.3])
        for t in (0.2, 0.5, 0.8):
            b = beta(flat2, constant_weight(0.7), p, 0.0, t, x, y)
            assert b.value == pytest.approx(1.0, rel=1e-12)
            assert b.regime == "finite"

    def test_classical_reduction(self, flat2):
        # eps = 1: d_t = t d, so beta is the classical distortion with
        # exponent 1/c = N - 1, for any weight
        w = weight_preset(flat2, "quadratic(0.4)")
        rng = np.random.default_rng(0)
        for _ in range(200):
            N = rng.uniform(2.0, 12.0)
            p = validate_params(2, N, 1.0)
            x, y = 0.7 * rng.normal(size=(2, 2))
            if np.allclose(x, y):
                continue
            t = rng.uniform(0.1, 0.9)
            kappa = rng.uniform(-1.0, 1.0)
            d = float(np.linalg.norm(x - y))
            if kappa > 0 and d >= math.pi / math.sqrt(kappa):
                continue
            got = beta(flat2, w, p, kappa, t, x, y)
            ref = classical_distortion(kappa, N, t, d)
            assert got.value == pytest.approx(ref, rel=1e-10)

    def test_infinite_regime(self, flat2):
        # large kappa pushes d_f past the conjugate diameter
        p = validate_params(2, 4, 0.5)
        x = np.zeros(2)
        y = np.array([2.0, 0.0])
        b = beta(flat2, constant_weight(0.0), p, 9.0, 0.5, x, y)
        assert b.regime == "infinite"
        assert math.isinf(b.value)

    def test_regime_monotone_in_kappa(self, flat2):
        p = validate_params(2, 4, 0.5)
        x = np.zeros(2)
        y = np.array([1.5, 0.0])
        regimes = [beta(flat2, constant_weight(0.0), p, k, 0.5, x, y).regime
                   for k in np.linspace(0.5, 8.0, 30)]
        flipped = regimes.index("infinite") if "infinite" in regimes else len(regimes)
        assert all(r == "finite" for r in regimes[:flipped])
        assert all(r == "infinite" for r in regimes[flipped:])

    def test_power_finite_positive(self, flat2):
        p = validate_params(2, 4, 0.5)
        b = beta(flat2, constant_weight(0.0), p, 0.5, 0.3,
                 np.zeros(2), np.array([1.0, 0.2]))
        val = b.power(p.c_ratio)
        assert 0.0 < val < math.inf


class TestSectionCoefficients:
    def test_constant_weight_flat(self, flat2):
        p = validate_params(2, 4, 0.5)
        x = np.zeros(2)
        y = np.array([0.9, 0.1])
        w = constant_weight(0.5)
        assert b_coeff(flat2, w, p, 0.0, x, y) == pytest.approx(1.0, rel=1e-10)
        assert frak_b(flat2, w, p, 0.0, x, y) == pytest.approx(0.0, abs=1e-10)

    def test_sphere_quarter_turn(self):
        # f = 0, kappa = 1, d = pi/2: s_1(d) = 1, c_1(d) = 0
        sp = make_space("sphere", 2)
        p = validate_params(2, 4, 0.5)
        x = np.array([0.0, 0.0, 1.0])
        y = np.array([1.0, 0.0, 0.0])
        w = constant_weight(0.0)
        expect_b = (math.pi / 2) ** p.inv_c
        assert b_coeff(sp, w, p, 1.0, x, y) == pytest.approx(expect_b, rel=1e-9)
        assert frak_b(sp, w, p, 1.0, x, y) == pytest.approx(
            -1.0 / (p.c + 1.0), abs=1e-9)


class TestLimits:
    def test_constant_weight_exact_at_kappa0(self, flat2):
        p = validate_params(2, 4, 0.5)
        w = constant_weight(0.3)
        x = np.zeros(2)
        y = np.array([1.0, 0.0])
        # beta_t is identically the t->0 limit coefficient for kappa = 0
        for t in (0.5, 0.1, 0.01):
            bt = beta(flat2, w, p, 0.0, t, x, y)
            assert bt.value == pytest.approx(b_coeff(flat2, w, p, 0.0, x, y)
                                             ** 0.0 * 1.0, rel=1e-12)

    def test_extrapolated_limits(self):
        sp = make_space("sphere", 2)
        p = validate_params(2, 4, 0.5)
        w = weight_preset(sp, "cosine(0.2)")
        rng = np.random.default_rng(3)
        x = sp.sample_point(rng)
        v = sp.sample_unit(rng, x)
        y = sp.geodesic(x, v, 0.7)
        rep = check_limits(sp, w, p, 0.8, x, y,
                           [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001])
        assert rep.verdict == "pass"
