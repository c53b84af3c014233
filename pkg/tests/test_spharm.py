import math
from fractions import Fraction

import numpy as np
import pytest

from selfsim.spharm import (
    PowerRadial,
    VSHExpansion,
    VSHIndex,
    admissible_degrees,
    dlegendre_sin_coeffs,
    legendre_cos_coeffs,
    legendre_eval,
    mu,
    sph_operator,
    synthesize_components,
    vsh_inner,
)
from selfsim.trigcalc import TrigSeries1D


class TestLegendre:
    def test_p0(self):
        assert legendre_eval(0, 0.37) == 1.0

    def test_endpoint(self):
        for l in range(21):
            assert abs(legendre_eval(l, 1.0) - 1.0) < 1e-12

    def test_rodrigues_oracle(self):
        # P_5(x) = (63 x^5 - 70 x^3 + 15 x)/8
        x = 0.3
        exact = (63 * x ** 5 - 70 * x ** 3 + 15 * x) / 8
        assert abs(legendre_eval(5, x) - exact) < 1e-13

    def test_cos_series_matches_eval(self):
        ts = np.linspace(0, math.pi, 57)
        for l in range(12):
            c = legendre_cos_coeffs(l)
            series = np.cos(ts[:, None] * np.arange(l + 1)[None, :]) @ c
            direct = np.array([legendre_eval(l, math.cos(t)) for t in ts])
            assert np.max(np.abs(series - direct)) < 1e-12

    def test_sin_series_is_derivative(self):
        ts = np.linspace(0.1, math.pi - 0.1, 41)
        h = 1e-6
        for l in range(1, 10):
            d = dlegendre_sin_coeffs(l)
            series = np.sin(ts[:, None] * np.arange(len(d))[None, :]) @ d
            fd = np.array([(legendre_eval(l, math.cos(t + h))
                            - legendre_eval(l, math.cos(t - h))) / (2 * h) for t in ts])
            assert np.max(np.abs(series - fd)) < 1e-6


class TestVSH:
    def test_inner_y2(self):
        v = vsh_inner(VSHIndex(2, "Y"), VSHIndex(2, "Y"))
        assert v == pytest.approx(2.0 / 5.0)

    def test_cross_zero(self):
        assert vsh_inner(VSHIndex(3, "X"), VSHIndex(2, "X")) == 0.0
        assert vsh_inner(VSHIndex(2, "X"), VSHIndex(2, "Y")) == 0.0

    def test_z1(self):
        assert vsh_inner(VSHIndex(1, "Z"), VSHIndex(1, "Z")) == pytest.approx(4.0 / 3.0)

    def test_numeric_orthogonality(self):
        # quadrature check of the closed-form constants up to l = 10
        ts = np.linspace(0, math.pi, 20001)
        w = np.sin(ts)
        for l in range(1, 11):
            cY = legendre_cos_coeffs(l)
            y = np.cos(ts[:, None] * np.arange(l + 1)[None, :]) @ cY
            val = np.trapezoid(y * y * w, ts)
            assert abs(val - 2.0 / (2 * l + 1)) < 1e-6
            dX = dlegendre_sin_coeffs(l)
            x = np.sin(ts[:, None] * np.arange(l + 1)[None, :]) @ dX
            val = np.trapezoid(x * x * w, ts)
            assert abs(val - 2.0 * mu(l) / (2 * l + 1)) < 1e-5

    def test_excluded_kinds(self):
        with pytest.raises(ValueError):
            VSHIndex(0, "X")

    def test_mu(self):
        assert mu(2) == 6


class TestOperators:
    def test_lap_p_harmonic_powers(self):
        for l in range(6):
            e = VSHExpansion("U", {("Y", l): PowerRadial(1.0, l)})
            out = sph_operator(e, "lap_p")
            assert out[l].coeff == pytest.approx(0.0)

    def test_grad_p(self):
        e = VSHExpansion("U", {("Y", 2): PowerRadial(1.0, 3)})
        gy, gx = sph_operator(e, "grad_p")[2]
        assert (gy.coeff, gy.expo) == (3.0, 2)
        assert (gx.coeff, gx.expo) == (1.0, 2)

    def test_divergence_bracket_single_mode(self):
        # uY = sin(b), uX chosen from the coupling rule for a lone mode
        l = 2
        m_l = mu(2 * l)
        uY = TrigSeries1D("sin-odd", [1.0])
        uX = TrigSeries1D("sin-odd", [1.5 / m_l, 0.5 / m_l])
        from selfsim.spharm import divergence_bracket
        D = divergence_bracket(uY, uX, 2 * l)
        assert np.max(np.abs(D.data)) < 1e-14


class TestParityAndSynthesis:
    def test_admissible(self):
        assert admissible_degrees("U", "Y", 6) == [2, 4, 6]
        assert admissible_degrees("U", "Z", 6) == [1, 3, 5]
        assert admissible_degrees("v", "Y", 6) == [1, 3, 5]
        assert admissible_degrees("v", "Z", 6) == [2, 4, 6]

    def test_reflection_parity(self):
        # even-in-z field: u_r, u_phi even under t -> pi - t, u_t odd
        rng = np.random.default_rng(0)
        exp = {}
        for l in admissible_degrees("U", "Y", 4):
            exp[("Y", l)] = TrigSeries1D("sin-odd", rng.standard_normal(3))
            exp[("X", l)] = TrigSeries1D("sin-odd", rng.standard_normal(3))
        for l in admissible_degrees("U", "Z", 4):
            exp[("Z", l)] = TrigSeries1D("sin-odd", rng.standard_normal(3))
        ur, ut, up = synthesize_components(exp, "U")
        bs = rng.uniform(0, math.pi / 2, 50)
        ts = rng.uniform(0, math.pi / 2, 50)
        # reflection across t = pi/2 within the stored quarter domain
        assert np.allclose(ur.eval_points(bs, math.pi - ts), ur.eval_points(bs, ts), atol=1e-12)
        assert np.allclose(ut.eval_points(bs, math.pi - ts), -ut.eval_points(bs, ts), atol=1e-12)
        assert np.allclose(up.eval_points(bs, math.pi - ts), up.eval_points(bs, ts), atol=1e-12)

    def test_synthesis_pointwise(self):
        exp = {("Y", 2): TrigSeries1D("sin-odd", [0.7, -0.2])}
        ur, _, _ = synthesize_components(exp, "U")
        b, t = 0.4, 0.9
        expect = (0.7 * math.sin(b) - 0.2 * math.sin(3 * b)) * legendre_eval(2, math.cos(t))
        assert abs(ur.eval_points([b], [t])[0] - expect) < 1e-14
