import math

import numpy as np
import pytest
from scipy.integrate import quad

from selfsim.interval import Interval
from selfsim.trigcalc import (
    EvenCosineDivision,
    IrreducibleWeight,
    MeshTooCoarse,
    Trig2,
    TrigSeries1D,
    Weight1D,
    WeightSpec,
    div_by_cos,
    div_by_sin,
    fejer_smooth,
    inner,
    l2_inner,
    linf_envelope,
    load_fields,
    save_fields,
    tp_diff,
    tp_mul,
)


def random_field(rng, pmax=6, qmax=5, scale=1.0):
    f = Trig2.zeros(pmax, qmax)
    f.data[:] = rng.standard_normal(f.data.shape) * scale
    f.data[1, 0, :, :] = 0.0
    f.data[:, :, 1, 0] = 0.0
    return f


class TestExpRoundtrip:
    def test_roundtrip_exact(self):
        rng = np.random.default_rng(0)
        f = random_field(rng)
        g = Trig2._from_exp(*f._to_exp())
        assert np.allclose(g.data, f.data, rtol=0, atol=1e-15)


class TestMul:
    def test_sin_squared(self):
        f = Trig2.mode("sc", 1, 0, 1.0)            # sin(b)
        p = tp_mul(f, f)                           # (1 - cos 2b)/2
        assert abs(p.block("cc")[0, 0] - 0.5) < 1e-15
        assert abs(p.block("cc")[2, 0] + 0.5) < 1e-15
        assert np.sum(np.abs(p.data)) == pytest.approx(1.0, abs=1e-14)

    def test_identity(self):
        rng = np.random.default_rng(1)
        f = random_field(rng)
        one = Trig2.mode("cc", 0, 0, 1.0)
        g = tp_mul(f, one)
        assert np.allclose(g.data[:, : f.pmax + 1, :, : f.qmax + 1], f.data, atol=1e-15)

    def test_pointwise_oracle(self):
        rng = np.random.default_rng(2)
        f = random_field(rng)
        g = random_field(rng, pmax=4, qmax=7)
        p = tp_mul(f, g)
        bs = rng.uniform(0, math.pi / 2, 100)
        ts = rng.uniform(0, math.pi / 2, 100)
        lhs = p.eval_points(bs, ts)
        rhs = f.eval_points(bs, ts) * g.eval_points(bs, ts)
        assert np.max(np.abs(lhs - rhs)) < 1e-13

    def test_rad_encloses(self):
        rng = np.random.default_rng(3)
        f = random_field(rng)
        g = random_field(rng)
        p = tp_mul(f, g)
        assert np.all(p.rad >= 0)
        assert np.max(p.rad) < 1e-10


class TestDiff:
    def test_sin3(self):
        f = Trig2.mode("sc", 3, 0, 1.0)
        d = tp_diff(f, 0)
        assert d.block("cc")[3, 0] == pytest.approx(3.0)

    def test_cos2_second(self):
        f = Trig2.mode("cc", 0, 2, 1.0)
        d = tp_diff(f, 1, 2)
        assert d.block("cc")[0, 2] == pytest.approx(-4.0)

    def test_fd_oracle(self):
        rng = np.random.default_rng(4)
        f = random_field(rng)
        d = tp_diff(f, 0)
        h = 1e-5
        bs = rng.uniform(0.1, math.pi / 2 - 0.1, 50)
        ts = rng.uniform(0.1, math.pi / 2 - 0.1, 50)
        fd = (f.eval_points(bs + h, ts) - f.eval_points(bs - h, ts)) / (2 * h)
        ex = d.eval_points(bs, ts)
        assert np.max(np.abs(fd - ex) / (1 + np.abs(ex))) < 1e-6


class TestDivision:
    def test_sin3_over_sin(self):
        q = div_by_sin(TrigSeries1D("sin-odd", [0.0, 1.0]))   # sin(3x)/sin(x)
        assert q.basis == "cos-even"
        assert np.allclose(q.coeffs[:2], [1.0, 2.0])

    def test_sin2_over_sin(self):
        q = div_by_sin(TrigSeries1D("sin-even", [1.0]))       # sin(2x)/sin(x)
        assert q.basis == "cos-odd"
        assert q.coeffs[0] == pytest.approx(2.0)

    def test_sin_over_sin(self):
        q = div_by_sin(TrigSeries1D("sin-odd", [1.0]))
        assert q.coeffs[0] == pytest.approx(1.0)
        assert np.allclose(q.coeffs[1:], 0.0)

    def test_reconstruct(self):
        rng = np.random.default_rng(5)
        c = rng.standard_normal(6)
        f = TrigSeries1D("sin-odd", c)
        q = div_by_sin(f)
        sinb = Trig2.mode("sc", 1, 0, 1.0)
        back = tp_mul(q.to_field(0), sinb)
        orig = f.to_field(0).padded(back.pmax, back.qmax)
        assert np.max(np.abs(back.data - orig.data)) < 1e-14

    def test_cos3_over_cos(self):
        q = div_by_cos(TrigSeries1D("cos-odd", [0.0, 1.0]))   # cos(3x)/cos(x)
        assert q.basis == "cos-even"
        assert np.allclose(q.coeffs[:2], [-1.0, 2.0])

    def test_cos_over_cos(self):
        q = div_by_cos(TrigSeries1D("cos-odd", [1.0]))
        assert q.coeffs[0] == pytest.approx(1.0)

    def test_cos5_pointwise(self):
        q = div_by_cos(TrigSeries1D("cos-odd", [0.0, 0.0, 1.0]))
        xs = np.linspace(0.05, math.pi / 2 - 0.05, 100)
        lhs = q.eval(xs)
        rhs = np.cos(5 * xs) / np.cos(xs)
        assert np.max(np.abs(lhs - rhs)) < 1e-13

    def test_even_cos_rejected(self):
        with pytest.raises(EvenCosineDivision):
            div_by_cos(TrigSeries1D("cos-even", [0.0, 1.0]))

    def test_sin_even_over_cos(self):
        q = div_by_cos(TrigSeries1D("sin-even", [0.0, 1.0]))  # sin(4x)/cos(x)
        xs = np.linspace(0.05, math.pi / 2 - 0.05, 50)
        assert np.max(np.abs(q.eval(xs) - np.sin(4 * xs) / np.cos(xs))) < 1e-13


class TestInner:
    def test_sin_sq(self):
        f = Trig2.mode("sc", 1, 0, 1.0)
        v = l2_inner(f, f)
        # int_0^{pi/2} sin^2 db * (pi/2 in t) = pi/4 * pi/2
        exact = (math.pi / 4) * (math.pi / 2)
        assert v.contains(exact) or abs(v.mid() - exact) < 1e-14
        assert v.width() < 1e-12

    def test_orthogonality(self):
        f = Trig2.mode("sc", 2, 0, 1.0)
        g = Trig2.mode("sc", 4, 0, 1.0)
        v = l2_inner(f, g)
        assert v.contains(0.0) and v.width() < 1e-13

    def test_vs_quadrature_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(12):
            f = random_field(rng, 4, 3)
            g = random_field(rng, 3, 4)
            v = l2_inner(f, g, WeightSpec(sin_t=1))

            def ft(b):
                return quad(lambda t: f.eval_points([b], [t])[0]
                            * g.eval_points([b], [t])[0] * math.sin(t),
                            0, math.pi / 2, epsabs=1e-13, limit=200)[0]

            oracle = quad(ft, 0, math.pi / 2, epsabs=1e-12, limit=200)[0]
            assert abs(v.mid() - oracle) < 1e-10
            assert v.lo - 1e-10 <= oracle <= v.hi + 1e-10

    def test_symmetry_bilinear(self):
        rng = np.random.default_rng(7)
        f = random_field(rng, 3, 3)
        g = random_field(rng, 3, 3)
        a = l2_inner(f, g)
        b = l2_inner(g, f)
        assert abs(a.mid() - b.mid()) < 1e-13
        two_f = f.scaled(2.0)
        c = l2_inner(two_f, g)
        assert abs(c.mid() - 2 * a.mid()) < 1e-12

    def test_positivity(self):
        rng = np.random.default_rng(8)
        f = random_field(rng, 5, 4)
        v = l2_inner(f, f)
        assert v.hi > 0 and v.lo > -1e-12

    def test_parseval_unit_weight(self):
        # sin-odd modes are orthogonal on the quarter period:
        # <f,f> = sum c_k^2 * (pi/4) * (pi/2)
        c = np.array([0.3, -1.2, 0.7])
        f = Trig2.zeros(5, 0)
        f.data[1, [1, 3, 5], 0, 0] = c
        v = l2_inner(f, f)
        exact = np.sum(c ** 2) * (math.pi / 4) * (math.pi / 2)
        assert abs(v.mid() - exact) < 1e-12

    def test_negative_exponent_weight(self):
        # <sin(2b), cos(b)> with weight 1/sin(b): the product is sin-type
        f = Trig2.mode("sc", 2, 0, 1.0)
        g = Trig2.mode("cc", 1, 0, 1.0)
        v = l2_inner(f, g, WeightSpec(sin_b=-1))
        oracle = quad(lambda b: np.sin(2 * b) * np.cos(b) / np.sin(b),
                      0, math.pi / 2)[0] * (math.pi / 2)
        assert abs(v.mid() - oracle) < 1e-12

    def test_irreducible(self):
        f = Trig2.mode("cc", 2, 0, 1.0)
        with pytest.raises((IrreducibleWeight, EvenCosineDivision)):
            l2_inner(f, f, WeightSpec(sin_b=-1))


class TestEnvelope:
    def test_constant_mode(self):
        f = TrigSeries1D("cos-even", [1.0])
        b = linf_envelope(f, mesh=64)
        assert 1.0 <= b.hi <= 1.0 + 1e-10

    def test_sin_n1(self):
        f = TrigSeries1D("sin-odd", [1.0])
        b = linf_envelope(f, mesh=4096)
        assert 1.0 <= b.hi <= 1.001

    def test_mesh_too_coarse(self):
        f = TrigSeries1D("sin-even", np.zeros(300))
        f.coeffs[-1] = 1.0   # wavenumber 600
        with pytest.raises(MeshTooCoarse):
            linf_envelope(f, mesh=300)

    def test_soundness_random(self):
        rng = np.random.default_rng(9)
        xs = np.linspace(0, math.pi / 2, 100001)
        for _ in range(20):
            n = int(rng.integers(1, 40))
            f = TrigSeries1D("sin-odd", rng.standard_normal(n))
            b = linf_envelope(f, mesh=4096)
            dense = np.max(np.abs(f.eval(xs)))
            assert b.hi >= dense
            assert b.hi <= 1.02 * dense + 1e-12

    def test_sup_bound_2d(self):
        rng = np.random.default_rng(10)
        f = random_field(rng, 5, 4)
        b = f.sup_bound(mesh_b=512, mesh_t=256)
        bs = rng.uniform(0, math.pi / 2, 400)
        ts = rng.uniform(0, math.pi / 2, 400)
        dense = np.max(np.abs(f.eval_points(bs, ts)))
        assert b.hi >= dense


class TestFejer:
    def test_multipliers(self):
        f = TrigSeries1D("cos-even", np.ones(5))   # wavenumbers 0,2,4,6,8
        g = fejer_smooth(f, 8)
        assert g.coeffs[0] == pytest.approx(1.0)   # k = 0
        assert g.coeffs[4] == pytest.approx(0.0)   # k = N
        assert g.coeffs[1] == pytest.approx(0.75)  # k = 2, 1 - 2/8

    def test_positivity_preserved(self):
        rng = np.random.default_rng(11)
        xs = np.linspace(0, math.pi / 2, 2000)
        for _ in range(10):
            n = int(rng.integers(2, 10))
            c = rng.standard_normal(n)
            f = TrigSeries1D("cos-even", c)
            vals = f.eval(xs)
            shift = float(-vals.min()) + 0.1
            f.coeffs[0] += shift                   # now f >= 0.1 on the grid
            g = fejer_smooth(f, 2 * f.max_wavenumber() + 2)
            # smoothing with the positive kernel keeps nonnegativity
            assert np.min(g.eval(xs)) > -1e-9


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(12)
        f = random_field(rng, 4, 3)
        p = tmp_path / "field.json"
        save_fields(str(p), {"ur": f}, parity="even", meta={"note": "test"})
        fields, parity, meta = load_fields(str(p))
        assert parity == "even"
        assert np.array_equal(fields["ur"].data, f.data)
