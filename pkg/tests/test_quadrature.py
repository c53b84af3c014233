import math

import mpmath
import numpy as np
import pytest

from selfsim.interval import Interval
from selfsim.quadrature import (
    Const,
    DepthCapReached,
    Power,
    Prod,
    QuadSpec,
    RangeReport,
    RegBessel,
    Sum,
    Trig,
    X,
    build_range_report,
    composite4,
    quad_error_bound,
    range_eval,
    reg_bessel_enclose,
    reg_bessel_point,
)

mpmath.mp.dps = 40


class TestComposite:
    def test_cubic_exact(self):
        spec = QuadSpec(n_panels=4, a=0.0, b=1.0)
        v = composite4(lambda x: x ** 3, spec)
        assert abs(v - 0.25) < 1e-15

    def test_sin_integral(self):
        spec = QuadSpec(n_panels=64)
        v = composite4(np.sin, spec)
        h = spec.h
        assert abs(v - 1.0) < h ** 4

    def test_zero(self):
        spec = QuadSpec(n_panels=8)
        assert composite4(lambda x: 0.0 * np.asarray(x), spec) == 0.0


class TestRegBessel:
    def test_point_values(self):
        for l in range(6):
            for y in (0.0, 0.3, 2.0, 7.5, 20.0):
                exact = (mpmath.besselj(l + mpmath.mpf(1) / 2, y) / mpmath.mpf(y) ** (l + 0.5)
                         if y > 0 else 1 / (2 ** (l + mpmath.mpf(1) / 2) * mpmath.gamma(l + mpmath.mpf(3) / 2)))
                got = reg_bessel_point(l, y)
                assert abs(got - float(exact)) < 1e-13 * (1 + abs(float(exact)))

    def test_enclosure_sound(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            l = int(rng.integers(0, 7))
            a = float(rng.uniform(0.0, 25.0))
            b = a + float(rng.uniform(0.0, 0.4))
            enc = reg_bessel_enclose(l, Interval(a, b))
            for y in np.linspace(max(a, 1e-12), b, 5):
                exact = float(mpmath.besselj(l + mpmath.mpf(1) / 2, y) / mpmath.mpf(y) ** (l + 0.5))
                assert enc.lo - 1e-14 <= exact <= enc.hi + 1e-14, (l, a, b)

    def test_derivative_identity(self):
        # d/dy g_l = -y g_{l+1}
        h = 1e-6
        for l in range(4):
            for y in (0.5, 3.0, 9.0):
                fd = (reg_bessel_point(l, y + h) - reg_bessel_point(l, y - h)) / (2 * h)
                assert abs(fd + y * reg_bessel_point(l + 1, y)) < 1e-7


class TestRangeEval:
    def test_sin_range(self):
        rep = range_eval(Trig("sin"), Interval(0.0, math.pi / 2), 0, tol=1.2)
        lo, hi, blo, bhi = rep.orders[0][0]
        assert blo <= 0.0 and bhi >= 1.0
        assert bhi - blo <= 1.2

    def test_shrinks_under_bisection(self):
        rep1 = range_eval(Trig("sin"), Interval(0.0, math.pi / 2), 0, tol=1.2)
        rep2 = range_eval(Trig("sin"), Interval(0.0, math.pi / 2), 0, tol=0.4)
        w1 = max(b[3] - b[2] for b in rep1.orders[0])
        w2 = max(b[3] - b[2] for b in rep2.orders[0])
        assert w2 < w1

    def test_const_derivative(self):
        rep = range_eval(Const(3.0), Interval(0.0, 1.0), 2, tol=1e-30)
        lo, hi, blo, bhi = rep.orders[2][0]
        assert blo == 0.0 and bhi == 0.0

    def test_leibniz_assembly(self):
        rng = np.random.default_rng(1)
        f = Sum((Trig("sin", 2.0), Prod((Const(0.3), Trig("cos", 5.0)))))
        g = Sum((Trig("cos", 1.0), Prod((Const(-0.2), Trig("sin", 3.0)))))
        prod = Prod((f, g))
        d = prod.diff()
        xs = rng.uniform(0, math.pi / 2, 50)
        h = 1e-6
        fd = (prod(xs + h) - prod(xs - h)) / (2 * h)
        assert np.max(np.abs(d(xs) - fd)) < 1e-7

    def test_depth_cap(self):
        expr = Trig("sin", 200.0)
        with pytest.raises(DepthCapReached):
            range_eval(expr, Interval(0.0, math.pi / 2), 0, tol=1e-30, depth_cap=3)

    def test_bessel_expr_derivative_vs_fd(self):
        expr = Prod((Power(X(), 2), RegBessel(1, 3.0)))
        d2 = expr.diff().diff()
        xs = np.linspace(0.2, 1.4, 9)
        h = 1e-4
        fd = (expr(xs + h) - 2 * expr(xs) + expr(xs - h)) / h ** 2
        assert np.max(np.abs(d2(xs) - fd)) < 1e-5
        # interval eval encloses the point values
        for x in xs:
            enc = d2.iv(Interval(float(x)))
            val = float(d2(np.array([x]))[0])
            assert enc.lo - 1e-9 <= val <= enc.hi + 1e-9


class TestErrorBound:
    def test_structure_single_panel(self):
        rep = RangeReport()
        for m in range(5):
            rep.add(m, 0.0, 1.0, Interval(-1.0, 1.0))
        spec = QuadSpec(n_panels=1, a=0.0, b=1.0)
        bound = quad_error_bound(rep, spec, r_factor=1.0)
        assert abs(bound.hi - 1.0) < 1e-12     # ||F|| h^5 R = 1

    def test_zero_integrand(self):
        rep = RangeReport()
        for m in range(5):
            rep.add(m, 0.0, 1.0, Interval(0.0))
        bound = quad_error_bound(rep, QuadSpec(n_panels=4, a=0.0, b=1.0))
        assert bound.hi <= 1e-300

    def test_sound_for_closed_forms(self):
        # twenty integrands with known integrals over [0, pi/2]
        cases = []
        for k in range(1, 11):
            cases.append((Trig("sin", float(k)), (1 - math.cos(k * math.pi / 2)) / k))
            cases.append((Trig("cos", float(k)), math.sin(k * math.pi / 2) / k))
        spec = QuadSpec(n_panels=128)
        for expr, exact in cases:
            approx = composite4(expr, spec)
            rep = build_range_report(expr, spec.a, spec.b, tol_per_order=np.inf,
                                     n_leaves=8)
            bound = quad_error_bound(rep, spec)
            assert abs(exact - approx) <= bound.hi, expr

    def test_monotone_refinement(self):
        expr = Prod((Trig("sin", 3.0), RegBessel(1, 2.0)))
        rep = build_range_report(expr, 0.0, math.pi / 2, tol_per_order=np.inf, n_leaves=8)
        b1 = quad_error_bound(rep, QuadSpec(n_panels=64))
        b2 = quad_error_bound(rep, QuadSpec(n_panels=128))
        assert b2.hi <= b1.hi

    def test_range_soundness_sampling(self):
        rng = np.random.default_rng(2)
        expr = Prod((Trig("cos", 2.0), RegBessel(2, 1.5), Sum((Const(0.5), Trig("sin", 4.0)))))
        rep = build_range_report(expr, 0.0, math.pi / 2, tol_per_order=np.inf, n_leaves=16)
        for m in range(5):
            d = expr
            for _ in range(m):
                d = d.diff()
            for lo, hi, blo, bhi in rep.orders[m]:
                xs = rng.uniform(lo, hi, 40)
                vals = d(xs)
                assert np.all(vals >= blo - 1e-10) and np.all(vals <= bhi + 1e-10)
