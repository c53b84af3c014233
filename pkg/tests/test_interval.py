import math

import mpmath
import numpy as np
import pytest

from selfsim.interval import (
    BesselOrder,
    DivisionByZeroInterval,
    DomainViolation,
    Interval,
    NotSymmetric,
    bessel_enclose,
    bessel_prime_enclose,
    iv_elem,
    sym3_eigs,
)

mpmath.mp.dps = 50


def contains_mp(iv, value):
    return mpmath.mpf(iv.lo) <= value <= mpmath.mpf(iv.hi)


class TestArithmetic:
    def test_add_exact(self):
        r = Interval(1, 2) + Interval(3, 4)
        assert r.contains(4.0) and r.contains(6.0)
        assert abs(r.lo - 4.0) < 1e-14 and abs(r.hi - 6.0) < 1e-14

    def test_mul_sign_cases(self):
        r = Interval(-1, 1) * Interval(-1, 1)
        assert r.lo <= -1.0 <= 1.0 <= r.hi
        assert r.width() <= 2.0 + 1e-14

    def test_div_by_zero_interval(self):
        with pytest.raises(DivisionByZeroInterval):
            Interval(1, 1) / Interval(-1, 1)

    def test_inclusion_isotonicity(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a, b, c, d = rng.uniform(-5, 5, size=4)
            x = Interval(min(a, b), max(a, b))
            y = Interval(min(c, d), max(c, d))
            grow = Interval(x.lo - 0.5, x.hi + 0.5)
            for op in (lambda p, q: p + q, lambda p, q: p - q, lambda p, q: p * q):
                assert op(grow, y).encloses(op(x, y))
            if not y.contains(0.0):
                assert (grow / y).encloses(x / y)

    def test_point_soundness_sampling(self):
        rng = np.random.default_rng(11)
        for _ in range(2000):
            x, y = rng.uniform(-10, 10, size=2)
            ix, iy = Interval(x), Interval(y)
            assert (ix + iy).contains(x + y)
            assert (ix * iy).contains(x * y)
            if y != 0:
                assert (ix / iy).contains(x / y)


class TestElementary:
    def test_sin_monotone_segment(self):
        r = iv_elem("sin", Interval(0.0, math.pi / 2))
        assert r.lo <= 0.0 and r.hi >= 1.0
        assert r.hi <= 1.0 + 1e-15

    def test_sin_covers_max(self):
        r = iv_elem("sin", Interval(1.0, 2.0))
        assert r.hi >= 1.0

    def test_tan_quarter_pi(self):
        r = iv_elem("tan", Interval(math.pi / 4))
        assert r.contains(0.9999999999999999) or r.contains(1.0)
        assert r.width() <= 1e-14

    def test_tan_pole_rejected(self):
        with pytest.raises(DomainViolation):
            iv_elem("tan", Interval(1.0, 2.0))

    def test_sqrt_negative_rejected(self):
        with pytest.raises(DomainViolation):
            iv_elem("sqrt", Interval(-1.0, 1.0))

    def test_point_soundness(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            x = rng.uniform(0.01, 6.0)
            assert iv_elem("sin", Interval(x)).contains(float(math.sin(x)))
            assert iv_elem("cos", Interval(x)).contains(float(math.cos(x)))
            assert iv_elem("sqrt", Interval(x)).contains(float(math.sqrt(x)))
            assert iv_elem("exp", Interval(x)).contains(float(math.exp(x)))


class TestBessel:
    def test_half_order_closed_form_at_pi(self):
        # J_{1/2}(x) = sqrt(2/(pi x)) sin x vanishes at x = pi
        r = bessel_enclose(BesselOrder(0), Interval(math.pi))
        exact = mpmath.sqrt(2 / (mpmath.pi * mpmath.mpf(math.pi))) * mpmath.sin(mpmath.mpf(math.pi))
        assert contains_mp(r, exact)
        assert r.width() <= 1e-10

    def test_half_order_at_one(self):
        r = bessel_enclose(BesselOrder(0), Interval(1.0))
        exact = mpmath.sqrt(2 / mpmath.pi) * mpmath.sin(1)
        assert contains_mp(r, exact)
        assert abs(r.mid() - 0.671397) < 1e-6

    def test_three_half_at_zero(self):
        r = bessel_enclose(BesselOrder(1), Interval(0.0))
        assert r.lo == 0.0 and r.hi == 0.0

    def test_soundness_random(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            l = int(rng.integers(0, 21))
            x = float(rng.uniform(0.0, 60.0))
            r = bessel_enclose(BesselOrder(l), Interval(x))
            exact = mpmath.besselj(l + mpmath.mpf(1) / 2, x)
            assert contains_mp(r, exact), (l, x, r, exact)
            assert r.width() <= 1e-10, (l, x, r.width())

    def test_width_shrinks_under_bisection(self):
        widths = []
        for k in range(4):
            half = 0.5 / (2 ** k)
            iv = Interval(2.0 - half, 2.0 + half)
            widths.append(bessel_enclose(BesselOrder(2), iv).width())
        assert all(widths[i + 1] < widths[i] for i in range(3))

    def test_interval_argument_sound(self):
        rng = np.random.default_rng(9)
        for _ in range(60):
            l = int(rng.integers(0, 8))
            a = float(rng.uniform(0.0, 30.0))
            b = a + float(rng.uniform(0.0, 0.5))
            r = bessel_enclose(BesselOrder(l), Interval(a, b))
            for t in np.linspace(a, b, 7):
                exact = mpmath.besselj(l + mpmath.mpf(1) / 2, float(t))
                assert contains_mp(r, exact)

    def test_prime_closed_form(self):
        # d/dx [sqrt(2/(pi x)) sin x] at 1
        r = bessel_prime_enclose(BesselOrder(0), Interval(1.0))
        x = mpmath.mpf(1)
        exact = mpmath.diff(lambda t: mpmath.besselj(mpmath.mpf(1) / 2, t), x)
        assert contains_mp(r, exact)
        assert r.width() <= 1e-9

    def test_prime_branches_agree(self):
        a = bessel_prime_enclose(BesselOrder(1), Interval(0.5))
        from selfsim.interval import _bessel_prime_series_point
        b = _bessel_prime_series_point(1, 0.5, 1e-12, 200)
        lo = max(a.lo, b.lo)
        hi = min(a.hi, b.hi)
        assert lo <= hi  # the two enclosures overlap
        assert a.width() <= 1e-9 and b.width() <= 1e-9

    def test_prime_at_zero(self):
        r = bessel_prime_enclose(BesselOrder(1), Interval(0.0))
        assert r.lo == 0.0 and r.hi == 0.0

    def test_prime_soundness_random(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            l = int(rng.integers(0, 12))
            x = float(rng.uniform(0.05, 40.0))
            r = bessel_prime_enclose(BesselOrder(l), Interval(x))
            exact = mpmath.diff(lambda t: mpmath.besselj(l + mpmath.mpf(1) / 2, t), mpmath.mpf(x))
            assert contains_mp(r, exact), (l, x)


class TestSym3:
    @staticmethod
    def _iv_matrix(a):
        return [[Interval(float(a[i, j])) for j in range(3)] for i in range(3)]

    def test_identity(self):
        m = self._iv_matrix(np.eye(3))
        for lam in sym3_eigs(m):
            assert lam.contains(1.0)
            assert lam.width() <= 1e-12

    def test_diag(self):
        m = self._iv_matrix(np.diag([1.0, 2.0, 3.0]))
        lams = sym3_eigs(m)
        for lam, target in zip(lams, (1.0, 2.0, 3.0)):
            assert lam.contains(target)
            assert lam.width() <= 1e-12

    def test_random_contains_numpy(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a = rng.standard_normal((3, 3))
            a = 0.5 * (a + a.T)
            lams = sym3_eigs(self._iv_matrix(a))
            evs = np.sort(np.linalg.eigvalsh(a))
            for lam, ev in zip(lams, evs):
                assert lam.lo - 1e-9 <= ev <= lam.hi + 1e-9

    def test_not_symmetric(self):
        m = self._iv_matrix(np.eye(3))
        m[0][1] = Interval(0.5)
        with pytest.raises(NotSymmetric):
            sym3_eigs(m)
