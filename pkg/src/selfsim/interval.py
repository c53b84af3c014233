"""Directed-rounding interval arithmetic.

Endpoints are doubles; every operation nudges its endpoints outward with
``math.nextafter`` so the exact real result is always contained.  Elementary
functions rely on the platform libm being faithful to a few ulp, which we
absorb with a fixed outward nudge of LIBM_SLACK steps.

Bessel functions of half-integer order are enclosed through their power
series.  At point arguments the partial sum is accumulated in exact rational
arithmetic (gmpy2), so the only width left is the final rounding plus a
ratio-test tail bound; this keeps enclosures tight even for arguments where
the alternating terms are many orders larger than the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpq

_INF = math.inf
# extra outward steps after every libm call (sin/cos/tan/exp/sqrt/acos)
LIBM_SLACK = 4


class IntervalError(Exception):
    pass


class DivisionByZeroInterval(IntervalError):
    pass


class DomainViolation(IntervalError):
    pass


class TailToleranceUnreachable(IntervalError):
    pass


class NotSymmetric(IntervalError):
    pass


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _down_n(x: float, n: int) -> float:
    for _ in range(n):
        x = math.nextafter(x, -_INF)
    return x


def _up_n(x: float, n: int) -> float:
    for _ in range(n):
        x = math.nextafter(x, _INF)
    return x


class Interval:
    """Closed interval [lo, hi] with outward-rounded arithmetic."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo = float(lo)
        hi = float(hi)
        if not (lo <= hi):
            raise IntervalError(f"invalid interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_rational(num, den=1) -> "Interval":
        """Enclosure of the rational num/den (Fraction/mpq/int inputs)."""
        q = mpq(num) / mpq(den)
        return _iv_from_mpq(q)

    @staticmethod
    def hull(a: "Interval", b: "Interval") -> "Interval":
        return Interval(min(a.lo, b.lo), max(a.hi, b.hi))

    # -- queries ------------------------------------------------------

    def width(self) -> float:
        return self.hi - self.lo

    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def mag(self) -> float:
        """Largest absolute value over the interval."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        """Smallest absolute value over the interval (0 if it contains 0)."""
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def encloses(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersect(self, other: "Interval") -> "Interval":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            raise IntervalError("empty intersection")
        return Interval(lo, hi)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __eq__(self, other):
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    # -- arithmetic ---------------------------------------------------

    @staticmethod
    def _coerce(x) -> "Interval":
        if isinstance(x, Interval):
            return x
        return Interval(float(x))

    def __add__(self, other):
        o = Interval._coerce(other)
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        o = Interval._coerce(other)
        return Interval(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other):
        return Interval._coerce(other) - self

    def __mul__(self, other):
        o = Interval._coerce(other)
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_down(min(p)), _up(max(p)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Interval._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise DivisionByZeroInterval(f"divisor {o} contains zero")
        p = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_down(min(p)), _up(max(p)))

    def __rtruediv__(self, other):
        return Interval._coerce(other) / self

    def __abs__(self):
        if self.lo >= 0:
            return Interval(self.lo, self.hi)
        if self.hi <= 0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def sq(self) -> "Interval":
        """Tight square (avoids the dependency blowup of self * self)."""
        m = self.mig()
        return Interval(max(0.0, _down(m * m)), _up(self.mag() ** 2))

    def pow_int(self, n: int) -> "Interval":
        if n == 0:
            return Interval(1.0)
        if n < 0:
            return Interval(1.0) / self.pow_int(-n)
        out = Interval(1.0)
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base.sq() if k > 1 else base
            k >>= 1
        return out


# -- interval constants ----------------------------------------------

IPI = Interval(math.pi, _up(math.pi))            # pi (math.pi rounds down)
IPI_HALF = IPI * Interval(0.5)
ITWO_PI = IPI * Interval(2.0)


def isqrt(x: Interval) -> Interval:
    if x.lo < 0:
        raise DomainViolation(f"sqrt of {x}")
    return Interval(max(0.0, _down_n(math.sqrt(x.lo), LIBM_SLACK)),
                    _up_n(math.sqrt(x.hi), LIBM_SLACK))


def iexp(x: Interval) -> Interval:
    return Interval(_down_n(math.exp(x.lo), LIBM_SLACK), _up_n(math.exp(x.hi), LIBM_SLACK))


def _sin_point(x: float) -> Interval:
    s = math.sin(x)
    return Interval(max(-1.0, _down_n(s, LIBM_SLACK)), min(1.0, _up_n(s, LIBM_SLACK)))


def isin(x: Interval) -> Interval:
    """Enclosure of sin over x via critical-point segmentation."""
    if x.width() >= 2.0 * math.pi:
        return Interval(-1.0, 1.0)
    lo_v = _sin_point(x.lo)
    hi_v = _sin_point(x.hi)
    out = Interval.hull(lo_v, hi_v)
    # critical points pi/2 + k*pi inside [lo, hi]
    k0 = math.ceil((x.lo - math.pi / 2.0) / math.pi - 1e-12)
    k1 = math.floor((x.hi - math.pi / 2.0) / math.pi + 1e-12)
    for k in range(int(k0), int(k1) + 1):
        out = Interval.hull(out, Interval(1.0) if k % 2 == 0 else Interval(-1.0))
    return Interval(max(out.lo, -1.0), min(out.hi, 1.0))


def icos(x: Interval) -> Interval:
    return isin(x + IPI_HALF)


def itan(x: Interval) -> Interval:
    # reject intervals with an odd multiple of pi/2 in the interior
    k_lo = math.floor((x.lo + math.pi / 2.0) / math.pi)
    k_hi = math.floor((x.hi + math.pi / 2.0) / math.pi)
    if k_lo != k_hi:
        raise DomainViolation(f"tan pole inside {x}")
    return Interval(_down_n(math.tan(x.lo), LIBM_SLACK), _up_n(math.tan(x.hi), LIBM_SLACK))


def iacos(x: Interval) -> Interval:
    xc = x.intersect(Interval(-1.0, 1.0))
    return Interval(max(0.0, _down_n(math.acos(xc.hi), LIBM_SLACK)),
                    _up_n(math.acos(xc.lo), LIBM_SLACK))


def iv_elem(name: str, x: Interval) -> Interval:
    """Elementary function dispatch: sin, cos, tan, sqrt, exp."""
    table = {"sin": isin, "cos": icos, "tan": itan, "sqrt": isqrt, "exp": iexp}
    try:
        f = table[name]
    except KeyError:
        raise ValueError(f"unknown elementary function {name!r}")
    return f(x)


# pi as exact-rational lower/upper bounds, used by the exact Bessel path
_PI_LO = mpq(Fraction(math.pi))
_PI_HI = mpq(Fraction(_up(math.pi)))

_SQRT_PI = isqrt(IPI)
_INV_SQRT_PI = Interval(1.0) / _SQRT_PI


@dataclass(frozen=True)
class BesselOrder:
    """Half-integer order l + 1/2 with l >= 0."""

    l: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError("order must be >= 1/2")

    @property
    def nu(self) -> float:
        return self.l + 0.5

    @staticmethod
    def from_nu(nu: float) -> "BesselOrder":
        l = round(nu - 0.5)
        if abs(l + 0.5 - nu) > 1e-12 or l < 0:
            raise ValueError(f"order {nu} is not a half-integer >= 1/2")
        return BesselOrder(l)


# Gamma(m + 1/2) / sqrt(pi) as exact rationals, by the half-integer recurrence
_GAMMA_HALF_Q: dict[int, "mpq"] = {0: mpq(1)}


def _gamma_half_ratio(m: int) -> "mpq":
    """Gamma(m + 1/2)/sqrt(pi) for integer m >= -1."""
    if m == -1:
        return mpq(-2)  # Gamma(-1/2) = -2 sqrt(pi)
    q = _GAMMA_HALF_Q.get(m)
    if q is None:
        top = max(_GAMMA_HALF_Q)
        q = _GAMMA_HALF_Q[top]
        for k in range(top, m):
            q = q * mpq(2 * k + 1, 2)
            _GAMMA_HALF_Q[k + 1] = q
    return q


def _iv_from_mpq(q) -> Interval:
    f = float(q)
    qf = mpq(Fraction(f))
    if qf > q:
        return Interval(_down(f), f)
    if qf < q:
        return Interval(f, _up(f))
    return Interval(f)


_SERIES_CUTOFF = 8.0   # widest |x| handled by direct series on intervals
_P_MAX_DEFAULT = 200


def _series_sum_exact(l_order: int, x: float, tail_tol: float, p_max: int,
                      pref_mag: float):
    """Exact-rational partial sum of sum_n (-1)^n u^n / (n! q_{n+l+1}),
    u = (x/2)^2, plus a certified tail and the truncation order used.

    The stopping rule measures the tail on the scale of the final Bessel
    value, i.e. after multiplication by pref_mag >= |(x/2)^nu / sqrt(pi)|.

    Returns (sum_interval_without_prefactor, tail_float, P).
    """
    xq = mpq(Fraction(x))
    u = xq * xq / 4
    u_hi = _up(float(u))
    nu = l_order + 0.5
    s = mpq(0)
    term = mpq(1) / _gamma_half_ratio(l_order + 1)  # n = 0 term: 1/(0! q_{l+1})
    n = 0
    while True:
        s = s + term if n % 2 == 0 else s - term
        nxt = term * u / ((n + 1) * mpq(2 * (n + 1) + 2 * l_order + 1, 2))
        rho = u_hi / ((n + 2) * (n + 2 + nu))
        tail = _up_n(2.0 * float(nxt), 4) if rho <= 0.5 else _INF
        if rho <= 0.5 and _up_n(tail * pref_mag, 4) <= 0.45 * tail_tol:
            return _iv_from_mpq(s), tail, n
        n += 1
        term = nxt
        if n > p_max:
            raise TailToleranceUnreachable(
                f"series order cap {p_max} reached (x={x}, nu={nu}, tol={tail_tol})")


def _half_pow(x: Interval, l_order: int) -> Interval:
    """(x/2)^(l + 1/2) as an interval; x.lo >= 0 assumed."""
    h = x * Interval(0.5)
    out = h.pow_int(l_order) if l_order >= 0 else Interval(1.0) / h.pow_int(-l_order)
    return out * isqrt(h)


def _bessel_point(l_order: int, x: float, tail_tol: float, p_max: int) -> Interval:
    if x == 0.0:
        if l_order >= 0:
            return Interval(0.0)
        raise DomainViolation("negative half-integer order at x = 0")
    pref = _half_pow(Interval(x), l_order) * _INV_SQRT_PI
    s, tail, _ = _series_sum_exact(l_order, x, tail_tol, p_max, pref.mag())
    out = pref * s
    t = (pref * Interval(-tail, tail))
    return Interval(_down(out.lo + t.lo), _up(out.hi + t.hi))


def _bessel_series_interval(l_order: int, x: Interval, tail_tol: float, p_max: int) -> Interval:
    """Direct series evaluation over a (possibly wide) interval x."""
    u2 = (x * Interval(0.5)).sq()
    u2_hi = u2.hi
    nu = l_order + 0.5
    pref = _half_pow(x, l_order) * _INV_SQRT_PI
    pref_mag = pref.mag()
    total = Interval(0.0)
    term = Interval(1.0) / _iv_from_mpq(_gamma_half_ratio(l_order + 1))
    n = 0
    while True:
        total = total + term if n % 2 == 0 else total - term
        ratio_next = u2_hi / ((n + 2) * (n + 2 + nu))
        tail_mag = term.mag() * u2_hi / ((n + 1) * (n + 1 + nu))
        if ratio_next <= 0.5 and _up_n(2.0 * tail_mag * pref_mag, 4) <= 0.45 * tail_tol:
            tail = _up_n(2.0 * tail_mag, 4)
            break
        n += 1
        term = term * u2 / Interval(float(n)) / _iv_from_mpq(mpq(2 * n + 2 * l_order + 1, 2))
        if n > p_max:
            raise TailToleranceUnreachable(
                f"series order cap {p_max} reached on interval x={x}")
    out = pref * total
    t = pref * Interval(-tail, tail)
    return Interval(_down(out.lo + t.lo), _up(out.hi + t.hi))


def _lip_bound_J(l_order: int, x_lo: float) -> float:
    """Crude sup bound for |J'_{l+1/2}| on [x_lo, inf), x_lo >= 0.5."""
    # |J_mu(t)| <= 1 for mu >= 0; for mu = -1/2, -3/2 use the closed forms
    if l_order >= 1:
        return 1.0
    amp = math.sqrt(2.0 / (math.pi * x_lo))
    if l_order == 0:   # J' = J_{-1/2} - (1/(2x)) J_{1/2}
        return amp * (1.0 + 0.5 / x_lo) + 0.1
    return amp * (1.0 + 1.0 / x_lo) * (1.0 + 1.0 / x_lo) + 0.5


def bessel_enclose(order, x: Interval, tail_tol: float = 1e-10,
                   p_max: int = _P_MAX_DEFAULT) -> Interval:
    """Certified enclosure of J_nu over x (nu = l + 1/2).

    Point arguments go through an exact-rational partial sum so the width is
    dominated by the tail tolerance and final rounding.  Wide arguments use a
    direct interval series for small x, or a midpoint evaluation plus a
    Lipschitz inflation for large x.
    """
    l_order = order.l if isinstance(order, BesselOrder) else BesselOrder.from_nu(float(order)).l
    return _bessel_enclose_l(l_order, x, tail_tol, p_max)


def _bessel_enclose_l(l_order: int, x: Interval, tail_tol: float, p_max: int) -> Interval:
    if x.lo < 0:
        raise DomainViolation(f"negative argument {x}")
    if x.lo == x.hi:
        return _bessel_point(l_order, x.lo, tail_tol, p_max)
    if x.hi <= _SERIES_CUTOFF:
        return _bessel_series_interval(l_order, x, tail_tol, p_max)
    if x.lo >= 0.5:
        mid = 0.5 * (x.lo + x.hi)
        rad = _up(max(mid - x.lo, x.hi - mid))
        base = _bessel_point(l_order, mid, tail_tol, p_max)
        slack = _up(rad * _lip_bound_J(l_order, x.lo))
        return Interval(_down(base.lo - slack), _up(base.hi + slack))
    # wide interval straddling the small/large split: hull of the two parts
    a = _bessel_enclose_l(l_order, Interval(x.lo, _SERIES_CUTOFF), tail_tol, p_max)
    b = _bessel_enclose_l(l_order, Interval(_SERIES_CUTOFF, x.hi), tail_tol, p_max)
    return Interval.hull(a, b)


def _prime_ratio(n: int, l_order: int):
    """Exact term ratio |t_{n+1}/t_n| / u for the differentiated series."""
    num = mpq(4 * (n + 1) + 2 * l_order + 1, 2)            # 2(n+1) + nu
    den = (mpq(4 * n + 2 * l_order + 1, 2)                 # 2n + nu
           * (n + 1) * mpq(2 * (n + 1) + 2 * l_order + 1, 2))  # (n+1)(n+1+nu)
    return num / den


def _bessel_prime_series_point(l_order: int, x: float, tail_tol: float, p_max: int) -> Interval:
    """Termwise-differentiated series at a point (exact rational sum)."""
    if x == 0.0:
        if l_order >= 1:
            return Interval(0.0)
        raise DomainViolation("J'_{1/2} is unbounded at 0")
    xq = mpq(Fraction(x))
    u = xq * xq / 4
    u_hi = _up(float(u))
    # J' = (x/2)^(nu-1) * (1/(2 sqrt(pi))) * sum
    pref = _half_pow(Interval(x), l_order - 1) * _INV_SQRT_PI * Interval(0.5)
    pref_mag = pref.mag()
    s = mpq(0)
    term = mpq(2 * l_order + 1, 2) / _gamma_half_ratio(l_order + 1)  # n = 0: nu/(0! q_{l+1})
    n = 0
    while True:
        s = s + term if n % 2 == 0 else s - term
        nxt = term * u * _prime_ratio(n, l_order)
        # ratios beyond n+1 only shrink, so rho bounds the whole tail
        rho = u_hi * float(_prime_ratio(n + 1, l_order))
        tail = _up_n(2.0 * float(abs(nxt)), 4) if rho <= 0.5 else _INF
        if rho <= 0.5 and _up_n(tail * pref_mag, 4) <= 0.45 * tail_tol:
            break
        n += 1
        term = nxt
        if n > p_max:
            raise TailToleranceUnreachable(f"series order cap {p_max} reached in derivative")
    out = pref * _iv_from_mpq(s)
    t = pref * Interval(-tail, tail)
    return Interval(_down(out.lo + t.lo), _up(out.hi + t.hi))


def _lip_bound_Jp(l_order: int, x_lo: float) -> float:
    """Sup bound for |J''_{l+1/2}| on [x_lo, inf), x_lo >= 0.5."""
    if l_order >= 2:
        return 1.0
    amp = math.sqrt(2.0 / (math.pi * x_lo))
    big = amp * (1.0 + 1.0 / x_lo) * (1.0 + 1.0 / x_lo) + 1.0
    return 0.25 * (big + 2.0 + 1.0) + 0.5


def bessel_prime_enclose(order, x: Interval, tail_tol: float = 1e-10,
                         p_max: int = _P_MAX_DEFAULT) -> Interval:
    """Certified enclosure of dJ_nu/dx over x.

    Away from zero the exact recurrence J'_nu = J_{nu-1} - (nu/x) J_nu is
    used; near zero (or when x touches it) the termwise-differentiated series
    avoids the 1/x factor.
    """
    l_order = order.l if isinstance(order, BesselOrder) else BesselOrder.from_nu(float(order)).l
    if x.lo < 0:
        raise DomainViolation(f"negative argument {x}")
    if x.lo == x.hi:
        if x.lo < 0.5:
            return _bessel_prime_series_point(l_order, x.lo, tail_tol, p_max)
        nu_iv = Interval(l_order + 0.5)
        return (_bessel_point(l_order - 1, x.lo, tail_tol, p_max)
                - nu_iv / x * _bessel_point(l_order, x.lo, tail_tol, p_max))
    if x.hi <= _SERIES_CUTOFF:
        if x.lo == 0.0 and l_order == 0:
            raise DomainViolation("J'_{1/2} is unbounded at 0")
        return _bessel_prime_series_interval(l_order, x, tail_tol, p_max)
    if x.lo >= 0.5:
        mid = 0.5 * (x.lo + x.hi)
        rad = _up(max(mid - x.lo, x.hi - mid))
        base = bessel_prime_enclose(BesselOrder(l_order), Interval(mid), tail_tol, p_max)
        slack = _up(rad * _lip_bound_Jp(l_order, x.lo))
        return Interval(_down(base.lo - slack), _up(base.hi + slack))
    a = bessel_prime_enclose(BesselOrder(l_order), Interval(x.lo, _SERIES_CUTOFF), tail_tol, p_max)
    b = bessel_prime_enclose(BesselOrder(l_order), Interval(_SERIES_CUTOFF, x.hi), tail_tol, p_max)
    return Interval.hull(a, b)


def _bessel_prime_series_interval(l_order: int, x: Interval, tail_tol: float, p_max: int) -> Interval:
    u2 = (x * Interval(0.5)).sq()
    u2_hi = u2.hi
    pref = _half_pow(x, l_order - 1) * _INV_SQRT_PI * Interval(0.5)
    pref_mag = pref.mag()
    total = Interval(0.0)
    term = _iv_from_mpq(mpq(2 * l_order + 1, 2) / _gamma_half_ratio(l_order + 1))
    n = 0
    while True:
        total = total + term if n % 2 == 0 else total - term
        rho = u2_hi * float(_prime_ratio(n + 1, l_order))
        tail_mag = term.mag() * u2_hi * float(_prime_ratio(n, l_order))
        if rho <= 0.5 and _up_n(2.0 * tail_mag * pref_mag, 4) <= 0.45 * tail_tol:
            tail = _up_n(2.0 * tail_mag, 4)
            break
        n += 1
        term = term * u2 * _iv_from_mpq(_prime_ratio(n - 1, l_order))
        if n > p_max:
            raise TailToleranceUnreachable(f"series order cap {p_max} reached in derivative")
    out = pref * total
    t = pref * Interval(-tail, tail)
    return Interval(_down(out.lo + t.lo), _up(out.hi + t.hi))


# -- symmetric 3x3 eigenvalue enclosures -------------------------------

def sym3_eigs(m) -> tuple[Interval, Interval, Interval]:
    """Enclosures of the three eigenvalues of a symmetric 3x3 interval
    matrix, sorted ascending by midpoint (closed-form trigonometric cubic).

    ``m`` is a 3x3 nested sequence of Interval entries; m[i][j] and m[j][i]
    must coincide.
    """
    for i in range(3):
        for j in range(i + 1, 3):
            if not (m[i][j] == m[j][i]):
                raise NotSymmetric(f"entries ({i},{j}) and ({j},{i}) differ")
    a11, a12, a13 = m[0][0], m[0][1], m[0][2]
    a22, a23 = m[1][1], m[1][2]
    a33 = m[2][2]
    q = (a11 + a22 + a33) * Interval(1.0 / 3.0)
    b11, b22, b33 = a11 - q, a22 - q, a33 - q
    p2 = b11.sq() + b22.sq() + b33.sq() + (a12.sq() + a13.sq() + a23.sq()) * Interval(2.0)
    p2 = p2.intersect(Interval(0.0, _INF))
    if p2.hi == 0.0:
        return (q, q, q)
    p = isqrt((p2 * Interval(1.0 / 6.0)).intersect(Interval(0.0, _INF)))
    if p.lo <= 0.0:
        # nearly scalar matrix: |lambda_i - q| <= sqrt(p2)
        r = isqrt(p2)
        lam = Interval(_down(q.lo - r.hi), _up(q.hi + r.hi))
        return (lam, lam, lam)
    detb = (b11 * (b22 * b33 - a23.sq())
            - a12 * (a12 * b33 - a23 * a13)
            + a13 * (a12 * a23 - b22 * a13))
    r = (detb * Interval(0.5)) / p.pow_int(3)
    r = r.intersect(Interval(-1.0, 1.0))
    phi = iacos(r) * Interval(1.0 / 3.0)
    two_p = p * Interval(2.0)
    third = ITWO_PI * Interval(1.0 / 3.0)
    lam_hi = q + two_p * icos(phi)
    lam_lo = q + two_p * icos(phi + third)
    lam_mid = q + two_p * icos(phi - third)
    lams = sorted((lam_lo, lam_mid, lam_hi), key=lambda t: t.mid())
    return (lams[0], lams[1], lams[2])
