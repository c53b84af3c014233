"""Certified eigenbasis of the constrained vector Laplacian on a ball.

Eigenvalues are squares of roots of half-integer Bessel combinations; two
families per degree (radial/meridional pairs and azimuthal modes) plus one
zero mode for the odd symmetry class.  Root isolation works on certified
sign changes: partial sums of the Bessel series are accumulated in exact
rational arithmetic, so a sign is reported only when it is provable, and
bisection keeps full enclosures.  Interlacing of the roots with the Bessel
zeros (and the algebraic marker gamma = sqrt(l(l-1)(l+2)) for the paired
family) localizes exactly one root per bracket.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from .interval import Interval, _gamma_half_ratio, _up, bessel_enclose, isqrt
from .quadrature import (
    Const,
    Power,
    Prod,
    QuadSpec,
    RegBessel,
    Sum,
    X,
    build_range_report,
    composite4,
    quad_error_bound,
)


class AmbiguousSign(Exception):
    pass


class NoSignChange(Exception):
    pass


ETA2_DEFAULT = 0.005


def _series_sum_tail(l_order: int, x, p_extra: int = 0, p_max: int = 500):
    """Exact partial sum and rational tail bound of the prefactor-free series.

    Returns (S, tail) with J_{l+1/2}(x) = (x/2)^(l+1/2)/sqrt(pi) (S +- tail),
    both exact rationals; the ratio test is enforced so tail is valid.
    """
    xq = mpq(x)
    u = xq * xq / 4
    s = mpq(0)
    term = mpq(1) / _gamma_half_ratio(l_order + 1)
    n = 0
    while True:
        s = s + term if n % 2 == 0 else s - term
        nxt = term * u / ((n + 1) * mpq(2 * (n + 1) + 2 * l_order + 1, 2))
        # rho = u / ((n+2)(n+2+nu)) must be <= 1/2
        rho_ok = 2 * u <= (n + 2) * mpq(2 * (n + 2) + 2 * l_order + 1, 2)
        if rho_ok and n >= p_extra and abs(s) > 4 * nxt:
            return s, 2 * nxt
        n += 1
        term = nxt
        if n > p_max:
            raise AmbiguousSign(f"series sign undecided at x={float(x)} (order cap)")


def bessel_sign(l_order: int, x: float) -> int:
    """Certified sign of J_{l+1/2}(x) for x > 0 (exact rational path)."""
    s, tail = _series_sum_tail(l_order, Fraction(x))
    if s > tail:
        return 1
    if s < -tail:
        return -1
    raise AmbiguousSign(f"sign of J at {x} undecided")


def combo_sign(l: int, x: float, coef_lower, coef_upper) -> int:
    """Certified sign of A J_{l-1/2}(x) + B J_{l+1/2}(x), exact rationals.

    The common prefactor (x/2)^(l-1/2)/sqrt(pi) > 0 is dropped; the upper
    series carries the extra factor x/2.
    """
    xq = mpq(Fraction(x))
    A = mpq(Fraction(coef_lower)) if not isinstance(coef_lower, mpq().__class__) else coef_lower
    B = mpq(Fraction(coef_upper)) if not isinstance(coef_upper, mpq().__class__) else coef_upper
    s1, t1 = _series_sum_tail(l - 1, xq)
    s2, t2 = _series_sum_tail(l, xq)
    half_x = xq / 2
    total = A * s1 + B * half_x * s2
    slack = abs(A) * t1 + abs(B * half_x) * t2
    if total > slack:
        return 1
    if total < -slack:
        return -1
    raise AmbiguousSign(f"combination sign at x={x} undecided")


def _z_coeffs(l: int, x: float):
    """x J'_nu - (1/2) J_nu = 0 rewritten as x J_{nu-1} - (l+1) J_nu = 0."""
    return Fraction(x), Fraction(-(l + 1))


def _y_coeffs(l: int, x: float):
    """Paired-family root equation in the lower/upper Bessel basis:
    x (x^2 - l(l-1)(l+2)) J_{nu-1} + (x^4 - l(2l+1) x^2
        + l(l-1)(l+2)(2l+1)) J_nu = 0."""
    xf = Fraction(x)
    g2 = Fraction(l * (l - 1) * (l + 2))
    A = xf * (xf * xf - g2)
    B = xf ** 4 - Fraction(l * (2 * l + 1)) * xf * xf + g2 * Fraction(2 * l + 1)
    return A, B


def equation_sign(l: int, kind: str, x: float) -> int:
    if kind == "Z":
        a, b = _z_coeffs(l, x)
    else:
        a, b = _y_coeffs(l, x)
    return combo_sign(l, x, a, b)


def _certified_sign(fn, x: float, nudge: float) -> tuple[int, float]:
    """Sign at x, nudging the point a few times if it sits on a root."""
    for k in range(6):
        try:
            return fn(x), x
        except AmbiguousSign:
            x = x + nudge * (k + 1) / 7.0
    raise AmbiguousSign(f"no certified sign near {x}")


def _bisect_root(fn, lo: float, hi: float, s_lo: int, s_hi: int,
                 width: float) -> Interval:
    """Certified bisection; signs at (lo, hi) must already be certified."""
    if s_lo == s_hi:
        raise NoSignChange(f"equal signs on [{lo}, {hi}]")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        try:
            s_mid = fn(mid)
        except AmbiguousSign:
            # shift the split point; roots of analytic functions are isolated
            mid = lo + 0.499 * (hi - lo)
            try:
                s_mid = fn(mid)
            except AmbiguousSign:
                break
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return Interval(lo, hi)


def bessel_zero_brackets(l: int, upper: float, width: float = 1e-10,
                         scan_step: float = 0.5) -> list[Interval]:
    """Certified enclosures of all positive zeros of J_{l+1/2} up to upper.

    Consecutive zeros of a Bessel function of order >= 1/2 are more than
    pi apart, so a scan step below pi cannot hide a sign change.
    """
    if l < 1:
        raise ValueError("degree must be >= 1")
    zeros = []
    x = scan_step / 2.0
    s_prev, x_prev = _certified_sign(lambda t: bessel_sign(l, t), x, scan_step / 11)
    while x_prev < upper:
        x = x_prev + scan_step
        s, x_at = _certified_sign(lambda t: bessel_sign(l, t), x, scan_step / 11)
        if s != s_prev:
            zeros.append(_bisect_root(lambda t: bessel_sign(l, t),
                                      x_prev, x_at, s_prev, s, width))
        s_prev, x_prev = s, x_at
    return zeros


def gamma_marker(l: int) -> Interval:
    """sqrt(l(l-1)(l+2)), the algebraic break point of the paired family."""
    return isqrt(Interval(float(l * (l - 1) * (l + 2))))


def merged_break_points(l: int, upper: float, width: float = 1e-10) -> list[Interval]:
    """Bessel zeros merged with the gamma marker (sorted), for the paired family."""
    pts = bessel_zero_brackets(l, upper, width)
    if l >= 2:
        g = gamma_marker(l)
        if g.hi <= upper:
            pts = sorted(pts + [g], key=lambda iv: iv.mid())
    return pts


def solve_alpha(l: int, kind: str, bracket: Interval,
                width: float = 1e-10) -> Interval:
    """Unique root of the family equation inside an isolation bracket."""
    span = bracket.hi - bracket.lo
    fn = lambda t: equation_sign(l, kind, t)
    s_lo, x_lo = _certified_sign(fn, bracket.lo + 1e-9 * (1 + span), span / 50)
    s_hi, x_hi = _certified_sign(fn, bracket.hi - 1e-9 * (1 + span), -span / 50)
    if s_lo == s_hi:
        raise NoSignChange(f"no sign change of the {kind} equation on {bracket}")
    return _bisect_root(fn, x_lo, x_hi, s_lo, s_hi, width)


def cubic_break_root(l: int, width: float = 1e-12) -> Interval:
    """Positive root s_l of s^3 - 4 l^2 s^2 + l(l-1)(6l^2+11l+7) s
    - 3 l (l-1)^2 (l+1)^2 (l+2), certified by rational bisection."""

    def q(s: Fraction) -> Fraction:
        return (s ** 3 - 4 * l * l * s ** 2
                + Fraction(l * (l - 1) * (6 * l * l + 11 * l + 7)) * s
                - Fraction(3 * l * (l - 1) ** 2 * (l + 1) ** 2 * (l + 2)))

    lo, hi = Fraction(0), Fraction(max(8 * l * l, 8))
    assert q(lo) <= 0 and q(hi) > 0
    while float(hi - lo) > width:
        mid = (lo + hi) / 2
        if q(mid) > 0:
            hi = mid
        else:
            lo = mid
    return Interval(float(lo), _up(float(hi)))


def first_root_lower_bound(l: int, kind: str) -> Interval:
    """Certified lower bound for the first root of the family equation."""
    if kind == "Z":
        return isqrt(Interval(float(l * (l + 1))))
    return isqrt(cubic_break_root(l))


# ---------------------------------------------------------------------------
# eigenpairs and bases
# ---------------------------------------------------------------------------

@dataclass
class BallEigenpair:
    """One certified eigenpair of the constrained Laplacian on B(0, R0)."""

    kind: str          # 'Y', 'Z', or 'zero'
    l: int
    m: int             # radial index (1-based), 0 for the zero mode
    alpha: Interval    # root of the family equation (unscaled ball)
    r0: float

    @property
    def lam(self) -> Interval:
        if self.kind == "zero":
            return Interval(0.0)
        return self.alpha.sq() / Interval(self.r0).sq()

    # -- assembly constants (paired family) ------------------------------

    def pair_constants(self):
        """(A, B) with radial profiles B jt_l + l A s^(l-1) etc., certified."""
        a = self.alpha
        l = self.l
        jt = a.pow_int(l - 1) * _reg_iv(l, a)        # J_nu(a)/a^{3/2}
        A = -(a.sq() - Interval(float((l - 1) * (l + 2)))) * jt
        B = a.sq() - Interval(float(l * (l - 1) * (l + 2)))
        return A, B

    def radial_exprs(self):
        """Radial profiles in s = r/R0 as expression trees (per kind).

        Returns a dict: 'Y'/'X' rows for the paired family, 'Z' for the
        azimuthal family, 'const' for the zero mode.
        """
        am = self.alpha.mid()
        l = self.l
        if self.kind == "zero":
            return {"Y": Const(1.0), "X": Const(1.0)}
        if self.kind == "Z":
            scale = am ** (l + 0.5)
            return {"Z": Prod((Const(scale), Power(X(), l), RegBessel(l, am)))}
        A, B = self.pair_constants()
        Af, Bf = A.mid(), B.mid()
        m_l = float(l * (l + 1))
        fY = Sum((
            Prod((Const(Bf * am ** (l - 1)), Power(X(), l - 1), RegBessel(l, am))),
            Prod((Const(l * Af), Power(X(), l - 1))),
        ))
        fX = Sum((
            Prod((Const(Bf / m_l * (l + 1) * am ** (l - 1)), Power(X(), l - 1),
                  RegBessel(l, am))),
            Prod((Const(-Bf / m_l * am ** (l + 1)), Power(X(), l + 1),
                  RegBessel(l + 1, am))),
            Prod((Const(Af), Power(X(), l - 1))),
        ))
        return {"Y": fY, "X": fX}

    def l2_norm2(self, eta2: float = ETA2_DEFAULT) -> Interval:
        """Certified squared L2 norm over the half ball (quarter-domain t)."""
        l = self.l
        r0 = Interval(self.r0)
        if self.kind == "zero":
            # |psi|^2 = cos^2 + sin^2 = 1 over the half ball
            vol = r0.pow_int(3) * Interval(1.0 / 3.0)
            return vol
        if self.kind == "Z":
            a = self.alpha
            jp = _bessel_prime_iv(l, a)
            jv = bessel_enclose(_order(l), a)
            rad = (jp.sq() + (Interval(1.0) - Interval(float((l + 0.5) ** 2)) / a.sq())
                   * jv.sq()) * Interval(0.5)
            ang = Interval(float(l * (l + 1))) / Interval(float(2 * l + 1))
            return r0.pow_int(3) * ang * rad
        # paired family: certified quadrature of the two radial integrals
        exprs = self.radial_exprs()
        total = Interval(0.0)
        weights = {"Y": 1.0 / (2 * l + 1), "X": float(l * (l + 1)) / (2 * l + 1)}
        for key in ("Y", "X"):
            integrand = Prod((Power(X(), 2), Power(exprs[key], 2)))
            spec = QuadSpec(n_panels=256, a=0.0, b=1.0)
            val = composite4(integrand, spec)
            rep = build_range_report(integrand, 0.0, 1.0, tol_per_order=np.inf,
                                     n_leaves=8)
            err = quad_error_bound(rep, spec)
            total = total + Interval(val - err.hi, val + err.hi) \
                * Interval(weights[key])
        return r0.pow_int(3) * total

    def e_norm(self, eta2: float = ETA2_DEFAULT) -> Interval:
        """Certified energy norm sqrt((lam + eta2) ||psi||^2)."""
        return isqrt((self.lam + Interval(eta2)) * self.l2_norm2(eta2))


def _order(l: int):
    from .interval import BesselOrder
    return BesselOrder(l)


def _reg_iv(l: int, a: Interval) -> Interval:
    from .quadrature import reg_bessel_enclose
    return reg_bessel_enclose(l, a)


def _bessel_prime_iv(l: int, a: Interval) -> Interval:
    from .interval import bessel_prime_enclose
    return bessel_prime_enclose(_order(l), a)


@dataclass
class EigenBasis:
    parity: str
    r0: float
    cut: float                  # eigenvalue threshold (rescaled)
    pairs: list                 # BallEigenpair, sorted by eigenvalue midpoint
    lambda_next_lower: Interval  # certified lower bound on the next eigenvalue

    @property
    def n(self) -> int:
        return len(self.pairs)

    def to_json_dict(self) -> dict:
        return {
            "parity": self.parity,
            "r0": self.r0,
            "cut": self.cut,
            "lambda_next_lower": repr(self.lambda_next_lower.lo),
            "pairs": [
                {"kind": p.kind, "l": p.l, "m": p.m,
                 "alpha_lo": repr(p.alpha.lo), "alpha_hi": repr(p.alpha.hi),
                 "lambda": repr(p.lam.mid())}
                for p in self.pairs
            ],
        }

    def save(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)

    @staticmethod
    def load(path: str) -> "EigenBasis":
        with open(path) as fh:
            d = json.load(fh)
        pairs = [BallEigenpair(p["kind"], int(p["l"]), int(p["m"]),
                               Interval(float(p["alpha_lo"]), float(p["alpha_hi"])),
                               float(d["r0"]))
                 for p in d["pairs"]]
        return EigenBasis(d["parity"], float(d["r0"]), float(d["cut"]), pairs,
                          Interval(float(d["lambda_next_lower"]), math.inf))


def _kind_degrees(parity: str, kind: str):
    """Degrees of the retained symmetry class, unbounded generator."""
    if parity == "U":
        start = 2 if kind == "Y" else 1
    else:
        start = 1 if kind == "Y" else 2
    l = start
    while True:
        yield l
        l += 2


def enumerate_basis(parity: str, cut: float, r0: float,
                    width: float = 1e-10) -> EigenBasis:
    """All eigenpairs with eigenvalue <= cut (after 1/R0^2 rescaling).

    The degree scan terminates through the certified first-root lower
    bounds; the certified lower bound on the first excluded eigenvalue is
    tracked alongside.
    """
    upper_alpha = _up(math.sqrt(cut) * r0) * (1 + 1e-12)
    pairs = []
    next_lam_lo = math.inf
    for kind in ("Y", "Z"):
        for l in _kind_degrees(parity, kind):
            frb = first_root_lower_bound(l, kind)
            if frb.lo > upper_alpha:
                # all later degrees have even larger first roots
                next_lam_lo = min(next_lam_lo, (frb.sq() / Interval(r0).sq()).lo)
                break
            brks = (merged_break_points(l, upper_alpha + math.pi + 1.0, width)
                    if kind == "Y" else
                    bessel_zero_brackets(l, upper_alpha + math.pi + 1.0, width))
            edges = [Interval(0.0)] + brks
            m_idx = 0
            for jlo, jhi in zip(edges[:-1], edges[1:]):
                bracket = Interval(jlo.hi, jhi.lo)
                root = solve_alpha(l, kind, bracket, width)
                m_idx += 1
                if root.hi <= upper_alpha:
                    pairs.append(BallEigenpair(kind, l, m_idx, root, r0))
                else:
                    next_lam_lo = min(next_lam_lo,
                                      (root.sq() / Interval(r0).sq()).lo)
                    break
    if parity == "v":
        pairs.append(BallEigenpair("zero", 1, 0, Interval(0.0), r0))
    pairs.sort(key=lambda p: p.lam.mid())
    return EigenBasis(parity, r0, cut, pairs, Interval(next_lam_lo, math.inf))


def k5_constant(basis: EigenBasis, lam_max_q: Interval,
                eta2: float = ETA2_DEFAULT) -> Interval:
    """Approximation constant of the truncated basis:
    ||lam_max(Q)||_inf / (eta2 + lambda_{N+1})."""
    denom = Interval(eta2) + Interval(basis.lambda_next_lower.lo)
    out = Interval(0.0, lam_max_q.hi) / denom
    return Interval(0.0, out.hi)
