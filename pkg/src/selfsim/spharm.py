"""Axisymmetric scalar/vector spherical harmonics and spherical operators.

The angular functions are the Legendre polynomials in cos(t) and their
derivatives; both expand exactly in trig series with dyadic rational
coefficients, which keeps every angular manipulation in the finite trig
class.  Vector harmonics come in three kinds per degree l:

    Y_l = S_l(t) e_r,   X_l = S_l'(t) e_t,   Z_l = S_l'(t) e_phi,

with S_l(t) = P_l(cos t); X_0 and Z_0 vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .trigcalc import Trig2, TrigSeries1D

KINDS = ("Y", "X", "Z")


def mu(l: int) -> int:
    """Angular eigenvalue l(l+1) of the spherical Laplace operator."""
    return l * (l + 1)


def legendre_eval(l: int, x: float) -> float:
    """P_l(x) by the stable three-term recurrence."""
    if l == 0:
        return 1.0
    p_prev, p = 1.0, float(x)
    for k in range(1, l):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p


@lru_cache(maxsize=None)
def _legendre_cos_fractions(l: int) -> tuple:
    """Exact coefficients c_k with P_l(cos t) = sum_k c_k cos(k t)."""
    if l == 0:
        return (Fraction(1),)
    if l == 1:
        return (Fraction(0), Fraction(1))
    a = _legendre_cos_fractions(l - 1)
    b = _legendre_cos_fractions(l - 2)
    # cos t * sum a_k cos(kt) = sum a_k (cos((k-1)t) + cos((k+1)t))/2
    prod = [Fraction(0)] * (l + 1)
    for k, c in enumerate(a):
        if c == 0:
            continue
        lo = abs(k - 1)
        prod[lo] += c / 2
        prod[k + 1] += c / 2
    out = [Fraction(0)] * (l + 1)
    for k in range(l + 1):
        t = Fraction(2 * l - 1, l) * prod[k]
        if k < len(b):
            t -= Fraction(l - 1, l) * b[k]
        out[k] = t
    return tuple(out)


def legendre_cos_coeffs(l: int) -> np.ndarray:
    """P_l(cos t) as a cos-series coefficient vector (exact dyadic floats)."""
    return np.array([float(c) for c in _legendre_cos_fractions(l)])


def dlegendre_sin_coeffs(l: int) -> np.ndarray:
    """S_l'(t) = d/dt P_l(cos t) as a sin-series vector: -k c_k at sin(kt)."""
    c = legendre_cos_coeffs(l)
    return -np.arange(len(c)) * c


@dataclass(frozen=True)
class VSHIndex:
    l: int
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.l < 0:
            raise ValueError("degree must be >= 0")
        if self.l == 0 and self.kind in ("X", "Z"):
            raise ValueError("X_0 and Z_0 vanish identically")


def vsh_inner(a: VSHIndex, b: VSHIndex) -> float:
    """Closed-form full-range angular inner product (weight sin t on [0, pi])."""
    if a.kind != b.kind or a.l != b.l:
        return 0.0
    if a.kind == "Y":
        return 2.0 / (2 * a.l + 1)
    return 2.0 * mu(a.l) / (2 * a.l + 1)


# parity rule: (Y_l, X_l) components are even in z for even l, odd for odd l;
# Z_l is the opposite.
def admissible_degrees(parity: str, kind: str, lmax: int) -> list[int]:
    """Retained degrees per field parity ('U' even in z, 'v' odd in z)."""
    if parity == "U":
        if kind in ("Y", "X"):
            return [l for l in range(2, lmax + 1, 2)]
        return [l for l in range(1, lmax + 1, 2)]
    if parity == "v":
        if kind in ("Y", "X"):
            return [l for l in range(1, lmax + 1, 2)]
        return [l for l in range(2, lmax + 1, 2)]
    raise ValueError("parity must be 'U' or 'v'")


@dataclass
class VSHExpansion:
    """Radial coefficient functions per retained (kind, degree).

    Radial entries are TrigSeries1D in the compactified variable b (r = tan b)
    for the rescaled components, or PowerRadial for polynomial test data.
    """

    parity: str
    radial: dict    # (kind, l) -> TrigSeries1D | PowerRadial

    def degrees(self, kind: str) -> list[int]:
        return sorted(l for k, l in self.radial if k == kind)


@dataclass(frozen=True)
class PowerRadial:
    """c * r^a with exact derivative and r-division rules."""

    coeff: float
    expo: int

    def d_dr(self) -> "PowerRadial":
        return PowerRadial(self.coeff * self.expo, self.expo - 1)

    def div_r(self) -> "PowerRadial":
        return PowerRadial(self.coeff, self.expo - 1)

    def __add__(self, other: "PowerRadial"):
        if other.coeff == 0.0:
            return self
        if self.coeff == 0.0:
            return other
        if self.expo != other.expo:
            raise ValueError("mixed exponents")
        return PowerRadial(self.coeff + other.coeff, self.expo)

    def scaled(self, c: float) -> "PowerRadial":
        return PowerRadial(self.coeff * c, self.expo)


def lap_p_power(l: int, p: PowerRadial) -> PowerRadial:
    """Radial part of the scalar Laplacian on p(r) S_l: Delta_r p - mu_l p/r^2."""
    a = p.expo
    return PowerRadial(p.coeff * (a * (a + 1) - mu(l)), a - 2)


def grad_p_power(l: int, p: PowerRadial) -> tuple[PowerRadial, PowerRadial]:
    """(Y_l, X_l) radial parts of grad(p S_l): (p', p/r)."""
    return p.d_dr(), p.div_r()


def lap_u_power(l: int, uY: PowerRadial, uX: PowerRadial, uZ: PowerRadial):
    """Radial parts of the vector Laplacian per degree l on power data."""

    def lap_r(p):
        return PowerRadial(p.coeff * p.expo * (p.expo + 1), p.expo - 2)

    m = mu(l)
    outY = lap_r(uY) + PowerRadial(2 * m * uX.coeff - (m + 2) * uY.coeff, uY.expo - 2) \
        if uY.expo == uX.expo else None
    if outY is None:
        raise ValueError("mixed exponents")
    outX = lap_r(uX) + PowerRadial(2 * uY.coeff - m * uX.coeff, uX.expo - 2)
    outZ = lap_r(uZ) + PowerRadial(-m * uZ.coeff, uZ.expo - 2)
    return outY, outX, outZ


def divergence_bracket(uY: TrigSeries1D, uX: TrigSeries1D, l: int) -> np.ndarray:
    """Radial divergence factor for rescaled components in b = arctan r.

    For the component pair (uY, uX) at degree l the spherical divergence is
    (cos^2 b / sin b) * D(b) * S_l(t) with

        D = (1/2) sin 2b uY' + (1/2)(3 + cos 2b) uY - mu_l uX,

    returned here as a general trig coefficient field (qmax = 0).
    """
    fY = uY.to_field(axis=0)
    fX = uX.to_field(axis=0)
    sin2b = Trig2.mode("sc", 2, 0, 0.5)
    half_3cos = Trig2.zeros(2, 0)
    half_3cos.data[0, 0, 0, 0] = 1.5
    half_3cos.data[0, 2, 0, 0] = 0.5
    D = sin2b * fY.diff(0) + half_3cos * fY - fX.scaled(float(mu(l)))
    return D


def sph_operator(e: VSHExpansion, op: str):
    """Spherical differential operators applied per degree.

    'div_u' on trig radial data returns {l: bracket Trig2}; the power-radial
    operators 'lap_p', 'grad_p', 'lap_u' act on PowerRadial entries.
    """
    if op == "div_u":
        out = {}
        for l in e.degrees("Y"):
            uY = e.radial[("Y", l)]
            uX = e.radial[("X", l)]
            out[l] = divergence_bracket(uY, uX, l)
        return out
    if op == "lap_p":
        return {l: lap_p_power(l, p) for (k, l), p in e.radial.items() if k == "Y"}
    if op == "grad_p":
        return {l: grad_p_power(l, p) for (k, l), p in e.radial.items() if k == "Y"}
    if op == "lap_u":
        out = {}
        for l in e.degrees("Y"):
            out[l] = lap_u_power(l, e.radial[("Y", l)], e.radial[("X", l)],
                                 e.radial.get(("Z", l), PowerRadial(0.0, 0)))
        return out
    raise ValueError(f"unknown operator {op!r}")


# -- synthesis to 2D component fields ---------------------------------------

def synthesize_components(expansion: dict, parity: str, qpad: int | None = None):
    """Assemble (u_r, u_t, u_phi) 2D fields from radial series per (kind, l).

    ``expansion`` maps (kind, l) to TrigSeries1D in b.  The theta factors are
    the exact trig expansions of S_l and S_l'.
    """
    qmax = 0
    for (kind, l) in expansion:
        qmax = max(qmax, l)
    if qpad is not None:
        qmax = max(qmax, qpad)
    pmax = 0
    for s in expansion.values():
        pmax = max(pmax, s.max_wavenumber())
    ur = Trig2.zeros(pmax, qmax)
    ut = Trig2.zeros(pmax, qmax)
    up = Trig2.zeros(pmax, qmax)
    for (kind, l), series in expansion.items():
        ks = series.wavenumbers()
        i = 1 if series.basis.startswith("sin") else 0
        if kind == "Y":
            th = legendre_cos_coeffs(l)
            ur.data[i, ks[:, None], 0, np.arange(l + 1)[None, :]] += \
                series.coeffs[:, None] * th[None, :]
        elif kind == "X":
            th = dlegendre_sin_coeffs(l)
            ut.data[i, ks[:, None], 1, np.arange(l + 1)[None, :]] += \
                series.coeffs[:, None] * th[None, :]
        else:
            th = dlegendre_sin_coeffs(l)
            up.data[i, ks[:, None], 1, np.arange(l + 1)[None, :]] += \
                series.coeffs[:, None] * th[None, :]
    for f in (ur, ut, up):
        f.data[:, :, 1, 0] = 0.0
        f.rad += 2.0 * np.finfo(float).eps * np.abs(f.data)
    return ur, ut, up


def theta_synthesis_matrix(parity: str, kind: str, lmax: int) -> np.ndarray:
    """Matrix S with row l-index: angular function of degree l in raw trig.

    Y rows expand S_l in cos(k t); X and Z rows expand S_l' in sin(k t).
    Degrees run over admissible_degrees(parity, kind, lmax).
    """
    degs = admissible_degrees(parity, kind, lmax)
    cols = lmax + 1
    M = np.zeros((len(degs), cols))
    for i, l in enumerate(degs):
        v = legendre_cos_coeffs(l) if kind == "Y" else dlegendre_sin_coeffs(l)
        M[i, : len(v)] = v
    return M
