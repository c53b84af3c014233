"""Flux-form assembly of the stationary and eigen momentum residuals.

Fields are stored rescaled: physical = cos(b) * stored, r = tan(b).  Every
equation term, multiplied by sin(b)/cos^2(b), stays a finite trig polynomial
("flux form"), because the quarter-period division identities absorb the
isolated 1/sin(b), 1/cos(b) and 1/sin(t) factors.  The physical L2 norm of a
residual is then the plain sin(t)-weighted integral of the squared flux
form, evaluated in closed form:

    ||E||_{L2}^2 = int (sin b / cos^2 b * E)^2 sin t  db dt .

The degree-1 odd channels need one non-parity division: the combination
uX - uY of cosine-family series vanishes at b = 0 by the divergence
constraint, and (cos((2m-1)b) - cos b)/sin b = -2 sin(mb) sin((m-1)b)/sin b
is polynomial.  That path runs in exact rational arithmetic.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .divfree import DivFreeCoeffs, enforce_divfree_exact
from .interval import Interval
from .spharm import dlegendre_sin_coeffs, legendre_cos_coeffs, mu
from .trigcalc import Trig2, TrigSeries1D, Weight1D, inner

# tiny fixed fields used as multipliers
_SIN_B = Trig2.mode("sc", 1, 0, 1.0)
_COS_B = Trig2.mode("cc", 1, 0, 1.0)
_COS_T = Trig2.mode("cc", 0, 1, 1.0)


def _sin2_b() -> Trig2:
    f = Trig2.zeros(2, 0)
    f.data[0, 0, 0, 0] = 0.5
    f.data[0, 2, 0, 0] = -0.5
    return f


def _sincos_b() -> Trig2:
    return Trig2.mode("sc", 2, 0, 0.5)


_SIN2_B = _sin2_b()
_SINCOS_B = _sincos_b()


def drift_flux(comp: Trig2) -> Trig2:
    """Flux form of -(1/2)(physical + r d_r physical)."""
    return (_SINCOS_B * comp + _SIN2_B * comp.diff(0)).scaled(-0.5)


def pressure_flux(p: Trig2):
    """Flux rows (e_r, e_t) of the pressure gradient of cos(b) p."""
    row_r = _SINCOS_B * p.diff(0) - _SIN2_B * p
    row_t = p.diff(1)
    return row_r, row_t


def _cot_t(comp: Trig2) -> Trig2:
    """cot(t) * comp through the exact sine-division pattern."""
    return _COS_T * comp.div_sin(1)


def scaled_gradient_rows(comps) -> list:
    """Rows of the scaled gradient matrix of a rescaled field.

    grad(physical) = (cos^2 b / sin b) * Mat with
        Mat[0] = (Db u_r, Db u_t, Db u_p),  Db f = sin b (cos b f_b - sin b f)
        Mat[1] = (dt u_r - u_t, dt u_t + u_r, dt u_p)
        Mat[2] = (-u_p, -cot t u_p, cot t u_t + u_r)
    """
    ur, ut, up = comps

    def tilde(f: Trig2) -> Trig2:
        return _SINCOS_B * f.diff(0) - _SIN2_B * f

    row0 = [tilde(ur), tilde(ut), tilde(up)]
    row1 = [ur.diff(1) - ut, ut.diff(1) + ur, up.diff(1)]
    row2 = [-up, -_cot_t(up), _cot_t(ut) + ur]
    return [row0, row1, row2]


def advection_flux(a_comps, b_comps) -> list:
    """Flux form of (a . grad) b for rescaled fields: cos b * a^T Mat(b)."""
    rows = scaled_gradient_rows(b_comps)
    out = []
    for col in range(3):
        acc = a_comps[0] * rows[0][col]
        acc = acc + a_comps[1] * rows[1][col]
        acc = acc + a_comps[2] * rows[2][col]
        out.append(_COS_B * acc)
    return out


# -- per-channel Laplacian ----------------------------------------------------

_PAIR_CACHE: dict = {}


def _pair_pattern(m: int) -> dict:
    """(cos((2m-1)b) - cos b)/sin b as exact sin-series {wavenumber: Fraction}."""
    if m in _PAIR_CACHE:
        return _PAIR_CACHE[m]
    # sin((m-1)b)/sin b as cos series
    n = m - 1
    cos_part: dict[int, Fraction] = {}
    if n % 2 == 1:
        cos_part[0] = Fraction(1)
        for k in range(1, (n - 1) // 2 + 1):
            cos_part[2 * k] = Fraction(2)
    else:
        for k in range(1, n // 2 + 1):
            cos_part[2 * k - 1] = Fraction(2)
    out: dict[int, Fraction] = {}
    for k, c in cos_part.items():
        for wav, cc in ((m + k, c), (m - k, c)):
            if wav == 0:
                continue
            key, val = (wav, cc) if wav > 0 else (-wav, -cc)
            out[key] = out.get(key, Fraction(0)) - val   # times -2 * (1/2)...
    # the loop above accumulated -sum c_k [sin((m+k)b) + sin((m-k)b)]
    _PAIR_CACHE[m] = out
    return out


def pair_divide_by_sin(d_exact: list) -> Trig2:
    """Quotient of sum d_m cos((2m-1)b) by sin(b), given sum d_m = 0 exactly.

    ``d_exact`` is a list of Fractions; the result is a certified 1D field.
    """
    total = sum(d_exact, Fraction(0))
    if total != 0:
        raise ValueError("pair division requires an exactly vanishing sum")
    acc: dict[int, Fraction] = {}
    for m_idx, d in enumerate(d_exact):
        m = m_idx + 1
        if m == 1 or d == 0:
            continue
        for wav, c in _pair_pattern(m).items():
            acc[wav] = acc.get(wav, Fraction(0)) + d * c
    nmax = max(acc) if acc else 0
    out = Trig2.zeros(nmax, 0)
    for wav, c in acc.items():
        f = float(c)
        out.data[1, wav, 0, 0] = f
        out.rad[1, wav, 0, 0] = abs(float(c - Fraction(f)))
    return out


def _radial_1d(series: TrigSeries1D) -> Trig2:
    return series.to_field(axis=0)


def _lap_radial_flux(u1d: Trig2) -> Trig2:
    """Flux form of Delta_r acting on cos(b) u(b): sin b cos^2 b g' + 2 cos^3 b g
    with g = cos b u' - sin b u."""
    g = _COS_B * u1d.diff(0) - _SIN_B * u1d
    term1 = _SIN_B * _COS_B * _COS_B * g.diff(0)
    term2 = (_COS_B * _COS_B * _COS_B * g).scaled(2.0)
    return term1 + term2


def _synth_add(target: Trig2, radial: Trig2, theta_vec: np.ndarray, theta_kind: str):
    """Add radial(b) * theta-series(t) into a 2D field in place."""
    j = 0 if theta_kind == "c" else 1
    P = radial.pmax
    needed_q = len(theta_vec) - 1
    if P > target.pmax or needed_q > target.qmax:
        raise ValueError("target field too small")
    for i in range(2):
        col_mid = radial.data[i, :, 0, 0]
        col_rad = radial.rad[i, :, 0, 0]
        if not col_mid.any() and not col_rad.any():
            continue
        target.data[i, : P + 1, j, : needed_q + 1] += np.outer(col_mid, theta_vec)
        target.rad[i, : P + 1, j, : needed_q + 1] += (
            np.outer(col_rad, np.abs(theta_vec))
            + 2.0 * np.finfo(float).eps * np.abs(np.outer(col_mid, theta_vec)))


def laplacian_flux(c: DivFreeCoeffs) -> list:
    """Flux form of the vector Laplacian of the assembled physical field."""
    exp = c.expansion()
    # the radial flux rows raise the top wavenumber by at most 4
    pmax = max(s.max_wavenumber() for s in exp.values()) + 4
    qmax = c.lmax
    out_r = Trig2.zeros(pmax, qmax)
    out_t = Trig2.zeros(pmax, qmax)
    out_p = Trig2.zeros(pmax, qmax)
    for l in c.y_degrees():
        uY = _radial_1d(exp[("Y", l)])
        uX = _radial_1d(exp[("X", l)])
        m_l = float(mu(l))
        if c.parity == "v" and l == 1:
            d_exact = [Fraction(bx) - Fraction(by) for bx, by in zip(
                enforce_divfree_exact(c.by[l], "v-l1", 1),
                [Fraction(float(v)) for v in c.by[l]] + [Fraction(0)])]
            quot = pair_divide_by_sin(d_exact)
            coupling_Y = (_COS_B * quot).scaled(4.0)
            coupling_X = (_COS_B * quot).scaled(-2.0)
        else:
            combo_Y = uX.scaled(2.0 * m_l) - uY.scaled(m_l + 2.0)
            combo_X = uY.scaled(2.0) - uX.scaled(m_l)
            coupling_Y = _COS_B * combo_Y.div_sin(0)
            coupling_X = _COS_B * combo_X.div_sin(0)
        row_Y = _lap_radial_flux(uY) + coupling_Y
        row_X = _lap_radial_flux(uX) + coupling_X
        _synth_add(out_r, row_Y.padded(pmax, 0), legendre_cos_coeffs(l), "c")
        _synth_add(out_t, row_X.padded(pmax, 0), dlegendre_sin_coeffs(l), "s")
    for l in c.z_degrees():
        uZ = _radial_1d(exp[("Z", l)])
        m_l = float(mu(l))
        coupling_Z = _COS_B * uZ.scaled(-m_l).div_sin(0)
        row_Z = _lap_radial_flux(uZ) + coupling_Z
        _synth_add(out_p, row_Z.padded(pmax, 0), dlegendre_sin_coeffs(l), "s")
    return [out_r, out_t, out_p]


def lambda_shift_flux(comps, lam: float) -> list:
    """Flux form of -lam * physical field (fields vanishing at infinity only)."""
    out = []
    for f in comps:
        out.append((_SIN_B * f.div_cos(0)).scaled(-lam))
    return out


def pressure_field(parity: str, coeffs: np.ndarray) -> Trig2:
    """Pressure from a coefficient matrix in the per-parity family.

    Even problems use cos-even x cos-even; odd problems sin-even x cos-odd.
    """
    nb, nt = coeffs.shape
    if parity == "U":
        kb = 2 * np.arange(nb)
        kt = 2 * np.arange(nt)
        f = Trig2.zeros(int(kb.max(initial=0)), int(kt.max(initial=0)))
        f.data[0, kb[:, None], 0, kt[None, :]] = coeffs
    else:
        kb = 2 * np.arange(1, nb + 1)
        kt = 2 * np.arange(1, nt + 1) - 1
        f = Trig2.zeros(int(kb.max()), int(kt.max()))
        f.data[1, kb[:, None], 0, kt[None, :]] = coeffs
    return f


def profile_flux_residual(c: DivFreeCoeffs, p: Trig2, forcing=None) -> list:
    """Flux residual of the stationary momentum system at (field, pressure)."""
    comps = list(c.components())
    lap = laplacian_flux(c)
    adv = advection_flux(comps, comps)
    pr_r, pr_t = pressure_flux(p)
    out = [
        drift_flux(comps[0]) + adv[0] + pr_r - lap[0],
        drift_flux(comps[1]) + adv[1] + pr_t - lap[1],
        drift_flux(comps[2]) + adv[2] - lap[2],
    ]
    if forcing is not None:
        out = [o - f for o, f in zip(out, forcing)]
    return out


def eigen_flux_operator(background: DivFreeCoeffs,
                        v: DivFreeCoeffs, q: Trig2, lam: float) -> list:
    """Flux form of the linearized operator at the background applied to v.

    -(1/2) v - (1/2) r d_r v + (bg . grad) v + (v . grad) bg + grad q
    - Delta v - lam v, all rescaled.
    """
    bg_comps = list(background.components())
    v_comps = list(v.components())
    lap = laplacian_flux(v)
    adv1 = advection_flux(bg_comps, v_comps)
    adv2 = advection_flux(v_comps, bg_comps)
    pr_r, pr_t = pressure_flux(q)
    shift = lambda_shift_flux(v_comps, lam)
    return [
        drift_flux(v_comps[0]) + adv1[0] + adv2[0] + pr_r - lap[0] + shift[0],
        drift_flux(v_comps[1]) + adv1[1] + adv2[1] + pr_t - lap[1] + shift[1],
        drift_flux(v_comps[2]) + adv1[2] + adv2[2] - lap[2] + shift[2],
    ]


def eigen_flux_residual(background, v, q, lam, forcing=None) -> list:
    out = eigen_flux_operator(background, v, q, lam)
    if forcing is not None:
        out = [o - f for o, f in zip(out, forcing)]
    return out


# -- certified norms / inner products on flux forms ---------------------------

def flux_norm2(comps) -> Interval:
    """Certified squared physical L2 norm from flux components."""
    total = Interval(0.0)
    for f in comps:
        total = total + inner(f, f, None, Weight1D.sin())
    return total


def flux_field_inner(a_comps, b_comps) -> Interval:
    """Certified physical <a, b> where both are flux forms."""
    total = Interval(0.0)
    for fa, fb in zip(a_comps, b_comps):
        total = total + inner(fa, fb, None, Weight1D.sin())
    return total


def phys_norm2_decaying(comps) -> Interval:
    """Certified squared L2 norm of a rescaled field that vanishes at infinity.

    Works on the stored components directly: the integrand weight is
    sin^2(b) after dividing each factor by cos(b).
    """
    total = Interval(0.0)
    for f in comps:
        g = f.div_cos(0)
        total = total + inner(g, g, Weight1D.sin2(), Weight1D.sin())
    return total


def flux_vs_field_inner(flux_comps, field_comps) -> Interval:
    """Certified <E, w> with E in flux form and w a decaying rescaled field."""
    total = Interval(0.0)
    for fe, fw in zip(flux_comps, field_comps):
        total = total + inner(fe, fw.div_cos(0), Weight1D.sin(), Weight1D.sin())
    return total
