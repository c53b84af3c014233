"""Exactly divergence-free candidate representation.

The radial coefficient arrays of the Y channels are free data; the X-channel
arrays are determined by algebraic recurrences so that the assembled field
has identically zero divergence, including after the r = tan(b)
compactification.  Azimuthal (Z) channels never enter the divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import math
import numpy as np

from . import spharm
from .spharm import admissible_degrees, mu, synthesize_components
from .trigcalc import Trig2, TrigSeries1D


class GridMismatch(Exception):
    pass


class StagnationDetected(Exception):
    pass


def radial_family(parity: str, kind: str, l: int) -> str:
    """Trig family of the rescaled radial coefficient functions."""
    if parity == "U":
        return "sin-odd"
    if kind in ("Y", "X") and l == 1:
        return "cos-odd"
    return "sin-even"


def enforce_divfree(by: np.ndarray, case: str, l: int) -> np.ndarray:
    """X-channel coefficients induced by the divergence constraint.

    ``by`` has M entries; the result has M+1.  Cases: 'U' (sin-odd family),
    'v-l1' (cos-odd family, degree 1), 'v-lgeq2' (sin-even family).
    """
    by = np.asarray(by, dtype=float)
    m_count = len(by)
    pad = np.zeros(m_count + 3)
    pad[1 : m_count + 1] = by
    bx = np.zeros(m_count + 1)
    m_l = float(mu(l))
    ms = np.arange(1, m_count + 2, dtype=float)
    if case in ("U", "v-l1"):
        bx = -(ms / 2.0 * pad[2 : m_count + 3]
               - 1.5 * pad[1 : m_count + 2]
               - (ms - 1.0) / 2.0 * pad[0 : m_count + 1]) / m_l
    elif case == "v-lgeq2":
        bx = -((2.0 * ms + 1.0) / 4.0 * pad[2 : m_count + 3]
               - 1.5 * pad[1 : m_count + 2]
               - (2.0 * ms - 1.0) / 4.0 * pad[0 : m_count + 1]) / m_l
    else:
        raise ValueError(f"unknown case {case!r}")
    return bx


def enforce_divfree_exact(by: np.ndarray, case: str, l: int) -> list[Fraction]:
    """Same recurrence in exact rational arithmetic (floats are exact inputs)."""
    m_count = len(by)
    pad = [Fraction(0)] * (m_count + 3)
    for i, v in enumerate(by):
        pad[i + 1] = Fraction(float(v))
    out = []
    m_l = Fraction(mu(l))
    for m in range(1, m_count + 2):
        if case in ("U", "v-l1"):
            t = Fraction(m, 2) * pad[m + 1] - Fraction(3, 2) * pad[m] \
                - Fraction(m - 1, 2) * pad[m - 1]
        else:
            t = Fraction(2 * m + 1, 4) * pad[m + 1] - Fraction(3, 2) * pad[m] \
                - Fraction(2 * m - 1, 4) * pad[m - 1]
        out.append(-t / m_l)
    return out


def constraint_case(parity: str, l: int) -> str:
    if parity == "U":
        return "U"
    return "v-l1" if l == 1 else "v-lgeq2"


@dataclass
class DivFreeCoeffs:
    """Free Y-channel and azimuthal coefficients of a constrained field."""

    parity: str                      # 'U' (even in z) or 'v' (odd in z)
    n_radial: int                    # modes per Y channel
    lmax: int                        # largest retained degree
    by: dict = field(default_factory=dict)   # degree -> (M,) array
    bz: dict = field(default_factory=dict)   # degree -> (M,) array

    def __post_init__(self):
        for l in self.y_degrees():
            self.by.setdefault(l, np.zeros(self.n_radial))
        for l in self.z_degrees():
            self.bz.setdefault(l, np.zeros(self.n_radial))

    def y_degrees(self) -> list[int]:
        return admissible_degrees(self.parity, "Y", self.lmax)

    def z_degrees(self) -> list[int]:
        return admissible_degrees(self.parity, "Z", self.lmax)

    def bx(self, l: int) -> np.ndarray:
        return enforce_divfree(self.by[l], constraint_case(self.parity, l), l)

    def expansion(self) -> dict:
        """Radial series per (kind, degree), X channels induced."""
        out = {}
        for l in self.y_degrees():
            fam = radial_family(self.parity, "Y", l)
            out[("Y", l)] = TrigSeries1D(fam, self.by[l])
            out[("X", l)] = TrigSeries1D(fam, self.bx(l))
        for l in self.z_degrees():
            fam = radial_family(self.parity, "Z", l)
            out[("Z", l)] = TrigSeries1D(fam, self.bz[l])
        return out

    def components(self):
        """Assembled (u_r, u_t, u_phi) rescaled 2D fields."""
        return synthesize_components(self.expansion(), self.parity)

    def flat(self) -> np.ndarray:
        parts = [self.by[l] for l in self.y_degrees()]
        parts += [self.bz[l] for l in self.z_degrees()]
        return np.concatenate(parts) if parts else np.zeros(0)

    @staticmethod
    def from_flat(parity: str, n_radial: int, lmax: int, vec: np.ndarray) -> "DivFreeCoeffs":
        c = DivFreeCoeffs(parity, n_radial, lmax)
        k = 0
        for l in c.y_degrees():
            c.by[l] = np.array(vec[k : k + n_radial], dtype=float)
            k += n_radial
        for l in c.z_degrees():
            c.bz[l] = np.array(vec[k : k + n_radial], dtype=float)
            k += n_radial
        if k != len(vec):
            raise ValueError("coefficient vector length mismatch")
        return c

    def size(self) -> int:
        return self.n_radial * (len(self.y_degrees()) + len(self.z_degrees()))


def divergence_pointwise(c: DivFreeCoeffs, bs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Spherical divergence of the assembled field at paired points.

    div = (cos^2 b / sin b) * sum_l D_l(b) S_l(t) with the radial bracket
    D_l; the constraint makes every D_l vanish coefficientwise.
    """
    bs = np.asarray(bs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    out = np.zeros_like(bs)
    for l in c.y_degrees():
        fam = radial_family(c.parity, "Y", l)
        uY = TrigSeries1D(fam, c.by[l])
        uX = TrigSeries1D(fam, c.bx(l))
        D = spharm.divergence_bracket(uY, uX, l)
        vals = D.eval_points(bs, np.zeros_like(bs))
        sl = np.array([spharm.legendre_eval(l, np.cos(t)) for t in ts])
        out += vals * sl
    pref = np.cos(bs) ** 2 / np.sin(bs)
    return pref * out


# ---------------------------------------------------------------------------
# grid interpolation
# ---------------------------------------------------------------------------

@dataclass
class GridSamples:
    """Component samples on the tensor grid b_j = j pi/(2M), t_k = k pi/(2L)."""

    parity: str
    n_b: int
    n_t: int
    values: dict     # 'r' | 't' | 'p' -> array (n_b + 1, n_t + 1)

    def __post_init__(self):
        for k, v in self.values.items():
            if v.shape != (self.n_b + 1, self.n_t + 1):
                raise GridMismatch(f"component {k}: {v.shape} != grid")


def _fit_series_1d(vals: np.ndarray, xs: np.ndarray, basis: str, n_modes: int) -> np.ndarray:
    ks = np.asarray(
        {"sin-odd": 2 * np.arange(1, n_modes + 1) - 1,
         "sin-even": 2 * np.arange(1, n_modes + 1),
         "cos-odd": 2 * np.arange(1, n_modes + 1) - 1,
         "cos-even": 2 * np.arange(0, n_modes)}[basis], dtype=float)
    fn = np.sin if basis.startswith("sin") else np.cos
    A = fn(xs[:, None] * ks[None, :])
    sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return sol


_THETA_FAMILY = {
    ("U", "r"): "cos-even", ("U", "t"): "sin-even", ("U", "p"): "sin-odd",
    ("v", "r"): "cos-odd", ("v", "t"): "sin-odd", ("v", "p"): "sin-even",
}


def _theta_sample_rows(basis: str, n_t: int):
    """Grid rows where the family is informative, and the mode count."""
    if basis == "cos-even":
        return slice(0, n_t + 1), n_t + 1
    if basis == "sin-even":
        return slice(1, n_t), n_t - 1
    if basis == "sin-odd":
        return slice(1, n_t + 1), n_t
    return slice(0, n_t), n_t           # cos-odd vanishes at pi/2


def interpolate_from_grid(g: GridSamples, lmax: int, n_radial: int) -> DivFreeCoeffs:
    """Recover constrained coefficients from grid samples.

    Fourier analysis in t, change of basis to the angular harmonics, Fourier
    analysis in b per channel family, then projection onto the constraint
    manifold (the Y data is kept, X is recomputed).
    """
    parity = g.parity
    bs = np.arange(g.n_b + 1) * (np.pi / (2 * g.n_b))
    ts = np.arange(g.n_t + 1) * (np.pi / (2 * g.n_t))
    out = DivFreeCoeffs(parity, n_radial, lmax)

    def theta_coeffs(comp: str) -> np.ndarray:
        fam = _THETA_FAMILY[(parity, comp)]
        rows, n_modes = _theta_sample_rows(fam, g.n_t)
        vals = g.values[comp][:, rows]
        return np.stack([
            _fit_series_1d(vals[j], ts[rows], fam, n_modes)
            for j in range(g.n_b + 1)
        ])

    def to_harmonics(comp: str, kind: str) -> dict:
        raw = theta_coeffs(comp)
        fam = _THETA_FAMILY[(parity, comp)]
        degs = admissible_degrees(parity, kind, lmax)
        ks_raw = {"cos-even": 2 * np.arange(raw.shape[1]),
                  "cos-odd": 2 * np.arange(1, raw.shape[1] + 1) - 1,
                  "sin-even": 2 * np.arange(1, raw.shape[1] + 1),
                  "sin-odd": 2 * np.arange(1, raw.shape[1] + 1) - 1}[fam]
        # harmonic angular functions expanded in the same raw wavenumbers
        T = np.zeros((len(degs), raw.shape[1]))
        for i, l in enumerate(degs):
            v = (spharm.legendre_cos_coeffs(l) if kind == "Y"
                 else spharm.dlegendre_sin_coeffs(l))
            for col, k in enumerate(ks_raw):
                if k < len(v):
                    T[i, col] = v[k]
        sol, *_ = np.linalg.lstsq(T.T, raw.T, rcond=None)
        return {l: sol[i] for i, l in enumerate(degs)}

    y_per_l = to_harmonics("r", "Y")
    z_per_l = to_harmonics("p", "Z")
    for l, radial_vals in y_per_l.items():
        fam = radial_family(parity, "Y", l)
        out.by[l] = _fit_series_1d(radial_vals, bs, fam, n_radial)
    for l, radial_vals in z_per_l.items():
        fam = radial_family(parity, "Z", l)
        out.bz[l] = _fit_series_1d(radial_vals, bs, fam, n_radial)
    return out


# ---------------------------------------------------------------------------
# least-squares residual refinement
# ---------------------------------------------------------------------------

def cgls(apply_a, apply_at, b, n_unknowns: int, tol: float = 1e-12,
         maxiter: int | None = None):
    """Conjugate gradient on the normal equations, matrix-free.

    Minimizes ||A x - b|| without forming A^T A.  Returns (x, relative
    normal-equation residual, iterations).
    """
    if maxiter is None:
        maxiter = 10 * n_unknowns
    x = np.zeros(n_unknowns)
    r = b.copy()
    s = apply_at(r)
    p = s.copy()
    gamma = float(s @ s)
    gamma0 = gamma
    it = 0
    while it < maxiter and gamma > (tol ** 2) * max(gamma0, 1e-300):
        q = apply_a(p)
        qq = float(q @ q)
        if qq == 0.0:
            break
        alpha = gamma / qq
        x += alpha * p
        r -= alpha * q
        s = apply_at(r)
        gamma_new = float(s @ s)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
        it += 1
    rel = math.sqrt(gamma / gamma0) if gamma0 > 0 else 0.0
    return x, rel, it


def datum_fixed_basis(n_radial: int) -> np.ndarray:
    """Spanning directions of radial updates that keep the far-field datum.

    For the odd-sine family the datum is the alternating coefficient sum;
    consecutive-pair directions e_m + e_{m+1} annihilate it.
    """
    B = np.zeros((n_radial, max(n_radial - 1, 0)))
    for m in range(n_radial - 1):
        B[m, m] = 1.0
        B[m + 1, m] = 1.0
    return B


class RefinementProblem:
    """Least-squares refinement of a candidate against a momentum residual.

    kind 'profile': unknowns are datum-preserving Y/Z updates plus pressure.
    kind 'eigen': all Y/Z coefficients are free (decaying fields), the
    background field is fixed, and the eigenvalue shift is re-fitted from
    the orthogonality condition after every accepted step.
    """

    def __init__(self, kind: str, parity: str, n_radial: int, lmax: int,
                 n_pressure: tuple = (4, 4), background: DivFreeCoeffs | None = None,
                 lam: float = 0.0, forcing=None, grid=(48, 24)):
        from . import residualops as ro
        self.ro = ro
        self.kind = kind
        self.parity = parity
        self.n_radial = n_radial
        self.lmax = lmax
        self.n_pressure = n_pressure
        self.background = background
        self.lam = lam
        self.forcing = forcing
        nb, nt = grid
        b_nodes = (np.arange(nb) + 0.5) * (math.pi / 2) / nb
        t_nodes = (np.arange(nt) + 0.5) * (math.pi / 2) / nt
        B, T = np.meshgrid(b_nodes, t_nodes, indexing="ij")
        self.B = B.ravel()
        self.T = T.ravel()
        w = (math.pi / 2 / nb) * (math.pi / 2 / nt) * np.sin(self.T)
        self.sqrt_w = np.sqrt(w)
        tmpl = DivFreeCoeffs(parity, n_radial, lmax)
        if kind == "profile":
            self.pair = datum_fixed_basis(n_radial)
            self.n_chan = self.pair.shape[1]
        else:
            self.pair = np.eye(n_radial)
            self.n_chan = n_radial
        self.y_degrees = tmpl.y_degrees()
        self.z_degrees = tmpl.z_degrees()
        self.n_field = self.n_chan * (len(self.y_degrees) + len(self.z_degrees))
        self.n_unknowns = self.n_field + n_pressure[0] * n_pressure[1]

    # -- unknown vector <-> objects --------------------------------------

    def unpack(self, x: np.ndarray):
        dc = DivFreeCoeffs(self.parity, self.n_radial, self.lmax)
        k = 0
        for l in self.y_degrees:
            dc.by[l] = self.pair @ x[k : k + self.n_chan]
            k += self.n_chan
        for l in self.z_degrees:
            dc.bz[l] = self.pair @ x[k : k + self.n_chan]
            k += self.n_chan
        from .residualops import pressure_field
        dp = pressure_field(self.parity,
                            x[k:].reshape(self.n_pressure))
        return dc, dp

    def residual_fields(self, c: DivFreeCoeffs, p) -> list:
        if self.kind == "profile":
            return self.ro.profile_flux_residual(c, p, forcing=self.forcing)
        return self.ro.eigen_flux_residual(self.background, c, p, self.lam,
                                           forcing=self.forcing)

    def linearized_fields(self, around: DivFreeCoeffs, dc: DivFreeCoeffs, dp) -> list:
        ro = self.ro
        if self.kind == "profile":
            a = list(around.components())
            d = list(dc.components())
            lap = ro.laplacian_flux(dc)
            adv1 = ro.advection_flux(a, d)
            adv2 = ro.advection_flux(d, a)
            pr_r, pr_t = ro.pressure_flux(dp)
            return [
                ro.drift_flux(d[0]) + adv1[0] + adv2[0] + pr_r - lap[0],
                ro.drift_flux(d[1]) + adv1[1] + adv2[1] + pr_t - lap[1],
                ro.drift_flux(d[2]) + adv1[2] + adv2[2] - lap[2],
            ]
        return self.ro.eigen_flux_operator(self.background, dc, dp, self.lam)

    def sample(self, fields) -> np.ndarray:
        return np.concatenate([
            f.eval_points(self.B, self.T) * self.sqrt_w for f in fields])

    def jacobian(self, around: DivFreeCoeffs) -> np.ndarray:
        cols = []
        for j in range(self.n_unknowns):
            e = np.zeros(self.n_unknowns)
            e[j] = 1.0
            dc, dp = self.unpack(e)
            cols.append(self.sample(self.linearized_fields(around, dc, dp)))
        return np.column_stack(cols)


def residual_refine(candidate: DivFreeCoeffs, pressure, problem: RefinementProblem,
                    iters: int = 5, csv_path: str | None = None,
                    verbose: bool = False):
    """Iteratively refine (candidate, pressure) by damped least squares.

    Returns (candidate, pressure, history, lam) with monotone certified
    residual norms over accepted steps.  The eigen problem refits the
    eigenvalue from the orthogonality of the residual against the iterate.
    """
    from . import residualops as ro
    lam = problem.lam
    history = []

    def certified_norm(c, p):
        return ro.flux_norm2(problem.residual_fields(c, p))

    def ortho_update(c, p):
        nonlocal lam
        res = problem.residual_fields(c, p)
        comps = list(c.components())
        nrm2 = ro.phys_norm2_decaying(comps)
        ip = ro.flux_vs_field_inner(res, comps)
        if nrm2.lo > 0:
            lam += ip.mid() / nrm2.mid()
            problem.lam = lam

    if problem.kind == "eigen":
        ortho_update(candidate, pressure)
    cur = certified_norm(candidate, pressure)
    history.append(math.sqrt(max(cur.mid(), 0.0)))
    stall = 0
    for it in range(iters):
        J = problem.jacobian(candidate)
        b = -problem.sample(problem.residual_fields(candidate, pressure))
        x, rel, n_it = cgls(lambda v: J @ v, lambda v: J.T @ v, b,
                            problem.n_unknowns)
        dc, dp = problem.unpack(x)
        step = 1.0
        accepted = False
        for _ in range(8):
            trial = DivFreeCoeffs(problem.parity, problem.n_radial, problem.lmax,
                                  {l: candidate.by[l] + step * dc.by[l]
                                   for l in candidate.y_degrees()},
                                  {l: candidate.bz[l] + step * dc.bz[l]
                                   for l in candidate.z_degrees()})
            trial_p = pressure + dp.scaled(step)
            if problem.kind == "eigen":
                saved = problem.lam
                ortho_update(trial, trial_p)
            new = certified_norm(trial, trial_p)
            if new.mid() < cur.mid():
                candidate, pressure, cur = trial, trial_p, new
                accepted = True
                break
            if problem.kind == "eigen":
                problem.lam = saved
                lam = saved
            step *= 0.5
        history.append(math.sqrt(max(cur.mid(), 0.0)))
        if verbose:
            print(f"refine iter {it}: |R| = {history[-1]:.3e} (cg {n_it} its)")
        if not accepted or (history[-2] - history[-1]) <= 1e-12 * max(history[-2], 1e-300):
            stall += 1
            if stall >= 5:
                raise StagnationDetected(
                    f"relative decrease below 1e-12 for {stall} iterations")
            if not accepted:
                break
        else:
            stall = 0
    if csv_path:
        with open(csv_path, "w") as fh:
            fh.write("iter,residual_norm\n")
            for i, v in enumerate(history):
                fh.write(f"{i},{v!r}\n")
    return candidate, pressure, history, lam
