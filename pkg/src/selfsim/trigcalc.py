"""Exact algebra of finite trigonometric tensor series on [0, pi/2]^2.

A scalar field is stored as four coefficient blocks over wavenumber pairs
(p, q):

    f(b, t) = sum_pq  cc[p,q] cos(p b)cos(q t) + cs[p,q] cos(p b)sin(q t)
            + sc[p,q] sin(p b)cos(q t) + ss[p,q] sin(p b)sin(q t)

Every field carries a per-coefficient radius array, so the stored floats
plus radii enclose the coefficients of the exact real field produced by the
algebra.  Products, derivatives, the division identities sin(n b)/sin(b) and
cos((2m+1) b)/cos(b), closed-form weighted integrals, sup-norm envelopes and
Fejer smoothing all propagate these enclosures.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import convolve2d

from .interval import IPI_HALF, Interval, _down, _up

_U = 2.0 ** -53          # unit roundoff
_LIBM = 6.0 * _U         # per-point trig evaluation slack (argument + libm)


class TrigError(Exception):
    pass


class EvenCosineDivision(TrigError):
    pass


class IrreducibleWeight(TrigError):
    pass


class MeshTooCoarse(TrigError):
    pass


def _gamma_n(n: int) -> float:
    nu = (n + 4) * _U
    return nu / (1.0 - nu)


# ---------------------------------------------------------------------------
# 2D fields
# ---------------------------------------------------------------------------

_BLOCKS = ("cc", "cs", "sc", "ss")


class Trig2:
    """Finite trig tensor series with certified coefficient enclosures.

    ``data`` has shape (2, P+1, 2, Q+1): axis 0 selects cos/sin in the first
    variable, axis 2 cos/sin in the second.  ``rad`` bounds |stored - exact|
    entrywise.
    """

    __slots__ = ("data", "rad")

    def __init__(self, data: np.ndarray, rad: np.ndarray | None = None):
        self.data = np.asarray(data, dtype=float)
        if self.data.ndim != 4 or self.data.shape[0] != 2 or self.data.shape[2] != 2:
            raise ValueError("expected shape (2, P+1, 2, Q+1)")
        self.rad = np.zeros_like(self.data) if rad is None else np.asarray(rad, dtype=float)
        # sin rows/cols with wavenumber 0 are meaningless; keep them zero
        self.data[1, 0, :, :] = 0.0
        self.data[:, :, 1, 0] = 0.0
        self.rad[1, 0, :, :] = 0.0
        self.rad[:, :, 1, 0] = 0.0

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zeros(pmax: int, qmax: int) -> "Trig2":
        return Trig2(np.zeros((2, pmax + 1, 2, qmax + 1)))

    @staticmethod
    def mode(kind: str, p: int, q: int, coeff: float, pmax: int | None = None,
             qmax: int | None = None) -> "Trig2":
        """Single basis mode, e.g. ('sc', 3, 2) = sin(3b) cos(2t)."""
        pm = p if pmax is None else pmax
        qm = q if qmax is None else qmax
        f = Trig2.zeros(pm, qm)
        i = 0 if kind[0] == "c" else 1
        j = 0 if kind[1] == "c" else 1
        f.data[i, p, j, q] = coeff
        return f

    def copy(self) -> "Trig2":
        return Trig2(self.data.copy(), self.rad.copy())

    @property
    def pmax(self) -> int:
        return self.data.shape[1] - 1

    @property
    def qmax(self) -> int:
        return self.data.shape[3] - 1

    def block(self, kind: str) -> np.ndarray:
        return self.data[0 if kind[0] == "c" else 1, :, 0 if kind[1] == "c" else 1, :]

    def norm_inf_coeff(self) -> float:
        return float(np.max(np.abs(self.data) + self.rad))

    # -- shape management -------------------------------------------------

    def padded(self, pmax: int, qmax: int) -> "Trig2":
        if pmax < self.pmax or qmax < self.qmax:
            raise ValueError("padded() cannot shrink")
        d = np.zeros((2, pmax + 1, 2, qmax + 1))
        r = np.zeros_like(d)
        d[:, : self.pmax + 1, :, : self.qmax + 1] = self.data
        r[:, : self.pmax + 1, :, : self.qmax + 1] = self.rad
        return Trig2(d, r)

    def trimmed(self, tol: float = 0.0) -> "Trig2":
        """Drop trailing wavenumbers whose mid and rad are both <= tol."""
        mask = (np.abs(self.data) > tol) | (self.rad > tol)
        ps = np.nonzero(mask.any(axis=(0, 2, 3)))[0]
        qs = np.nonzero(mask.any(axis=(0, 1, 2)))[0]
        pm = int(ps.max()) if ps.size else 0
        qm = int(qs.max()) if qs.size else 0
        return Trig2(self.data[:, : pm + 1, :, : qm + 1].copy(),
                     self.rad[:, : pm + 1, :, : qm + 1].copy())

    @staticmethod
    def _aligned(a: "Trig2", b: "Trig2"):
        pm = max(a.pmax, b.pmax)
        qm = max(a.qmax, b.qmax)
        return a.padded(pm, qm), b.padded(pm, qm)

    # -- linear ops -------------------------------------------------------

    def __add__(self, other: "Trig2") -> "Trig2":
        a, b = Trig2._aligned(self, other)
        mid = a.data + b.data
        rad = a.rad + b.rad + _U * np.abs(mid)
        return Trig2(mid, rad)

    def __sub__(self, other: "Trig2") -> "Trig2":
        a, b = Trig2._aligned(self, other)
        mid = a.data - b.data
        rad = a.rad + b.rad + _U * np.abs(mid)
        return Trig2(mid, rad)

    def __neg__(self) -> "Trig2":
        return Trig2(-self.data, self.rad.copy())

    def scaled(self, c) -> "Trig2":
        """Scale by a float or Interval."""
        if isinstance(c, Interval):
            m = c.mid()
            r = max(c.hi - m, m - c.lo)
            mid = self.data * m
            rad = self.rad * (abs(m) + r) + np.abs(self.data) * r + 2 * _U * np.abs(mid)
            return Trig2(mid, rad)
        mid = self.data * c
        rad = self.rad * abs(c) + _U * np.abs(mid)
        return Trig2(mid, rad)

    # -- multiplication ---------------------------------------------------

    def _to_exp(self):
        """Exponential representation as (re, im, rad_re, rad_im) arrays."""
        P, Q = self.pmax, self.qmax
        re = np.zeros((2 * P + 1, 2 * Q + 1))
        im = np.zeros((2 * P + 1, 2 * Q + 1))
        rre = np.zeros((2 * P + 1, 2 * Q + 1))
        rim = np.zeros((2 * P + 1, 2 * Q + 1))
        weights = ((0.5, 0.0), (0.0, -0.5))   # cos -> 1/2, sin -> -i/2 at +k
        for i in range(2):
            for j in range(2):
                blk = self.data[i, :, j, :]
                rb = self.rad[i, :, j, :]
                if not blk.any() and not rb.any():
                    continue
                for sb in (1, -1):
                    for st in (1, -1):
                        wbr, wbi = weights[i]
                        wtr, wti = weights[j]
                        if sb == -1:
                            wbi = -wbi
                        if st == -1:
                            wti = -wti
                        cr = wbr * wtr - wbi * wti
                        ci = wbr * wti + wbi * wtr
                        rows = slice(P, 2 * P + 1) if sb == 1 else slice(P, None, -1)
                        cols = slice(Q, 2 * Q + 1) if st == 1 else slice(Q, None, -1)
                        if cr != 0.0:
                            re[rows, cols] += cr * blk
                            rre[rows, cols] += 0.25 * rb
                        if ci != 0.0:
                            im[rows, cols] += ci * blk
                            rim[rows, cols] += 0.25 * rb
        return re, im, rre, rim

    @staticmethod
    def _from_exp(re, im, rre, rim) -> "Trig2":
        P = (re.shape[0] - 1) // 2
        Q = (re.shape[1] - 1) // 2
        out = Trig2.zeros(P, Q)
        s_re = re[P:, Q:] + re[P:, Q::-1]
        s_im = im[P:, Q:] + im[P:, Q::-1]
        d_re = re[P:, Q:] - re[P:, Q::-1]
        d_im = im[P:, Q:] - im[P:, Q::-1]
        r_re = rre[P:, Q:] + rre[P:, Q::-1]
        r_im = rim[P:, Q:] + rim[P:, Q::-1]
        out.data[0, :, 0, :] = 2.0 * s_re
        out.data[1, :, 0, :] = -2.0 * s_im
        out.data[0, :, 1, :] = -2.0 * d_im
        out.data[1, :, 1, :] = -2.0 * d_re
        out.rad[0, :, 0, :] = 2.0 * r_re
        out.rad[1, :, 0, :] = 2.0 * r_im
        out.rad[0, :, 1, :] = 2.0 * r_im
        out.rad[1, :, 1, :] = 2.0 * r_re
        # multiplicity fixups on the zero-frequency row/column
        out.data[:, 0, :, :] *= 0.5
        out.data[:, :, :, 0] *= 0.5
        out.rad[:, 0, :, :] *= 0.5
        out.rad[:, :, :, 0] *= 0.5
        out.data[1, 0, :, :] = 0.0
        out.data[:, :, 1, 0] = 0.0
        out.rad[1, 0, :, :] = 0.0
        out.rad[:, :, 1, 0] = 0.0
        out.rad += _U * np.abs(out.data)
        return out

    def __mul__(self, other: "Trig2") -> "Trig2":
        ar, ai, arr, ari = self._to_exp()
        br, bi, brr, bri = other._to_exp()
        shape = (ar.shape[0] + br.shape[0] - 1, ar.shape[1] + br.shape[1] - 1)

        def conv(x, y):
            if not x.any() or not y.any():
                return np.zeros(shape)
            return convolve2d(x, y, mode="full")

        re = conv(ar, br) - conv(ai, bi)
        im = conv(ar, bi) + conv(ai, br)
        uar, uai = np.abs(ar) + arr, np.abs(ai) + ari
        ubr, ubi = np.abs(br) + brr, np.abs(bi) + bri
        cnt = convolve2d(np.ones_like(arr), np.ones_like(brr), mode="full")
        gam = (2.0 * cnt + 8.0) * _U
        rre = (conv(np.abs(ar), brr) + conv(arr, ubr)
               + conv(np.abs(ai), bri) + conv(ari, ubi)
               + gam * (conv(uar, ubr) + conv(uai, ubi)))
        rim = (conv(np.abs(ar), bri) + conv(arr, ubi)
               + conv(np.abs(ai), brr) + conv(ari, ubr)
               + gam * (conv(uar, ubi) + conv(uai, ubr)))
        return Trig2._from_exp(re, im, rre, rim)

    # -- calculus ---------------------------------------------------------

    def diff(self, axis: int, order: int = 1) -> "Trig2":
        """Exact termwise derivative in variable 0 (b) or 1 (t)."""
        out = self
        for _ in range(order):
            out = out._diff_once(axis)
        return out

    def _diff_once(self, axis: int) -> "Trig2":
        P, Q = self.pmax, self.qmax
        d = np.zeros_like(self.data)
        r = np.zeros_like(self.rad)
        if axis == 0:
            k = np.arange(P + 1)[None, :, None, None]
            # cos(p b) -> -p sin(p b); sin(p b) -> p cos(p b)
            d[1] = (-self.data[0] * k[0])
            d[0] = (self.data[1] * k[0])
            r[1] = self.rad[0] * k[0] + _U * np.abs(d[1])
            r[0] = self.rad[1] * k[0] + _U * np.abs(d[0])
        else:
            k = np.arange(Q + 1)[None, None, None, :]
            d[:, :, 1, :] = -self.data[:, :, 0, :] * k[0, 0, 0]
            d[:, :, 0, :] = self.data[:, :, 1, :] * k[0, 0, 0]
            r[:, :, 1, :] = self.rad[:, :, 0, :] * k[0, 0, 0] + _U * np.abs(d[:, :, 1, :])
            r[:, :, 0, :] = self.rad[:, :, 1, :] * k[0, 0, 0] + _U * np.abs(d[:, :, 0, :])
        return Trig2(d, r)

    # -- division identities ----------------------------------------------

    def div_sin(self, axis: int, tol: float = 0.0) -> "Trig2":
        """Exact division by sin(b) (axis 0) or sin(t) (axis 1).

        Requires the cos-in-that-variable part to vanish; the sin part maps
        mode by mode through sin(n x)/sin(x) patterns.
        """
        return self._apply_div(axis, _div_sin_matrix, "sin", tol)

    def div_cos(self, axis: int, tol: float = 0.0) -> "Trig2":
        """Exact division by cos(x) in the given variable.

        Odd cosine modes and even sine modes are divisible; anything else
        raises EvenCosineDivision.
        """
        return self._apply_div(axis, _div_cos_matrix, "cos", tol)

    def _apply_div(self, axis: int, matfn, name: str, tol: float) -> "Trig2":
        n = self.pmax if axis == 0 else self.qmax
        Dc_from_c, Dc_from_s, Ds_from_c, Ds_from_s, ok_c, ok_s = matfn(n)
        if axis == 0:
            cpart, spart = self.data[0], self.data[1]
            cr, sr = self.rad[0], self.rad[1]
            sel = lambda arr, mask: arr[mask]
        else:
            cpart, spart = self.data[:, :, 0, :], self.data[:, :, 1, :]
            cr, sr = self.rad[:, :, 0, :], self.rad[:, :, 1, :]
            sel = lambda arr, mask: arr[..., mask]
        viol = 0.0
        if (~ok_c).any():
            viol = max(viol, float((np.abs(sel(cpart, ~ok_c)) + sel(cr, ~ok_c)).max(initial=0.0)))
        if (~ok_s).any():
            viol = max(viol, float((np.abs(sel(spart, ~ok_s)) + sel(sr, ~ok_s)).max(initial=0.0)))
        if viol > tol:
            exc = EvenCosineDivision if name == "cos" else IrreducibleWeight
            raise exc(f"field not divisible by {name}: offending coefficient {viol:.3e}")
        out = Trig2.zeros(self.pmax, self.qmax)

        def apply(mat, part, radpart, slot):
            if mat is None or (not part.any() and not radpart.any()):
                return
            nmodes = mat.shape[1]
            if axis == 0:
                mid = np.einsum("ij,jkl->ikl", mat, part)
                rr = np.einsum("ij,jkl->ikl", np.abs(mat), radpart + _gamma_n(nmodes) * np.abs(part))
                out.data[slot] += mid
                out.rad[slot] += rr + _U * np.abs(mid)
            else:
                mid = np.einsum("ij,klj->kli", mat, part)
                rr = np.einsum("ij,klj->kli", np.abs(mat), radpart + _gamma_n(nmodes) * np.abs(part))
                out.data[:, :, slot, :] += mid
                out.rad[:, :, slot, :] += rr + _U * np.abs(mid)

        apply(Dc_from_c, cpart, cr, 0)
        apply(Dc_from_s, spart, sr, 0)
        apply(Ds_from_c, cpart, cr, 1)
        apply(Ds_from_s, spart, sr, 1)
        return Trig2(out.data, out.rad)

    # -- weighted integrals -------------------------------------------------

    def integral(self, weight: "Weight1D" = None, weight_t: "Weight1D" = None) -> Interval:
        """Closed-form integral over [0, pi/2]^2 against a separable weight."""
        one = Trig2.mode("cc", 0, 0, 1.0)
        return inner(one, self, weight, weight_t)

    # -- evaluation ---------------------------------------------------------

    def eval_grid(self, bs: np.ndarray, ts: np.ndarray):
        """Certified values on the tensor grid bs x ts.

        Returns (mid, rad) arrays of shape (len(bs), len(ts)).
        """
        P, Q = self.pmax, self.qmax
        kb = np.arange(P + 1)
        kt = np.arange(Q + 1)
        Cb = np.cos(np.outer(bs, kb))
        Sb = np.sin(np.outer(bs, kb))
        Ct = np.cos(np.outer(ts, kt))
        St = np.sin(np.outer(ts, kt))
        # evaluation-matrix entry errors: argument rounding + libm slack
        eb = (_U * np.abs(np.outer(bs, kb)) + _LIBM)
        et = (_U * np.abs(np.outer(ts, kt)) + _LIBM)
        mid = np.zeros((len(bs), len(ts)))
        rad = np.zeros_like(mid)
        n_terms = (P + 1) * (Q + 1)
        for i, B, Eb in ((0, Cb, eb), (1, Sb, eb)):
            for j, T, Et in ((0, Ct, et), (1, St, et)):
                blk = self.data[i, :, j, :]
                rb = self.rad[i, :, j, :]
                if not blk.any() and not rb.any():
                    continue
                mid += B @ blk @ T.T
                absB = np.abs(B) + Eb
                absT = np.abs(T) + Et
                mag = absB @ (np.abs(blk) + rb) @ absT.T
                rad += (Eb @ (np.abs(blk) + rb) @ absT.T
                        + np.abs(B) @ rb @ absT.T
                        + np.abs(B) @ np.abs(blk) @ Et.T
                        + _gamma_n(n_terms) * mag)
        return mid, rad

    def eval_points(self, bs: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Fast float evaluation at paired points (no enclosure)."""
        bs = np.atleast_1d(np.asarray(bs, dtype=float))
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        P, Q = self.pmax, self.qmax
        kb = np.arange(P + 1)
        kt = np.arange(Q + 1)
        Bc = np.cos(bs[:, None] * kb)
        Bs = np.sin(bs[:, None] * kb)
        Tc = np.cos(ts[:, None] * kt)
        Ts = np.sin(ts[:, None] * kt)
        out = np.einsum("np,pq,nq->n", Bc, self.data[0, :, 0, :], Tc)
        out += np.einsum("np,pq,nq->n", Bc, self.data[0, :, 1, :], Ts)
        out += np.einsum("np,pq,nq->n", Bs, self.data[1, :, 0, :], Tc)
        out += np.einsum("np,pq,nq->n", Bs, self.data[1, :, 1, :], Ts)
        return out

    # -- sup-norm envelope ---------------------------------------------------

    def sup_bound(self, mesh_b: int = 4096, mesh_t: int = 2048) -> Interval:
        """Certified bound on max |f| over [0, pi/2]^2.

        Grid maximum amplified by the second-derivative interpolation factor
        in each variable; requires N h < sqrt(8) in both.
        """
        nb = _max_wavenumber(self.data, axis=0)
        nt = _max_wavenumber(self.data, axis=1)
        amp = Interval(1.0)
        for n, m in ((nb, mesh_b), (nt, mesh_t)):
            h = (IPI_HALF * Interval.from_rational(1, m)).hi
            s = n * h
            if s * s >= 8.0:
                raise MeshTooCoarse(f"wavenumber {n} needs a finer mesh than {m}")
            amp = amp * (Interval(1.0) / (Interval(1.0) - Interval(s).sq() * Interval(0.125)))
        bs = np.linspace(0.0, math.pi / 2.0, mesh_b + 1)
        ts = np.linspace(0.0, math.pi / 2.0, mesh_t + 1)
        mid, rad = self.eval_grid(bs, ts)
        gm = float(np.max(np.abs(mid) + rad))
        return Interval(0.0, _up((Interval(gm) * amp).hi))

    # -- smoothing -------------------------------------------------------------

    def fejer(self, nb: int | None = None, nt: int | None = None) -> "Trig2":
        """Multiply wavenumber k by max(0, 1 - k/N) per direction."""
        out = self.copy()
        if nb is not None:
            w = np.clip(1.0 - np.arange(self.pmax + 1) / nb, 0.0, None)
            out.data *= w[None, :, None, None]
            out.rad *= w[None, :, None, None]
        if nt is not None:
            w = np.clip(1.0 - np.arange(self.qmax + 1) / nt, 0.0, None)
            out.data *= w[None, None, None, :]
            out.rad *= w[None, None, None, :]
        return Trig2(out.data, out.rad + _U * np.abs(out.data))

    # -- serialization -----------------------------------------------------------

    def to_json_dict(self) -> dict:
        blocks = {}
        for kind in _BLOCKS:
            blk = self.block(kind)
            triples = [[int(p), int(q), repr(float(blk[p, q]))]
                       for p, q in zip(*np.nonzero(blk))]
            if triples:
                blocks[kind] = triples
        return {"pmax": self.pmax, "qmax": self.qmax, "blocks": blocks}

    @staticmethod
    def from_json_dict(d: dict) -> "Trig2":
        f = Trig2.zeros(d["pmax"], d["qmax"])
        for kind, triples in d.get("blocks", {}).items():
            i = 0 if kind[0] == "c" else 1
            j = 0 if kind[1] == "c" else 1
            for p, q, v in triples:
                f.data[i, int(p), j, int(q)] = float(v)
        return f


def _max_wavenumber(data: np.ndarray, axis: int) -> int:
    mask = data != 0.0
    if axis == 0:
        present = mask.any(axis=(0, 2, 3))
    else:
        present = mask.any(axis=(0, 1, 2))
    idx = np.nonzero(present)[0]
    return int(idx.max()) if idx.size else 0


# ---------------------------------------------------------------------------
# division pattern matrices (exact integer patterns)
# ---------------------------------------------------------------------------

_DIV_CACHE: dict = {}


def _div_sin_matrix(n: int):
    """Patterns for division by sin(x) on wavenumbers 0..n.

    sin((2m+1)x)/sin x = 1 + 2 sum_{k=1..m} cos(2kx)
    sin(2mx)/sin x     = 2 sum_{k=1..m} cos((2k-1)x)
    cos modes are not divisible.
    Returns (Dc_from_c, Dc_from_s, Ds_from_c, Ds_from_s, ok_c, ok_s): output
    cos coefficients come from input sin modes only.
    """
    key = ("sin", n)
    if key in _DIV_CACHE:
        return _DIV_CACHE[key]
    Dc_from_s = np.zeros((n + 1, n + 1))
    for m in range(1, n + 1):
        if m % 2 == 1:               # odd wavenumber 2k+1
            half = (m - 1) // 2
            Dc_from_s[0, m] = 1.0
            for k in range(1, half + 1):
                Dc_from_s[2 * k, m] = 2.0
        else:                        # even wavenumber 2k
            half = m // 2
            for k in range(1, half + 1):
                Dc_from_s[2 * k - 1, m] = 2.0
    ok_c = np.zeros(n + 1, dtype=bool)
    ok_c[..., :] = False
    ok_s = np.ones(n + 1, dtype=bool)
    out = (None, Dc_from_s, None, None, ok_c, ok_s)
    _DIV_CACHE[key] = out
    return out


def _div_cos_matrix(n: int):
    """Patterns for division by cos(x) on wavenumbers 0..n.

    cos((2m+1)x)/cos x = (-1)^m (1 + 2 sum_{k=1..m} (-1)^k cos(2kx))
    sin(2mx)/cos x     = 2 sum_{k=1..m} (-1)^(m-k) sin((2k-1)x)
    Even cos modes and odd sin modes are not divisible.
    """
    key = ("cos", n)
    if key in _DIV_CACHE:
        return _DIV_CACHE[key]
    Dc_from_c = np.zeros((n + 1, n + 1))
    Ds_from_s = np.zeros((n + 1, n + 1))
    ok_c = np.zeros(n + 1, dtype=bool)
    ok_s = np.zeros(n + 1, dtype=bool)
    ok_c[1::2] = True
    ok_s[0] = True
    ok_s[2::2] = True
    for m_idx in range(1, n + 1, 2):       # cos((2m+1)x), m = (m_idx-1)/2
        m = (m_idx - 1) // 2
        sgn = -1.0 if m % 2 else 1.0
        Dc_from_c[0, m_idx] = sgn
        for k in range(1, m + 1):
            Dc_from_c[2 * k, m_idx] = sgn * 2.0 * (-1.0) ** k
    for m_idx in range(2, n + 1, 2):       # sin(2mx), m = m_idx/2
        m = m_idx // 2
        for k in range(1, m + 1):
            Ds_from_s[2 * k - 1, m_idx] = 2.0 * (-1.0) ** (m - k)
    out = (Dc_from_c, None, None, Ds_from_s, ok_c, ok_s)
    _DIV_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# weighted inner products (closed forms)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Weight1D:
    """Small exact trig weight for one variable: sum of (kind, k, coeff)."""

    terms: tuple  # of (kind 'c'|'s', int k, Fraction)

    @staticmethod
    def one() -> "Weight1D":
        return Weight1D((("c", 0, Fraction(1)),))

    @staticmethod
    def sin() -> "Weight1D":
        return Weight1D((("s", 1, Fraction(1)),))

    @staticmethod
    def cos() -> "Weight1D":
        return Weight1D((("c", 1, Fraction(1)),))

    @staticmethod
    def sin2() -> "Weight1D":
        return Weight1D((("c", 0, Fraction(1, 2)), ("c", 2, Fraction(-1, 2))))

    @staticmethod
    def sin_cos() -> "Weight1D":
        return Weight1D((("s", 2, Fraction(1, 2)),))

    def mul(self, other: "Weight1D") -> "Weight1D":
        acc: dict = {}
        for ka, na, ca in self.terms:
            for kb, nb, cb in other.terms:
                for kind, k, c in _trig_product(ka, na, kb, nb):
                    key = (kind, k)
                    acc[key] = acc.get(key, Fraction(0)) + c * ca * cb
        terms = tuple((kind, k, c) for (kind, k), c in sorted(acc.items()) if c != 0)
        return Weight1D(terms if terms else (("c", 0, Fraction(0)),))


def _trig_product(ka, na, kb, nb):
    """Product of two unit trig monomials as exact half-coefficient sums."""
    h = Fraction(1, 2)
    s, d = na + nb, na - nb
    if ka == "c" and kb == "c":
        return [("c", abs(d), h), ("c", s, h)]
    if ka == "s" and kb == "s":
        return [("c", abs(d), h), ("c", s, -h)]
    if ka == "s" and kb == "c":
        out = [("s", s, h)]
        out.append(("s", d, h) if d >= 0 else ("s", -d, -h))
        return out
    out = [("s", s, h)]
    out.append(("s", -d, h) if d <= 0 else ("s", d, -h))
    return out


def _base_integral(kind: str, k: int):
    """(rational, pi-multiple) parts of int_0^{pi/2} trig(kx) dx, exact."""
    if kind == "c":
        if k == 0:
            return Fraction(0), Fraction(1, 2)
        r = [0, 1, 0, -1][k % 4]
        return Fraction(r, k), Fraction(0)
    if k == 0:
        return Fraction(0), Fraction(0)
    r = [0, 1, 2, 1][k % 4]
    return Fraction(r, k), Fraction(0)


_WGRAM_CACHE: dict = {}


def _weight_gram_1d(nA: int, nB: int, w: Weight1D):
    """Per-axis weighted coupling: G[(ta,a),(tb,b)] = int trigA(a) trigB(b) w.

    Returns four pairs of (rational_float, pi_float, rad) matrices indexed by
    (typeA, typeB) with type 0 = cos, 1 = sin; shape (nA+1, nB+1).
    """
    key = (nA, nB, w.terms)
    if key in _WGRAM_CACHE:
        return _WGRAM_CACHE[key]
    out = {}
    for ta, ka in ((0, "c"), (1, "s")):
        for tb, kb in ((0, "c"), (1, "s")):
            Q = np.zeros((nA + 1, nB + 1))
            Rp = np.zeros((nA + 1, nB + 1))
            Rad = np.zeros((nA + 1, nB + 1))
            for a in range(0 if ta == 0 else 1, nA + 1):
                for b in range(0 if tb == 0 else 1, nB + 1):
                    q_acc = Fraction(0)
                    p_acc = Fraction(0)
                    for k1, n1, c1 in _trig_product(ka, a, kb, b):
                        if c1 == 0:
                            continue
                        for kw, nw, cw in w.terms:
                            if cw == 0:
                                continue
                            for k2, n2, c2 in _trig_product(k1, n1, kw, nw):
                                qq, pp = _base_integral(k2, n2)
                                q_acc += c1 * cw * c2 * qq
                                p_acc += c1 * cw * c2 * pp
                    fq = float(q_acc)
                    fp = float(p_acc)
                    Q[a, b] = fq
                    Rp[a, b] = fp
                    Rad[a, b] = (abs(float(q_acc - Fraction(fq)))
                                 + abs(float(p_acc - Fraction(fp))) * 4.0) + 1e-300
            out[(ta, tb)] = (Q, Rp, Rad)
    _WGRAM_CACHE[key] = out
    return out


def _quad_contract(A, Ar, Kb, Rb, B, Br, Kt, Rt):
    """Certified sum_{a,b,c,d} A[a,c] Kb[a,b] B[b,d] Kt[c,d] -> (mid, err).

    Fixed contraction order with per-step accumulation-length bounds.
    """
    absA, absK, absB, absL = np.abs(A), np.abs(Kb), np.abs(B), np.abs(Kt)
    uA, uK, uB, uL = absA + Ar, absK + Rb, absB + Br, absL + Rt
    # step 1: M[c,b] = sum_a A[a,c] Kb[a,b]
    M = A.T @ Kb
    uM = uA.T @ uK
    eM = Ar.T @ uK + absA.T @ Rb + _gamma_n(A.shape[0]) * uM
    # step 2: N[c,d] = sum_b M[c,b] B[b,d]
    N = M @ B
    uN = uM @ uB
    eN = eM @ uB + np.abs(M) @ Br + _gamma_n(B.shape[0]) * uN
    # step 3: total = sum_{c,d} N[c,d] Kt[c,d]
    val = float(np.sum(N * Kt))
    magsum = float(np.sum(uN * uL))
    err = (float(np.sum(eN * uL)) + float(np.sum(np.abs(N) * Rt))
           + _gamma_n(N.size) * magsum)
    return val, err


def inner(f: Trig2, g: Trig2, weight_b: Weight1D | None = None,
          weight_t: Weight1D | None = None) -> Interval:
    """Certified closed-form integral of f*g*w over [0, pi/2]^2.

    The weight is a separable exact trig polynomial w(b, t) = wb(b) wt(t);
    integrals of single modes are rational plus a rational multiple of pi, so
    the result is assembled from two exact buckets.
    """
    wb = weight_b or Weight1D.one()
    wt = weight_t or Weight1D.one()
    Gb = _weight_gram_1d(f.pmax, g.pmax, wb)
    Gt = _weight_gram_1d(f.qmax, g.qmax, wt)
    buckets = [0.0, 0.0, 0.0]     # coefficients of 1, pi, pi^2
    errs = [0.0, 0.0, 0.0]
    for ia in range(2):
        for ja in range(2):
            A = f.data[ia, :, ja, :]
            Ar = f.rad[ia, :, ja, :]
            if not A.any() and not Ar.any():
                continue
            for ib in range(2):
                for jb in range(2):
                    B = g.data[ib, :, jb, :]
                    Br = g.rad[ib, :, jb, :]
                    if not B.any() and not Br.any():
                        continue
                    Qb, Pb, Rb = Gb[(ia, ib)]
                    Qt, Pt, Rt = Gt[(ja, jb)]
                    for Kb, Kt, power in ((Qb, Qt, 0), (Qb, Pt, 1),
                                          (Pb, Qt, 1), (Pb, Pt, 2)):
                        if not Kb.any() or not Kt.any():
                            continue
                        val, err = _quad_contract(A, Ar, Kb, Rb, B, Br, Kt, Rt)
                        buckets[power] += val
                        errs[power] += err + _U * abs(val)
    ipi = Interval(math.pi, _up(math.pi))
    out = Interval(_down(buckets[0] - errs[0]), _up(buckets[0] + errs[0]))
    out = out + Interval(_down(buckets[1] - errs[1]), _up(buckets[1] + errs[1])) * ipi
    out = out + Interval(_down(buckets[2] - errs[2]), _up(buckets[2] + errs[2])) * ipi.sq()
    return out


# ---------------------------------------------------------------------------
# 1D series with a declared basis family
# ---------------------------------------------------------------------------

_FAMILIES = ("sin-odd", "sin-even", "cos-odd", "cos-even")


def family_wavenumbers(basis: str, n: int) -> np.ndarray:
    """Wavenumbers of the first n modes of a family.

    sin-odd: sin((2m-1)x); sin-even: sin(2mx); cos-odd: cos((2m-1)x);
    cos-even: cos(2mx) including the constant.
    """
    if basis == "sin-odd" or basis == "cos-odd":
        return 2 * np.arange(1, n + 1) - 1
    if basis == "sin-even":
        return 2 * np.arange(1, n + 1)
    if basis == "cos-even":
        return 2 * np.arange(0, n)
    raise ValueError(f"unknown basis {basis!r}")


@dataclass
class TrigSeries1D:
    """Finite series in one of the four quarter-domain trig families."""

    basis: str
    coeffs: np.ndarray

    def __post_init__(self):
        if self.basis not in _FAMILIES:
            raise ValueError(f"unknown basis {self.basis!r}")
        self.coeffs = np.asarray(self.coeffs, dtype=float)

    @property
    def cutoff(self) -> int:
        return len(self.coeffs)

    def wavenumbers(self) -> np.ndarray:
        return family_wavenumbers(self.basis, self.cutoff)

    def max_wavenumber(self) -> int:
        return int(self.wavenumbers().max()) if self.cutoff else 0

    def to_field(self, axis: int = 0) -> Trig2:
        """Embed as a Trig2 along the chosen variable (other variable const)."""
        n = self.max_wavenumber()
        kind = "s" if self.basis.startswith("sin") else "c"
        if axis == 0:
            f = Trig2.zeros(n, 0)
            ks = self.wavenumbers()
            f.data[1 if kind == "s" else 0, ks, 0, 0] = self.coeffs
        else:
            f = Trig2.zeros(0, n)
            ks = self.wavenumbers()
            f.data[0, 0, 1 if kind == "s" else 0, ks] = self.coeffs
        return f

    def eval(self, xs) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ks = self.wavenumbers()
        fn = np.sin if self.basis.startswith("sin") else np.cos
        return fn(xs[:, None] * ks[None, :]) @ self.coeffs


# spec-level operation names ---------------------------------------------

def tp_mul(f: Trig2, g: Trig2) -> Trig2:
    """Exact product of two fields (cutoffs add)."""
    return f * g


def tp_diff(f: Trig2, var: int, order: int = 1) -> Trig2:
    """Exact termwise derivative; var 0 is the first variable."""
    return f.diff(var, order)


def div_by_sin(f: TrigSeries1D) -> TrigSeries1D:
    """sin-family series divided by sin(x); returns a cos-family series."""
    if not f.basis.startswith("sin"):
        raise IrreducibleWeight("div_by_sin needs a sin-family series")
    g = f.to_field(axis=0).div_sin(0)
    cvec = g.data[0, :, 0, 0]
    if f.basis == "sin-odd":
        # quotient of sin((2m-1)x) modes is even-cosine
        out = cvec[0::2]
        return TrigSeries1D("cos-even", out)
    return TrigSeries1D("cos-odd", cvec[1::2])


def div_by_cos(f: TrigSeries1D) -> TrigSeries1D:
    """cos-odd series divided by cos(x) (even cosine modes are rejected)."""
    if f.basis == "cos-even" and np.any(f.coeffs != 0.0):
        raise EvenCosineDivision("even cosine modes cannot be divided by cos")
    g = f.to_field(axis=0).div_cos(0)
    if f.basis == "cos-odd":
        return TrigSeries1D("cos-even", g.data[0, 0::2, 0, 0])
    if f.basis == "sin-even":
        return TrigSeries1D("sin-odd", g.data[1, 1::2, 0, 0])
    raise EvenCosineDivision(f"family {f.basis} is not divisible by cos")


@dataclass(frozen=True)
class WeightSpec:
    """Separable trig-rational weight sin^a(b) cos^c(b) sin^d(t) cos^e(t).

    Negative exponents (at most -1 per factor) are resolved against the
    operands through the exact division identities; if a division pattern
    does not exist the combination raises IrreducibleWeight.
    """

    sin_b: int = 0
    cos_b: int = 0
    sin_t: int = 0
    cos_t: int = 0

    @staticmethod
    def unit() -> "WeightSpec":
        return WeightSpec()

    @staticmethod
    def sphere_slice() -> "WeightSpec":
        """The plain angular weight sin(t)."""
        return WeightSpec(sin_t=1)

    def _axis_weight(self, s: int, c: int) -> Weight1D:
        w = Weight1D.one()
        for _ in range(max(s, 0)):
            w = w.mul(Weight1D.sin())
        for _ in range(max(c, 0)):
            w = w.mul(Weight1D.cos())
        return w


def l2_inner(f: Trig2, g: Trig2, w: WeightSpec | None = None) -> Interval:
    """Certified <f, g>_w = int f g w over [0, pi/2]^2.

    Negative weight exponents are applied as exact divisions of the product
    field (possible only when the product's parity admits the identity).
    """
    w = w or WeightSpec.unit()
    for e in (w.sin_b, w.cos_b, w.sin_t, w.cos_t):
        if e < -1:
            raise IrreducibleWeight("at most one inverse power per trig factor")
    prod = f * g
    if w.sin_b < 0:
        prod = prod.div_sin(0, tol=0.0)
    if w.cos_b < 0:
        prod = prod.div_cos(0, tol=0.0)
    if w.sin_t < 0:
        prod = prod.div_sin(1, tol=0.0)
    if w.cos_t < 0:
        prod = prod.div_cos(1, tol=0.0)
    one = Trig2.mode("cc", 0, 0, 1.0)
    return inner(one, prod,
                 w._axis_weight(w.sin_b, w.cos_b),
                 w._axis_weight(w.sin_t, w.cos_t))


def linf_envelope(f: TrigSeries1D, mesh: int = 4096) -> Interval:
    """Certified sup-norm bound for a 1D trig polynomial.

    Grid values (with enclosed round-off) amplified by 1/(1 - (N h)^2 / 8);
    requires N h < sqrt(8).
    """
    n = f.max_wavenumber()
    h = (IPI_HALF * Interval.from_rational(1, mesh)).hi
    s = n * h
    if s * s >= 8.0:
        raise MeshTooCoarse(f"wavenumber {n} with mesh {mesh}: N h >= sqrt(8)")
    xs = np.linspace(0.0, math.pi / 2.0, mesh + 1)
    ks = f.wavenumbers().astype(float)
    args = xs[:, None] * ks[None, :]
    mats = np.sin(args) if f.basis.startswith("sin") else np.cos(args)
    vals = mats @ f.coeffs
    err_mat = _U * np.abs(args) + _LIBM
    rad = (err_mat + _gamma_n(len(ks)) ) @ np.abs(f.coeffs)
    gm = float(np.max(np.abs(vals) + rad))
    amp = Interval(1.0) / (Interval(1.0) - Interval(s).sq() * Interval(0.125))
    return Interval(0.0, _up((Interval(gm) * amp).hi))


def fejer_smooth(f: TrigSeries1D, n: int) -> TrigSeries1D:
    """Multiply coefficient of wavenumber k by max(0, 1 - k/n)."""
    ks = f.wavenumbers()
    w = np.clip(1.0 - ks / float(n), 0.0, None)
    return TrigSeries1D(f.basis, f.coeffs * w)


# ---------------------------------------------------------------------------
# coefficient files
# ---------------------------------------------------------------------------

def save_fields(path: str, fields: dict[str, Trig2], parity: str = "",
                meta: dict | None = None) -> None:
    """Write named fields as JSON with decimal-string coefficients."""
    doc = {"parity": parity, "components": {k: v.to_json_dict() for k, v in fields.items()}}
    if meta:
        doc["meta"] = meta
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def load_fields(path: str) -> tuple[dict[str, Trig2], str, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    fields = {k: Trig2.from_json_dict(v) for k, v in doc["components"].items()}
    return fields, doc.get("parity", ""), doc.get("meta", {})
