"""Pure numpy implementation of the evaluation kernels.

This backend mirrors ``_ckernels`` operation for operation; it is used when
the compiled extension is unavailable or ``ROTSYNC_PURE_PYTHON`` is set.
Random streams are bit-identical across the two backends; floating point
results can differ in the last ulp where the platform ``libm`` and numpy's
transcendental functions disagree.
"""
from __future__ import annotations

import math

import numpy as np

from . import rng

ROT, PL, MOB = 0, 1, 2
KIND_INT, KIND_RAT, KIND_APPROX = 0, 1, 2

_LEVELS = (8, 64, 512, 4096)
_COARSE_Q = 12
_ILLINOIS_MAX = 64
_ILLINOIS_WIDTH = 1e-13
_BOUND_EPS = 1e-12


def grid_levels(grid: int) -> list[int]:
    levels = [L for L in _LEVELS if L < grid]
    levels.append(int(grid))
    return levels


class Program:
    """A compiled list of generators, each a sequence of atoms."""

    backend = "python"

    def __init__(self, kind, inv, poff, num, den, params, gstart, grigid):
        self.kind = np.ascontiguousarray(kind, dtype=np.int32)
        self.inv = np.ascontiguousarray(inv, dtype=np.int32)
        self.poff = np.ascontiguousarray(poff, dtype=np.int64)
        self.num = np.ascontiguousarray(num, dtype=np.float64)
        self.den = np.ascontiguousarray(den, dtype=np.float64)
        self.params = np.ascontiguousarray(params, dtype=np.float64)
        self.gstart = np.ascontiguousarray(gstart, dtype=np.int64)
        self.grigid = np.ascontiguousarray(grigid, dtype=np.int32)
        self.k = len(self.gstart) - 1
        self._atoms = [self._unpack(a) for a in range(len(self.kind))]

    def _unpack(self, a):
        kind = int(self.kind[a])
        p = int(self.poff[a])
        num, den = float(self.num[a]), float(self.den[a])
        inv = bool(self.inv[a])
        if kind == ROT:
            data = float(self.params[p])
        elif kind == PL:
            n = int(self.params[p])
            xs = self.params[p + 1:p + 1 + n].copy()
            ys = self.params[p + 1 + n:p + 1 + 2 * n].copy()
            if inv:
                xs, ys = ys, xs
            xe = np.append(xs, xs[0] + 1.0)
            ye = np.append(ys, ys[0] + 1.0)
            data = (xe, ye, n)
        else:
            m = self.params[p:p + 9]
            mat = m[4:8] if inv else m[0:4]
            data = (float(mat[0]), float(mat[1]), float(mat[2]), float(mat[3]), float(m[8]))
        return kind, inv, num, den, data

    # -- evaluation ---------------------------------------------------------

    def _atom(self, a, u):
        kind, inv, num, den, data = self._atoms[a]
        scaled = num != den
        if scaled:
            u = u * num / den
        if kind == ROT:
            v = u - data if inv else u + data
        elif kind == PL:
            xe, ye, n = data
            k = np.floor(u - xe[0])
            t = u - k
            i = np.clip(np.searchsorted(xe[:n], t, side="right") - 1, 0, n - 1)
            xa, xb, ya, yb = xe[i], xe[i + 1], ye[i], ye[i + 1]
            v = ya + (t - xa) * (yb - ya) / (xb - xa) + k
        else:
            ma, mb, mc, md, shift = data
            if inv:
                u = u - shift
            nn = np.floor(u)
            f = u - nn
            th = np.pi * f
            s = np.sin(th)
            c = np.cos(th)
            w1 = ma * s + mb * c
            w2 = mc * s + md * c
            delta = np.arctan2(w1 * c - w2 * s, w1 * s + w2 * c)
            v = f + delta / np.pi + nn
            if not inv:
                v = v + shift
        if scaled:
            v = v * den / num
        return v

    def _gen(self, g, y):
        for a in range(self.gstart[g], self.gstart[g + 1]):
            y = self._atom(a, y)
        return y

    def _run(self, codes, y, reps=1):
        for _ in range(reps):
            for g in codes:
                y = self._gen(int(g), y)
        return y

    def eval_word(self, codes, xs, reps=1):
        xs = np.asarray(xs, dtype=np.float64)
        fl = np.floor(xs)
        y = xs - fl
        return self._run(np.asarray(codes), y, reps) + fl

    def trajectory(self, codes, xs):
        codes = np.asarray(codes)
        xs = np.asarray(xs, dtype=np.float64)
        out = np.empty((len(codes) + 1, len(xs)))
        fl = np.floor(xs)
        y = xs - fl
        out[0] = y + fl
        for i, g in enumerate(codes):
            y = self._gen(int(g), y)
            out[i + 1] = y + fl
        return out

    def eval_rows(self, rows, xs):
        """Apply word ``rows[i]`` to ``xs[i]`` for every row."""
        rows = np.asarray(rows, dtype=np.int32)
        xs = np.asarray(xs, dtype=np.float64)
        fl = np.floor(xs)
        y = xs - fl
        for t in range(rows.shape[1]):
            col = rows[:, t]
            for g in range(self.k):
                m = col == g
                if m.any():
                    y[m] = self._gen(g, y[m])
        return y + fl

    # -- translation numbers --------------------------------------------------

    def _rigid(self, codes):
        return bool(np.all(self.grigid[np.asarray(codes, dtype=np.int64)])) if len(codes) else True

    def translation_number(self, codes, tol, grid=4096, q_max=64, ztol=1e-10):
        codes = np.asarray(codes, dtype=np.int32)
        if len(codes) == 0:
            return (KIND_INT, 0.0, 0, 1, 0.0)
        nit = int(math.ceil(1.0 / tol))
        if self._rigid(codes):
            alpha = float(self.eval_word(codes, np.zeros(1))[0])
            m = math.floor(alpha + 0.5)
            if abs(alpha - m) <= ztol:
                return (KIND_INT, float(m), m, 1, 0.0)
            fa = math.floor(alpha)
            pl, ql, pr, qr = fa, 1, fa + 1, 1
            while True:
                p, q = pl + pr, ql + qr
                if q > q_max:
                    break
                g = q * alpha - p
                if abs(g) <= ztol:
                    return (KIND_RAT, p / q, p, q, 0.0)
                if g > 0:
                    pl, ql = p, q
                else:
                    pr, qr = p, q
            return (KIND_APPROX, alpha, 0, 0, 1.0 / nit)
        levels = grid_levels(grid)
        blo, bhi = -math.inf, math.inf
        est = None
        spent = 0
        for li, L in enumerate(levels):
            final = li == len(levels) - 1
            xs = np.arange(L, dtype=np.float64) / L
            slack = 1.0 / L
            d = self._run(codes, xs.copy()) - xs
            lo, hi = float(d.min()), float(d.max())
            m = math.ceil(lo - ztol)
            if m <= hi + ztol:
                self._confirm(codes, xs, d - m, m, ztol)
                return (KIND_INT, float(m), m, 1, 0.0)
            # monotone lifts: between grid points d drops by at most one grid step
            blo = max(blo, lo - slack)
            bhi = min(bhi, hi + slack)
            qcap = q_max if final else min(q_max, _COARSE_Q)
            fl = math.floor(lo)
            pl, ql, pr, qr = fl, 1, fl + 1, 1
            while True:
                p, q = pl + pr, ql + qr
                if q > qcap:
                    break
                r = p / q
                if r < blo - _BOUND_EPS:
                    pl, ql = p, q
                    continue
                if r > bhi + _BOUND_EPS:
                    pr, qr = p, q
                    continue
                if final and est is None and spent >= nit:
                    # the fallback estimate brackets tau to within 1/nit
                    est = float(self._run(codes, np.zeros(1), nit)[0]) / nit
                    blo = max(blo, est - 1.0 / nit)
                    bhi = min(bhi, est + 1.0 / nit)
                    continue
                spent += q * L if final else 0
                g = self._run(codes, xs.copy(), q) - xs - p
                gmin, gmax = float(g.min()), float(g.max())
                if gmin <= ztol and gmax >= -ztol:
                    return (KIND_RAT, r, p, q, 0.0)
                blo = max(blo, (p + gmin - slack) / q)
                bhi = min(bhi, (p + gmax + slack) / q)
                if gmin > ztol:
                    pl, ql = p, q
                    certain = gmin - slack > ztol
                else:
                    pr, qr = p, q
                    certain = gmax + slack < -ztol
                if not certain and not final:
                    break
        if est is None:
            est = float(self._run(codes, np.zeros(1), nit)[0]) / nit
        return (KIND_APPROX, est, 0, 0, 1.0 / nit)

    def _phi(self, codes, x, m):
        return float(self._run(codes, np.array([x]))[0]) - x - m

    def _confirm(self, codes, xs, phi, m, ztol):
        """Locate the fixed point of F - m inside a grid sign change."""
        if np.any(np.abs(phi) <= ztol):
            return
        L = len(xs)
        nxt = np.roll(phi, -1)
        down = np.nonzero((phi > 0) & (nxt < 0))[0]
        idx = down if len(down) else np.nonzero((phi < 0) & (nxt > 0))[0]
        if len(idx) == 0:
            return
        i = int(idx[0])
        xa = float(xs[i])
        xb = float(xs[i + 1]) if i + 1 < L else 1.0
        fa, fb = float(phi[i]), float(nxt[i])
        _illinois(lambda x: self._phi(codes, x, m), xa, xb, fa, fb, ztol)

    # -- random dynamics --------------------------------------------------------

    def stationary_endpoints(self, cumnu, keys, n_steps, x0):
        keys = np.asarray(keys, dtype=np.uint64)
        cumnu = np.asarray(cumnu, dtype=np.float64)
        x = np.full(len(keys), float(x0))
        for t in range(n_steps):
            letters = rng.letters_from_uniforms(rng.uniforms(keys, t), cumnu)
            for g in range(self.k):
                m = letters == g
                if m.any():
                    x[m] = self._gen(g, x[m])
        return x - np.floor(x)

    def orbit(self, cumnu, key, n, x0):
        cumnu = np.asarray(cumnu, dtype=np.float64)
        letters = rng.letters_from_uniforms(rng.uniform_block(key, 0, n), cumnu)
        out = np.empty(n)
        x = np.array([float(x0)])
        for t in range(n):
            x = self._gen(int(letters[t]), x)
            x = x - np.floor(x)
            out[t] = x[0]
        return out

    def spectrum(self, cumnu, keys, N, tol, grid, q_max, ztol):
        keys = np.asarray(keys, dtype=np.uint64)
        cumnu = np.asarray(cumnu, dtype=np.float64)
        out = np.empty(len(keys))
        for s, key in enumerate(keys):
            u0 = rng.uniform_block(int(key), 0, 1)[0]
            n = min(1 + int(math.floor(u0 * N)), N)
            word = rng.letters_from_uniforms(rng.uniform_block(int(key), 1, n), cumnu)
            v = self.translation_number(word, tol, grid, q_max, ztol)[1]
            out[s] = v - math.floor(v)
        return out

    def delta_rows(self, fam, fam_off, g_codes, rows, tol, grid, q_max, ztol):
        """Verdicts of the finite-N cocycle test for each random word row.

        ``fam`` holds the checkpoint words back to back (offsets in
        ``fam_off``). Returns ``(verdict, cvals)`` where unused checkpoints
        are NaN.
        """
        fam = np.asarray(fam, dtype=np.int32)
        g_codes = np.asarray(g_codes, dtype=np.int32)
        rows = np.asarray(rows, dtype=np.int32)
        ncp = len(fam_off) - 1
        words = [fam[fam_off[j]:fam_off[j + 1]] for j in range(ncp)]
        tau_f = [self.translation_number(w, tol, grid, q_max, ztol) for w in words]
        verdict = np.zeros(len(rows), dtype=np.int8)
        cvals = np.full((len(rows), ncp), np.nan)
        for i, h in enumerate(rows):
            first = 0
            for j, w in enumerate(words):
                inner = np.concatenate([h, w, g_codes])
                both = np.concatenate([inner, w])
                tg = self.translation_number(inner, tol, grid, q_max, ztol)
                tb = self.translation_number(both, tol, grid, q_max, ztol)
                c = _cvalue(tb, tau_f[j], tg)
                cvals[i, j] = c
                if abs(abs(c) - 1.0) > 1e-9:
                    first = 0
                    break
                s = 1 if c > 0 else -1
                if j == 0:
                    first = s
                elif s != first:
                    first = 0
                    break
            verdict[i] = first
        return verdict, cvals


def _cvalue(tb, tf, tg):
    if tb[0] != KIND_APPROX and tf[0] != KIND_APPROX and tg[0] != KIND_APPROX:
        if tb[3] == 1 and tf[3] == 1 and tg[3] == 1:
            return float(tb[2] - tf[2] - tg[2])
    return tb[1] - tf[1] - tg[1]


def _illinois(fn, xa, xb, fa, fb, ztol):
    """Illinois regula falsi on a sign-changing bracket; returns the root estimate."""
    side = 0
    x = xa
    for _ in range(_ILLINOIS_MAX):
        if xb - xa <= _ILLINOIS_WIDTH:
            break
        x = (xa * fb - xb * fa) / (fb - fa)
        if not (xa < x < xb):
            x = 0.5 * (xa + xb)
        fx = fn(x)
        if abs(fx) <= ztol:
            return x
        if (fx > 0) == (fa > 0):
            xa, fa = x, fx
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            xb, fb = x, fx
            if side == 1:
                fa *= 0.5
            side = 1
    return x
