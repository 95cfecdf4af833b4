# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled evaluation kernels; see ``_pykernels`` for the reference semantics."""
from libc.math cimport floor, ceil, sin, cos, atan2, fabs, M_PI
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t, int32_t

import numpy as np

cdef enum:
    ROT = 0
    PL = 1
    MOB = 2

cdef int KIND_INT = 0
cdef int KIND_RAT = 1
cdef int KIND_APPROX = 2

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0
cdef int COARSE_Q = 12
cdef int ILLINOIS_MAX = 64
cdef double ILLINOIS_WIDTH = 1e-13
cdef double BOUND_EPS = 1e-12


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform_at(uint64_t key, int64_t step) noexcept nogil:
    return <double>(mix64(key + <uint64_t>(step + 1) * GAMMA) >> 11) * INV53


cdef inline int32_t letter_of(double u, const double* cumnu, int k) noexcept nogil:
    cdef int32_t c = 0
    cdef int i
    for i in range(k):
        if cumnu[i] <= u:
            c += 1
    if c > k - 1:
        c = k - 1
    return c


cdef struct TN:
    int kind
    double value
    long long p
    long long q
    double err


cdef class Program:
    """A compiled list of generators, each a sequence of atoms."""

    cdef public int k
    cdef object _keep
    cdef int* kind
    cdef int* inv
    cdef int64_t* poff
    cdef double* num
    cdef double* den
    cdef double* params
    cdef int64_t* gstart
    cdef int* grigid
    cdef double* scratch
    cdef Py_ssize_t scratch_n

    backend = "cython"

    def __cinit__(self, kind, inv, poff, num, den, params, gstart, grigid):
        a_kind = np.ascontiguousarray(np.append(kind, 0), dtype=np.int32)
        a_inv = np.ascontiguousarray(np.append(inv, 0), dtype=np.int32)
        a_poff = np.ascontiguousarray(np.append(poff, 0), dtype=np.int64)
        a_num = np.ascontiguousarray(np.append(num, 1.0), dtype=np.float64)
        a_den = np.ascontiguousarray(np.append(den, 1.0), dtype=np.float64)
        a_params = np.ascontiguousarray(np.append(params, 0.0), dtype=np.float64)
        a_gstart = np.ascontiguousarray(gstart, dtype=np.int64)
        a_grigid = np.ascontiguousarray(np.append(grigid, 0), dtype=np.int32)
        self._keep = (a_kind, a_inv, a_poff, a_num, a_den, a_params, a_gstart, a_grigid)
        cdef int[::1] v_kind = a_kind
        cdef int[::1] v_inv = a_inv
        cdef int64_t[::1] v_poff = a_poff
        cdef double[::1] v_num = a_num
        cdef double[::1] v_den = a_den
        cdef double[::1] v_params = a_params
        cdef int64_t[::1] v_gstart = a_gstart
        cdef int[::1] v_grigid = a_grigid
        self.kind = &v_kind[0]
        self.inv = &v_inv[0]
        self.poff = &v_poff[0]
        self.num = &v_num[0]
        self.den = &v_den[0]
        self.params = &v_params[0]
        self.gstart = &v_gstart[0]
        self.grigid = &v_grigid[0]
        self.k = a_gstart.shape[0] - 1
        self.scratch = NULL
        self.scratch_n = 0

    def __dealloc__(self):
        if self.scratch != NULL:
            free(self.scratch)

    cdef double* _scratch(self, Py_ssize_t n) except NULL:
        if n > self.scratch_n:
            if self.scratch != NULL:
                free(self.scratch)
            self.scratch = <double*> malloc(n * sizeof(double))
            if self.scratch == NULL:
                self.scratch_n = 0
                raise MemoryError()
            self.scratch_n = n
        return self.scratch

    # -- evaluation ---------------------------------------------------------

    cdef inline double atom(self, int a, double u) noexcept nogil:
        cdef double num = self.num[a]
        cdef double den = self.den[a]
        cdef bint scaled = num != den
        cdef int kd = self.kind[a]
        cdef int iv = self.inv[a]
        cdef const double* p = self.params + self.poff[a]
        cdef double v, k, t, xa, xb, ya, yb, x0
        cdef const double* X
        cdef const double* Y
        cdef int n, lo, hi, mid
        cdef double ma, mb, mc, md, nn, f, th, s, c, w1, w2, dl
        if scaled:
            u = u * num / den
        if kd == ROT:
            if iv:
                v = u - p[0]
            else:
                v = u + p[0]
        elif kd == PL:
            n = <int> p[0]
            if iv:
                X = p + 1 + n
                Y = p + 1
            else:
                X = p + 1
                Y = p + 1 + n
            x0 = X[0]
            k = floor(u - x0)
            t = u - k
            lo = 0
            hi = n - 1
            while lo < hi:
                mid = (lo + hi + 1) >> 1
                if X[mid] <= t:
                    lo = mid
                else:
                    hi = mid - 1
            xa = X[lo]
            ya = Y[lo]
            if lo + 1 < n:
                xb = X[lo + 1]
                yb = Y[lo + 1]
            else:
                xb = X[0] + 1.0
                yb = Y[0] + 1.0
            v = ya + (t - xa) * (yb - ya) / (xb - xa) + k
        else:
            if iv:
                ma = p[4]; mb = p[5]; mc = p[6]; md = p[7]
                u = u - p[8]
            else:
                ma = p[0]; mb = p[1]; mc = p[2]; md = p[3]
            nn = floor(u)
            f = u - nn
            th = M_PI * f
            s = sin(th)
            c = cos(th)
            w1 = ma * s + mb * c
            w2 = mc * s + md * c
            dl = atan2(w1 * c - w2 * s, w1 * s + w2 * c)
            v = f + dl / M_PI + nn
            if not iv:
                v = v + p[8]
        if scaled:
            v = v * den / num
        return v

    cdef inline double gen(self, int g, double y) noexcept nogil:
        cdef int64_t a
        for a in range(self.gstart[g], self.gstart[g + 1]):
            y = self.atom(<int> a, y)
        return y

    cdef double run(self, const int32_t* w, Py_ssize_t n, double y, long long reps) noexcept nogil:
        cdef long long r
        cdef Py_ssize_t i
        for r in range(reps):
            for i in range(n):
                y = self.gen(w[i], y)
        return y

    cdef double eval1(self, const int32_t* w, Py_ssize_t n, double x, long long reps) noexcept nogil:
        cdef double fl = floor(x)
        return self.run(w, n, x - fl, reps) + fl

    def eval_word(self, codes, xs, long long reps=1):
        cdef int32_t[::1] w = np.ascontiguousarray(np.append(codes, 0), dtype=np.int32)
        cdef Py_ssize_t n = w.shape[0] - 1
        cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64).ravel()
        out = np.empty(x.shape[0])
        cdef double[::1] o = out
        cdef Py_ssize_t i
        with nogil:
            for i in range(x.shape[0]):
                o[i] = self.eval1(&w[0], n, x[i], reps)
        return out.reshape(np.shape(xs))

    def trajectory(self, codes, xs):
        cdef int32_t[::1] w = np.ascontiguousarray(np.append(codes, 0), dtype=np.int32)
        cdef Py_ssize_t n = w.shape[0] - 1
        cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
        cdef Py_ssize_t m = x.shape[0]
        out = np.empty((n + 1, m))
        cdef double[:, ::1] o = out
        cdef Py_ssize_t i, j
        cdef double fl, y
        with nogil:
            for j in range(m):
                fl = floor(x[j])
                y = x[j] - fl
                o[0, j] = y + fl
                for i in range(n):
                    y = self.gen(w[i], y)
                    o[i + 1, j] = y + fl
        return out

    def eval_rows(self, rows, xs):
        cdef const int32_t[:, ::1] r = np.ascontiguousarray(rows, dtype=np.int32)
        cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
        cdef Py_ssize_t M = r.shape[0]
        cdef Py_ssize_t n = r.shape[1]
        out = np.empty(M)
        cdef double[::1] o = out
        cdef Py_ssize_t i, t
        cdef double fl, y
        with nogil:
            for i in range(M):
                fl = floor(x[i])
                y = x[i] - fl
                for t in range(n):
                    y = self.gen(r[i, t], y)
                o[i] = y + fl
        return out

    # -- translation numbers --------------------------------------------------

    cdef TN tn(self, const int32_t* w, Py_ssize_t n, double tol, int grid, int q_max,
               double ztol, double* buf) noexcept nogil:
        cdef TN res
        cdef Py_ssize_t i
        cdef bint rigid = True
        cdef long long nit = <long long> ceil(1.0 / tol)
        cdef double alpha, g, lo, hi, gmin, gmax, x, blo, bhi, slack, rq
        cdef bint certain, have_est = False
        cdef double est = 0.0
        cdef long long spent = 0
        cdef long long m, fa, pl, ql, pr, qr, p, q
        cdef int levels[5]
        cdef int nlev = 0, li, L
        cdef int qcap
        res.p = 0
        res.q = 0
        res.err = 0.0
        if n == 0:
            res.kind = KIND_INT
            res.value = 0.0
            res.p = 0
            res.q = 1
            return res
        for i in range(n):
            if not self.grigid[w[i]]:
                rigid = False
                break
        if rigid:
            alpha = self.eval1(w, n, 0.0, 1)
            m = <long long> floor(alpha + 0.5)
            if fabs(alpha - m) <= ztol:
                res.kind = KIND_INT
                res.value = <double> m
                res.p = m
                res.q = 1
                return res
            fa = <long long> floor(alpha)
            pl = fa; ql = 1; pr = fa + 1; qr = 1
            while True:
                p = pl + pr
                q = ql + qr
                if q > q_max:
                    break
                g = q * alpha - p
                if fabs(g) <= ztol:
                    res.kind = KIND_RAT
                    res.value = (<double> p) / q
                    res.p = p
                    res.q = q
                    return res
                if g > 0:
                    pl = p; ql = q
                else:
                    pr = p; qr = q
            res.kind = KIND_APPROX
            res.value = alpha
            res.err = 1.0 / nit
            return res
        L = 8
        while L < grid and L <= 4096:
            levels[nlev] = L
            nlev += 1
            L *= 8
        levels[nlev] = grid
        nlev += 1
        blo = -1e300
        bhi = 1e300
        for li in range(nlev):
            L = levels[li]
            slack = 1.0 / L
            lo = 1e300
            hi = -1e300
            for i in range(L):
                x = (<double> i) / L
                buf[i] = self.run(w, n, x, 1) - x
                if buf[i] < lo:
                    lo = buf[i]
                if buf[i] > hi:
                    hi = buf[i]
            m = <long long> ceil(lo - ztol)
            if m <= hi + ztol:
                self.confirm(w, n, buf, L, m, ztol)
                res.kind = KIND_INT
                res.value = <double> m
                res.p = m
                res.q = 1
                return res
            if lo - slack > blo:
                blo = lo - slack
            if hi + slack < bhi:
                bhi = hi + slack
            qcap = q_max if li == nlev - 1 else (q_max if q_max < COARSE_Q else COARSE_Q)
            fa = <long long> floor(lo)
            pl = fa; ql = 1; pr = fa + 1; qr = 1
            while True:
                p = pl + pr
                q = ql + qr
                if q > qcap:
                    break
                rq = (<double> p) / q
                if rq < blo - BOUND_EPS:
                    pl = p; ql = q
                    continue
                if rq > bhi + BOUND_EPS:
                    pr = p; qr = q
                    continue
                if li == nlev - 1 and not have_est and spent >= nit:
                    # the fallback estimate brackets tau to within 1/nit
                    est = self.run(w, n, 0.0, nit) / nit
                    have_est = True
                    if est - 1.0 / nit > blo:
                        blo = est - 1.0 / nit
                    if est + 1.0 / nit < bhi:
                        bhi = est + 1.0 / nit
                    continue
                if li == nlev - 1:
                    spent += q * L
                gmin = 1e300
                gmax = -1e300
                for i in range(L):
                    x = (<double> i) / L
                    g = self.run(w, n, x, q) - x - p
                    if g < gmin:
                        gmin = g
                    if g > gmax:
                        gmax = g
                if gmin <= ztol and gmax >= -ztol:
                    res.kind = KIND_RAT
                    res.value = rq
                    res.p = p
                    res.q = q
                    return res
                if (p + gmin - slack) / q > blo:
                    blo = (p + gmin - slack) / q
                if (p + gmax + slack) / q < bhi:
                    bhi = (p + gmax + slack) / q
                if gmin > ztol:
                    pl = p; ql = q
                    certain = gmin - slack > ztol
                else:
                    pr = p; qr = q
                    certain = gmax + slack < -ztol
                if not certain and li != nlev - 1:
                    break
        if not have_est:
            est = self.run(w, n, 0.0, nit) / nit
        res.kind = KIND_APPROX
        res.value = est
        res.err = 1.0 / nit
        return res

    cdef inline double phi(self, const int32_t* w, Py_ssize_t n, double x, long long m) noexcept nogil:
        return self.run(w, n, x, 1) - x - m

    cdef void confirm(self, const int32_t* w, Py_ssize_t n, double* d, int L,
                      long long m, double ztol) noexcept nogil:
        cdef int i, j = -1
        cdef double a, b
        for i in range(L):
            if fabs(d[i] - m) <= ztol:
                return
        for i in range(L):
            a = d[i] - m
            b = d[(i + 1) % L] - m
            if a > 0 and b < 0:
                j = i
                break
        if j < 0:
            for i in range(L):
                a = d[i] - m
                b = d[(i + 1) % L] - m
                if a < 0 and b > 0:
                    j = i
                    break
        if j < 0:
            return
        cdef double xa = (<double> j) / L
        cdef double xb = (<double> (j + 1)) / L if j + 1 < L else 1.0
        cdef double fa = d[j] - m
        cdef double fb = d[(j + 1) % L] - m
        cdef double x = xa, fx
        cdef int side = 0, it
        for it in range(ILLINOIS_MAX):
            if xb - xa <= ILLINOIS_WIDTH:
                break
            x = (xa * fb - xb * fa) / (fb - fa)
            if not (xa < x and x < xb):
                x = 0.5 * (xa + xb)
            fx = self.phi(w, n, x, m)
            if fabs(fx) <= ztol:
                return
            if (fx > 0) == (fa > 0):
                xa = x; fa = fx
                if side == -1:
                    fb *= 0.5
                side = -1
            else:
                xb = x; fb = fx
                if side == 1:
                    fa *= 0.5
                side = 1

    def translation_number(self, codes, double tol, int grid=4096, int q_max=64, double ztol=1e-10):
        cdef int32_t[::1] w = np.ascontiguousarray(np.append(codes, 0), dtype=np.int32)
        cdef Py_ssize_t n = w.shape[0] - 1
        cdef double* buf = self._scratch(grid + 1)
        cdef TN r
        with nogil:
            r = self.tn(&w[0], n, tol, grid, q_max, ztol, buf)
        return (r.kind, r.value, r.p, r.q, r.err)

    # -- random dynamics --------------------------------------------------------

    def stationary_endpoints(self, cumnu, keys, long long n_steps, double x0):
        cdef const double[::1] cn = np.ascontiguousarray(cumnu, dtype=np.float64)
        cdef const uint64_t[::1] ks = np.ascontiguousarray(keys, dtype=np.uint64)
        cdef Py_ssize_t M = ks.shape[0]
        cdef int k = cn.shape[0]
        out = np.empty(M)
        cdef double[::1] o = out
        cdef Py_ssize_t s
        cdef long long t
        cdef double x
        with nogil:
            for s in range(M):
                x = x0
                for t in range(n_steps):
                    x = self.gen(letter_of(uniform_at(ks[s], t), &cn[0], k), x)
                o[s] = x - floor(x)
        return out

    def orbit(self, cumnu, uint64_t key, long long n, double x0):
        cdef const double[::1] cn = np.ascontiguousarray(cumnu, dtype=np.float64)
        cdef int k = cn.shape[0]
        out = np.empty(n)
        cdef double[::1] o = out
        cdef long long t
        cdef double x = x0
        with nogil:
            for t in range(n):
                x = self.gen(letter_of(uniform_at(key, t), &cn[0], k), x)
                x = x - floor(x)
                o[t] = x
        return out

    def spectrum(self, cumnu, keys, int N, double tol, int grid, int q_max, double ztol):
        cdef const double[::1] cn = np.ascontiguousarray(cumnu, dtype=np.float64)
        cdef const uint64_t[::1] ks = np.ascontiguousarray(keys, dtype=np.uint64)
        cdef Py_ssize_t M = ks.shape[0]
        cdef int k = cn.shape[0]
        out = np.empty(M)
        cdef double[::1] o = out
        wbuf = np.empty(N + 1, dtype=np.int32)
        cdef int32_t[::1] wb = wbuf
        cdef double* buf = self._scratch(grid + 1)
        cdef Py_ssize_t s
        cdef long long n, t
        cdef TN r
        with nogil:
            for s in range(M):
                n = 1 + <long long> floor(uniform_at(ks[s], 0) * N)
                if n > N:
                    n = N
                for t in range(n):
                    wb[t] = letter_of(uniform_at(ks[s], t + 1), &cn[0], k)
                r = self.tn(&wb[0], n, tol, grid, q_max, ztol, buf)
                o[s] = r.value - floor(r.value)
        return out

    def delta_rows(self, fam, fam_off, g_codes, rows, double tol, int grid, int q_max, double ztol):
        cdef int32_t[::1] F = np.ascontiguousarray(np.append(fam, 0), dtype=np.int32)
        cdef const int64_t[::1] off = np.ascontiguousarray(fam_off, dtype=np.int64)
        cdef int32_t[::1] G = np.ascontiguousarray(np.append(g_codes, 0), dtype=np.int32)
        cdef Py_ssize_t ng = G.shape[0] - 1
        cdef const int32_t[:, ::1] H = np.ascontiguousarray(np.atleast_2d(rows), dtype=np.int32)
        cdef Py_ssize_t M = H.shape[0]
        cdef Py_ssize_t nh = H.shape[1]
        cdef int ncp = off.shape[0] - 1
        cdef Py_ssize_t maxf = 0
        cdef int j
        for j in range(ncp):
            if off[j + 1] - off[j] > maxf:
                maxf = off[j + 1] - off[j]
        wbuf = np.empty(nh + 2 * maxf + ng + 1, dtype=np.int32)
        cdef int32_t[::1] wb = wbuf
        verdict = np.zeros(M, dtype=np.int8)
        cvals = np.full((M, ncp), np.nan)
        cdef signed char[::1] vd = verdict
        cdef double[:, ::1] cv = cvals
        cdef double* buf = self._scratch(grid + 1)
        tf_arr = np.empty((ncp, 4))
        cdef double[:, ::1] tf = tf_arr
        cdef TN r, tg, tb
        cdef Py_ssize_t i, t, nf, ninner
        cdef double c
        cdef int first, sgn
        with nogil:
            for j in range(ncp):
                r = self.tn(&F[0] + off[j], off[j + 1] - off[j], tol, grid, q_max, ztol, buf)
                tf[j, 0] = r.kind
                tf[j, 1] = r.value
                tf[j, 2] = r.p
                tf[j, 3] = r.q
            for i in range(M):
                first = 0
                for j in range(ncp):
                    nf = off[j + 1] - off[j]
                    for t in range(nh):
                        wb[t] = H[i, t]
                    for t in range(nf):
                        wb[nh + t] = F[off[j] + t]
                    for t in range(ng):
                        wb[nh + nf + t] = G[t]
                    ninner = nh + nf + ng
                    for t in range(nf):
                        wb[ninner + t] = F[off[j] + t]
                    tg = self.tn(&wb[0], ninner, tol, grid, q_max, ztol, buf)
                    tb = self.tn(&wb[0], ninner + nf, tol, grid, q_max, ztol, buf)
                    if (tb.kind != KIND_APPROX and tg.kind != KIND_APPROX and tf[j, 0] != KIND_APPROX
                            and tb.q == 1 and tg.q == 1 and tf[j, 3] == 1):
                        c = <double> (tb.p - <long long> tf[j, 2] - tg.p)
                    else:
                        c = tb.value - tf[j, 1] - tg.value
                    cv[i, j] = c
                    if fabs(fabs(c) - 1.0) > 1e-9:
                        first = 0
                        break
                    sgn = 1 if c > 0 else -1
                    if j == 0:
                        first = sgn
                    elif sgn != first:
                        first = 0
                        break
                vd[i] = first
        return verdict, cvals
