# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; see ``_pykernels`` for semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport qsort
from libc.string cimport memcpy

from .errors import RankDeficient

cnp.import_array()

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

cdef double HUBER_K = 1.345
cdef double MAD_NORMAL = 0.6745
cdef double RCOND = 1e-10


def lasso_cd_gram(G, c, double lam, double tol, long max_iter, beta):
    cdef const double[:, ::1] g = np.ascontiguousarray(G, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    out = np.array(beta, dtype=np.float64, copy=True)
    cdef double[::1] b = out
    cdef Py_ssize_t p = cv.shape[0]
    cdef Py_ssize_t j, k
    cdef long it
    cdef double gjj, rho, new, chg, maxchg
    for it in range(1, max_iter + 1):
        maxchg = 0.0
        for j in range(p):
            gjj = g[j, j]
            if gjj <= 1e-300:
                new = 0.0
            else:
                rho = cv[j]
                for k in range(p):
                    if k != j:
                        rho -= g[j, k] * b[k]
                if rho > lam:
                    new = (rho - lam) / gjj
                elif rho < -lam:
                    new = (rho + lam) / gjj
                else:
                    new = 0.0
            chg = fabs(new - b[j])
            if chg > maxchg:
                maxchg = chg
            b[j] = new
        if maxchg < tol:
            return out, it, True
    return out, max_iter, False


cdef int _cmp_double(const void* a, const void* b) noexcept nogil:
    cdef double x = (<double*>a)[0]
    cdef double y = (<double*>b)[0]
    return (x > y) - (x < y)


cdef double _median(double* v, Py_ssize_t n) noexcept nogil:
    qsort(v, n, sizeof(double), _cmp_double)
    if n % 2:
        return v[n // 2]
    return 0.5 * (v[n // 2 - 1] + v[n // 2])


cdef int _qr_lstsq(double[::1, :] A, double[::1] b, Py_ssize_t m, Py_ssize_t k,
                   double[::1] x, Py_ssize_t[::1] perm, double[::1] z) noexcept nogil:
    """Householder QR with column pivoting; A (column-major) and b are overwritten.

    Returns 0 on success, 1 when the relative pivot drops below RCOND.
    """
    cdef Py_ssize_t i, j, c, best, tmpi
    cdef double nrm, bestn, alpha, r00 = 0.0, vnorm2, t, tmp
    for j in range(k):
        perm[j] = j
    for j in range(k):
        best = j
        bestn = -1.0
        for c in range(j, k):
            nrm = 0.0
            for i in range(j, m):
                nrm += A[i, c] * A[i, c]
            if nrm > bestn:
                bestn = nrm
                best = c
        if best != j:
            for i in range(m):
                tmp = A[i, j]
                A[i, j] = A[i, best]
                A[i, best] = tmp
            tmpi = perm[j]
            perm[j] = perm[best]
            perm[best] = tmpi
        nrm = sqrt(bestn)
        if j == 0:
            r00 = nrm
            if not r00 > 0.0:
                return 1
        if nrm < RCOND * r00:
            return 1
        alpha = -nrm if A[j, j] >= 0.0 else nrm
        # v = A[j:, j] - alpha e_1, stored in place
        A[j, j] -= alpha
        vnorm2 = 0.0
        for i in range(j, m):
            vnorm2 += A[i, j] * A[i, j]
        if vnorm2 > 0.0:
            for c in range(j + 1, k):
                t = 0.0
                for i in range(j, m):
                    t += A[i, j] * A[i, c]
                t = 2.0 * t / vnorm2
                for i in range(j, m):
                    A[i, c] -= t * A[i, j]
            t = 0.0
            for i in range(j, m):
                t += A[i, j] * b[i]
            t = 2.0 * t / vnorm2
            for i in range(j, m):
                b[i] -= t * A[i, j]
        # diagonal of R; the reflector below the diagonal is no longer needed
        A[j, j] = alpha
        for i in range(j + 1, m):
            A[i, j] = 0.0
    for j in range(k - 1, -1, -1):
        t = b[j]
        for c in range(j + 1, k):
            t -= A[j, c] * z[c]
        z[j] = t / A[j, j]
    for j in range(k):
        x[perm[j]] = z[j]
    return 0


cdef int _weighted_fit(const double[:, ::1] X, const double[::1] y, double[::1] w,
                       double[::1, :] A, double[::1] rhs, double[::1] beta,
                       Py_ssize_t[::1] perm, double[::1] z, double[::1] xm,
                       double[::1] coefs) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    cdef double sw = 0.0, ym = 0.0, s, icpt
    for j in range(p):
        xm[j] = 0.0
    for i in range(n):
        sw += w[i]
        ym += w[i] * y[i]
        for j in range(p):
            xm[j] += w[i] * X[i, j]
    ym /= sw
    for j in range(p):
        xm[j] /= sw
    for i in range(n):
        s = sqrt(w[i])
        rhs[i] = (y[i] - ym) * s
        for j in range(p):
            A[i, j] = (X[i, j] - xm[j]) * s
    if _qr_lstsq(A, rhs, n, p, beta, perm, z):
        return 1
    icpt = ym
    for j in range(p):
        icpt -= xm[j] * beta[j]
    coefs[0] = icpt
    for j in range(p):
        coefs[j + 1] = beta[j]
    return 0


cdef void _residuals(const double[:, ::1] X, const double[::1] y, double[::1] coefs, double[::1] r) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j
    cdef double f
    for i in range(n):
        f = coefs[0]
        for j in range(p):
            f += X[i, j] * coefs[j + 1]
        r[i] = y[i] - f


cdef double _huber_obj(double[::1] r, double d) noexcept nogil:
    cdef Py_ssize_t i
    cdef double a, s = 0.0
    for i in range(r.shape[0]):
        a = fabs(r[i])
        if a <= d:
            s += 0.5 * r[i] * r[i]
        else:
            s += d * a - 0.5 * d * d
    return s


def huber_irls(X, y, double delta, double tol, long max_iter):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1], i, j
    if n < p:
        raise RankDeficient(f"{n} rows cannot determine {p} coefficients")
    cdef double[::1, :] A = np.empty((n, p), dtype=np.float64, order="F")
    cdef double[::1] rhs = np.empty(n)
    cdef double[::1] beta = np.empty(p)
    cdef Py_ssize_t[::1] perm = np.empty(p, dtype=np.intp)
    cdef double[::1] z = np.empty(p)
    cdef double[::1] xm = np.empty(p)
    cdef double[::1] w = np.ones(n)
    cdef double[::1] r = np.empty(n)
    cdef double[::1] work = np.empty(n)
    coefs_arr = np.empty(p + 1)
    new_arr = np.empty(p + 1)
    cdef double[::1] coefs = coefs_arr
    cdef double[::1] new = new_arr
    trace_arr = np.empty((max(max_iter, 0), 3))
    cdef double[:, ::1] trace = trace_arr
    cdef double yabs = 0.0, floor_, s, med, d, a, chg, before
    cdef long it
    cdef bint fixed = delta > 0

    with nogil:
        if _weighted_fit(Xv, yv, w, A, rhs, beta, perm, z, xm, coefs):
            with gil:
                raise RankDeficient("pivoted QR: weighted design is rank deficient")
    for i in range(n):
        if fabs(yv[i]) > yabs:
            yabs = fabs(yv[i])
    floor_ = 1e-12 * (1.0 + yabs)
    _residuals(Xv, yv, coefs, r)
    for it in range(1, max_iter + 1):
        if fixed:
            d = delta
        else:
            memcpy(&work[0], &r[0], n * sizeof(double))
            med = _median(&work[0], n)
            for i in range(n):
                work[i] = fabs(r[i] - med)
            s = _median(&work[0], n) / MAD_NORMAL
            if s <= floor_:
                return coefs_arr, it - 1, True, trace_arr[: it - 1].copy()
            d = HUBER_K * s
        before = _huber_obj(r, d)
        for i in range(n):
            a = fabs(r[i])
            w[i] = d / a if a > d else 1.0
        with nogil:
            if _weighted_fit(Xv, yv, w, A, rhs, beta, perm, z, xm, new):
                with gil:
                    raise RankDeficient("pivoted QR: weighted design is rank deficient")
        _residuals(Xv, yv, new, r)
        trace[it - 1, 0] = before
        trace[it - 1, 1] = _huber_obj(r, d)
        trace[it - 1, 2] = d
        chg = 0.0
        for j in range(p + 1):
            a = fabs(new[j] - coefs[j])
            if a > chg:
                chg = a
            coefs[j] = new[j]
        if chg < tol:
            return coefs_arr, it, True, trace_arr[:it].copy()
    return coefs_arr, max_iter, False, trace_arr


def signed_rank_counts(ranks2):
    """Enumerate all 2**n sign vectors in Gray-code order."""
    cdef const cnp.int64_t[::1] r = np.ascontiguousarray(ranks2, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0], i
    if n > 40:
        raise ValueError("exact enumeration is limited to 40 ranks")
    cdef cnp.int64_t total = 0
    for i in range(n):
        total += r[i]
    out = np.zeros(total + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = out
    cdef unsigned long long code, limit = 1ULL << n, gray = 0
    cdef cnp.int64_t s = 0
    cdef int bit
    counts[0] = 1
    with nogil:
        for code in range(1, limit):
            bit = __builtin_ctzll(code)
            if (gray >> bit) & 1ULL:
                s -= r[bit]
            else:
                s += r[bit]
            gray ^= 1ULL << bit
            counts[s] += 1
    return out
