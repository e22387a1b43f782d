# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs

cnp.import_array()

DEF SIMPLEX_OPTIMAL = 0
DEF SIMPLEX_UNBOUNDED = 1
DEF SIMPLEX_ITER_LIMIT = 2

cdef double RATIO_TIE = 1e-11
cdef double DEGENERATE_STEP = 1e-12


def simplex_iterate(double[:, ::1] T, double[::1] x, double[::1] lo, double[::1] hi,
                    double[::1] d, cnp.int64_t[::1] basis, cnp.int64_t[::1] pos,
                    long max_iter, long bland_after, double opt_tol, double piv_tol):
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1]
    cdef Py_ssize_t i, j, k, r
    cdef long iters = 0, degenerate = 0
    cdef bint bland = False
    cdef double best, s, direction, a, amax, tmin, tflip, t, step, lim, piv, f, dj
    cdef cnp.int64_t bmin, leaving
    cdef double[::1] col = np.empty(m, dtype=np.float64)
    cdef double[::1] lims = np.empty(m, dtype=np.float64)
    cdef double[::1] prow = np.empty(n, dtype=np.float64)
    cdef double[::1] xb = np.empty(m, dtype=np.float64)

    while True:
        # pricing: Dantzig (largest |d|) or Bland (first eligible)
        j = -1
        best = 0.0
        direction = 0.0
        for k in range(n):
            if pos[k] >= 0:
                continue
            if x[k] < hi[k] and d[k] > opt_tol:
                s = d[k]
                f = 1.0
            elif x[k] > lo[k] and d[k] < -opt_tol:
                s = -d[k]
                f = -1.0
            else:
                continue
            if bland:
                j = k
                direction = f
                break
            if s > best:
                best = s
                j = k
                direction = f
        if j < 0:
            return SIMPLEX_OPTIMAL, iters, bland
        if iters >= max_iter:
            return SIMPLEX_ITER_LIMIT, iters, bland

        # ratio test
        tmin = INFINITY
        for i in range(m):
            col[i] = T[i, j]
            xb[i] = x[basis[i]]
            a = direction * col[i]
            if a > piv_tol:
                lim = (xb[i] - lo[basis[i]]) / a
            elif a < -piv_tol:
                lim = (hi[basis[i]] - xb[i]) / (-a)
            else:
                lim = INFINITY
            if lim < 0.0:
                lim = 0.0
            lims[i] = lim
            if lim < tmin:
                tmin = lim
        r = -1
        if tmin < INFINITY:
            amax = -1.0
            if not bland:
                for i in range(m):
                    if lims[i] <= tmin + RATIO_TIE:
                        a = fabs(direction * col[i])
                        if a > amax:
                            amax = a
            bmin = 0
            for i in range(m):
                if lims[i] <= tmin + RATIO_TIE:
                    if not bland and fabs(direction * col[i]) != amax:
                        continue
                    if r < 0 or basis[i] < bmin:
                        r = i
                        bmin = basis[i]
            tmin = lims[r]

        tflip = hi[j] - lo[j]
        if tflip <= tmin:
            t = tflip
            r = -1
        else:
            t = tmin
        if t == INFINITY:
            return SIMPLEX_UNBOUNDED, iters, bland

        step = direction * t
        for i in range(m):
            x[basis[i]] = xb[i] - step * col[i]
        if r < 0:
            x[j] = hi[j] if direction > 0 else lo[j]
        else:
            leaving = basis[r]
            x[j] = x[j] + step
            x[leaving] = lo[leaving] if direction * col[r] > 0 else hi[leaving]
            piv = col[r]
            for k in range(n):
                prow[k] = T[r, k] / piv
            for i in range(m):
                if i == r:
                    continue
                f = col[i]
                if f == 0.0:
                    continue
                for k in range(n):
                    T[i, k] = T[i, k] - f * prow[k]
            for k in range(n):
                T[r, k] = prow[k]
            dj = d[j]
            for k in range(n):
                d[k] = d[k] - dj * prow[k]
            basis[r] = j
            pos[j] = r
            pos[leaving] = -1

        iters += 1
        if t <= DEGENERATE_STEP:
            degenerate += 1
            if degenerate >= bland_after:
                bland = True
        else:
            degenerate = 0


cdef struct Search:
    Py_ssize_t n
    Py_ssize_t K
    Py_ssize_t n_urllc
    cnp.int64_t* slots
    double* r
    cnp.int8_t* is_urllc
    double* q
    cnp.int8_t* used
    double* delivered
    cnp.int64_t* choice
    cnp.int64_t* best_choice
    double best_obj
    bint found
    double obj_tol
    double demand_tol
    long leaves


cdef bint _lex_less(Search* s):
    # compare current choice with best choice as sorted (block, service) pair lists
    cdef Py_ssize_t ia = 0, ib = 0
    cdef Py_ssize_t n = s.n
    while True:
        while ia < n and s.choice[ia] < 0:
            ia += 1
        while ib < n and s.best_choice[ib] < 0:
            ib += 1
        if ia == n:
            return ib < n
        if ib == n:
            return False
        if ia != ib:
            return ia < ib
        if s.choice[ia] != s.best_choice[ib]:
            return s.choice[ia] < s.best_choice[ib]
        ia += 1
        ib += 1


cdef void _leaf(Search* s, double obj):
    cdef Py_ssize_t k
    cdef double scale
    s.leaves += 1
    for k in range(s.n_urllc):
        if s.delivered[k] < s.q[k] - s.demand_tol:
            return
    if not s.found:
        s.found = True
        s.best_obj = obj
        for k in range(s.n):
            s.best_choice[k] = s.choice[k]
        return
    scale = fabs(s.best_obj)
    if scale < 1.0:
        scale = 1.0
    if obj > s.best_obj + s.obj_tol * scale or (
            obj >= s.best_obj - s.obj_tol * scale and _lex_less(s)):
        s.best_obj = obj
        for k in range(s.n):
            s.best_choice[k] = s.choice[k]


cdef void _visit(Search* s, Py_ssize_t b, double obj):
    cdef Py_ssize_t k
    cdef cnp.int64_t* sl
    cdef double rate
    if b == s.n:
        _leaf(s, obj)
        return
    _visit(s, b + 1, obj)
    sl = s.slots + 4 * b
    if s.used[sl[0]] or s.used[sl[1]] or s.used[sl[2]] or s.used[sl[3]]:
        return
    for k in range(4):
        s.used[sl[k]] = 1
    for k in range(s.K):
        rate = s.r[b * s.K + k]
        if rate <= 0.0:
            continue
        s.choice[b] = k
        s.delivered[k] += rate
        if s.is_urllc[k]:
            _visit(s, b + 1, obj)
        else:
            _visit(s, b + 1, obj + rate)
        s.delivered[k] -= rate
    s.choice[b] = -1
    for k in range(4):
        s.used[sl[k]] = 0


def enumerate_best(slots, r, is_urllc, q, Py_ssize_t n_minislots, double obj_tol, double demand_tol):
    # private copies: callers may pass read-only arrays
    cdef cnp.int64_t[:, ::1] slots_v = np.array(slots, dtype=np.int64, order="C")
    cdef double[:, ::1] r_v = np.array(r, dtype=np.float64, order="C")
    cdef cnp.int8_t[::1] urllc_v = np.array(is_urllc, dtype=np.int8).reshape(-1)
    cdef double[::1] q_v = np.array(q, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t n = r_v.shape[0], K = r_v.shape[1]
    cdef cnp.int8_t[::1] used = np.zeros(max(n_minislots, 1), dtype=np.int8)
    cdef double[::1] delivered = np.zeros(max(K, 1), dtype=np.float64)
    choice = np.full(max(n, 1), -1, dtype=np.int64)
    best_choice = np.full(max(n, 1), -1, dtype=np.int64)
    cdef cnp.int64_t[::1] choice_v = choice
    cdef cnp.int64_t[::1] best_v = best_choice
    cdef double[::1] q_pad = np.zeros(max(q_v.shape[0], 1), dtype=np.float64)
    cdef Py_ssize_t k
    for k in range(q_v.shape[0]):
        q_pad[k] = q_v[k]

    cdef Search s
    s.n = n
    s.K = K
    s.n_urllc = q_v.shape[0]
    s.slots = &slots_v[0, 0] if n > 0 else NULL
    s.r = &r_v[0, 0] if n > 0 and K > 0 else NULL
    s.is_urllc = &urllc_v[0] if K > 0 else NULL
    s.q = &q_pad[0]
    s.used = &used[0]
    s.delivered = &delivered[0]
    s.choice = &choice_v[0]
    s.best_choice = &best_v[0]
    s.best_obj = 0.0
    s.found = False
    s.obj_tol = obj_tol
    s.demand_tol = demand_tol
    s.leaves = 0
    _visit(&s, 0, 0.0)
    if not s.found:
        return False, 0.0, np.full(n, -1, dtype=np.int64), s.leaves
    return True, s.best_obj, best_choice[:n].copy(), s.leaves
