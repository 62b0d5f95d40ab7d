# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bounded-variable simplex kernel.

Same algorithms, tie-breaking and return codes as ``_kernel_py``; the loops
run in C and skip structural zeros of the pivot row and column.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite, INFINITY

cnp.import_array()

cdef enum:
    C_BASIC = 0
    C_AT_LOWER = 1
    C_AT_UPPER = 2
    C_FREE = 3

cdef enum:
    C_OPTIMAL = 0
    C_INFEASIBLE = 1
    C_UNBOUNDED = 2
    C_ITER_LIMIT = 3
    C_NOT_DUAL_FEASIBLE = 4
    C_NUMERICAL = 5

cdef double C_DROP_TOL = 1e-13
cdef int C_DEGENERATE_SWITCH = 50

BASIC = C_BASIC
AT_LOWER = C_AT_LOWER
AT_UPPER = C_AT_UPPER
FREE = C_FREE

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITER_LIMIT = 3
NOT_DUAL_FEASIBLE = 4
NUMERICAL = 5

DROP_TOL = 1e-13
DEGENERATE_SWITCH = 50

IMPLEMENTATION = "cython"


cdef void _pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t q,
                 Py_ssize_t[::1] rows, Py_ssize_t[::1] cols) noexcept nogil:
    cdef Py_ssize_t m = T.shape[0], N = T.shape[1]
    cdef Py_ssize_t i, j, k, nr = 0, nc = 0
    cdef double piv = T[r, q], f, v
    for j in range(N):
        if T[r, j] != 0.0:
            T[r, j] = T[r, j] / piv
            cols[nc] = j
            nc += 1
    for i in range(m):
        if i != r and T[i, q] != 0.0:
            rows[nr] = i
            nr += 1
    for k in range(nr):
        i = rows[k]
        f = T[i, q]
        for j in range(nc):
            v = T[i, cols[j]] - f * T[r, cols[j]]
            if fabs(v) < C_DROP_TOL:
                v = 0.0
            T[i, cols[j]] = v
    for i in range(m):
        T[i, q] = 0.0
    T[r, q] = 1.0


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t q):
    cdef Py_ssize_t[::1] rows = np.empty(T.shape[0], dtype=np.intp)
    cdef Py_ssize_t[::1] cols = np.empty(T.shape[1], dtype=np.intp)
    _pivot(T, r, q, rows, cols)


cdef inline bint _movable(signed char st, double lo, double hi) noexcept nogil:
    return st != C_BASIC and lo < hi


cdef Py_ssize_t _entering(double[::1] d, signed char[::1] status, double[::1] lb,
                          double[::1] ub, double opt_tol, bint bland, int* sign) noexcept nogil:
    cdef Py_ssize_t j, N = d.shape[0], best = -1
    cdef double bestv = -1.0, dj
    cdef int s
    for j in range(N):
        if not _movable(status[j], lb[j], ub[j]):
            continue
        dj = d[j]
        s = 0
        if status[j] != C_AT_UPPER and dj < -opt_tol:
            s = 1
        elif status[j] != C_AT_LOWER and dj > opt_tol:
            s = -1
        if s == 0:
            continue
        if bland:
            sign[0] = s
            return j
        if fabs(dj) > bestv:
            bestv = fabs(dj)
            best = j
            sign[0] = s
    return best


def primal(double[:, ::1] T, cnp.intp_t[::1] basis, signed char[::1] status,
           double[::1] x, double[::1] lb, double[::1] ub, double[::1] c, double[::1] d,
           long max_iter, double feas_tol, double opt_tol, double piv_tol):
    """Composite phase-1/phase-2 primal simplex from the current basis."""
    cdef Py_ssize_t m = T.shape[0], N = T.shape[1]
    cdef Py_ssize_t i, j, k, q, r, leaving, ninf
    cdef long it = 0
    cdef int degenerate = 0, phase = 0, s = 0
    cdef bint bland, harris, blocked
    cdef double xi, lo, hi, ai, w, theta, target, exact, relaxed, theta_max, best_mag
    cdef double span, dq, tgt_i, best_exact
    cdef Py_ssize_t best_row, bid
    cdef double[::1] a = np.empty(m)
    cdef cnp.intp_t[::1] infrows = np.empty(m, dtype=np.intp)
    cdef double[::1] wv = np.empty(m)
    cdef double[::1] tgt = np.empty(m)
    cdef double[::1] ex = np.empty(m)
    cdef signed char[::1] cand = np.empty(m, dtype=np.int8)
    cdef Py_ssize_t[::1] prow = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] pcol = np.empty(N, dtype=np.intp)
    cdef int code = C_NUMERICAL

    with nogil:
        while True:
            ninf = 0
            for i in range(m):
                j = basis[i]
                xi = x[j]
                if xi < lb[j] - feas_tol:
                    infrows[ninf] = i
                    wv[ninf] = -1.0
                    ninf += 1
                elif xi > ub[j] + feas_tol:
                    infrows[ninf] = i
                    wv[ninf] = 1.0
                    ninf += 1
            if ninf > 0:
                for j in range(N):
                    d[j] = 0.0
                for k in range(ninf):
                    i = infrows[k]
                    w = wv[k]
                    for j in range(N):
                        if T[i, j] != 0.0:
                            d[j] -= w * T[i, j]
                for i in range(m):
                    d[basis[i]] = 0.0
                phase = 1
            elif phase != 2:
                for j in range(N):
                    d[j] = c[j]
                for i in range(m):
                    w = c[basis[i]]
                    if w != 0.0:
                        for j in range(N):
                            if T[i, j] != 0.0:
                                d[j] -= w * T[i, j]
                for i in range(m):
                    d[basis[i]] = 0.0
                phase = 2
            bland = degenerate > C_DEGENERATE_SWITCH
            q = _entering(d, status, lb, ub, opt_tol, bland, &s)
            if q < 0:
                if phase == 1:
                    code = C_INFEASIBLE
                    break
                code = C_OPTIMAL
                break
            if it >= max_iter:
                code = C_ITER_LIMIT
                break
            it += 1
            harris = not bland
            # ratio test
            theta_max = INFINITY
            blocked = False
            for i in range(m):
                ai = s * T[i, q]
                a[i] = ai
                cand[i] = 0
                if ai > piv_tol or ai < -piv_tol:
                    j = basis[i]
                    xi = x[j]
                    lo = lb[j]
                    hi = ub[j]
                    relaxed = 0.0
                    if ai > piv_tol:
                        if xi > hi + feas_tol:
                            tgt_i = hi
                            cand[i] = 1
                        elif xi >= lo - feas_tol and isfinite(lo):
                            tgt_i = lo
                            relaxed = feas_tol
                            cand[i] = 1
                    else:
                        if xi < lo - feas_tol:
                            tgt_i = lo
                            cand[i] = 1
                        elif xi <= hi + feas_tol and isfinite(hi):
                            tgt_i = hi
                            relaxed = -feas_tol
                            cand[i] = 1
                    if cand[i]:
                        blocked = True
                        tgt[i] = tgt_i
                        ex[i] = (xi - tgt_i) / ai
                        if harris:
                            exact = (xi - tgt_i + relaxed) / ai
                        else:
                            exact = ex[i]
                        if exact < theta_max:
                            theta_max = exact
            r = -1
            theta = INFINITY
            target = 0.0
            if blocked:
                if harris:
                    best_mag = -1.0
                    for i in range(m):
                        if cand[i] and ex[i] <= theta_max and fabs(a[i]) > best_mag:
                            best_mag = fabs(a[i])
                            r = i
                else:
                    bid = -1
                    for i in range(m):
                        if cand[i] and ex[i] <= theta_max:
                            if r < 0 or basis[i] < bid:
                                r = i
                                bid = basis[i]
                theta = ex[r]
                if theta < 0.0:
                    theta = 0.0
                target = tgt[r]
            span = ub[q] - lb[q]
            if r < 0 and not isfinite(span):
                if phase == 2:
                    code = C_UNBOUNDED
                    break
                code = C_NUMERICAL
                break
            if isfinite(span) and span <= theta:
                for i in range(m):
                    if a[i] != 0.0:
                        x[basis[i]] -= span * a[i]
                if status[q] == C_AT_LOWER:
                    x[q] = ub[q]
                    status[q] = C_AT_UPPER
                else:
                    x[q] = lb[q]
                    status[q] = C_AT_LOWER
                degenerate = 0
                continue
            for i in range(m):
                if a[i] != 0.0:
                    x[basis[i]] -= theta * a[i]
            x[q] += s * theta
            leaving = basis[r]
            x[leaving] = target
            if target == lb[leaving]:
                status[leaving] = C_AT_LOWER
            else:
                status[leaving] = C_AT_UPPER
            _pivot(T, r, q, prow, pcol)
            basis[r] = q
            status[q] = C_BASIC
            if phase == 2:
                dq = d[q]
                if dq != 0.0:
                    for j in range(N):
                        if T[r, j] != 0.0:
                            d[j] -= dq * T[r, j]
                d[q] = 0.0
            if theta <= 1e-12:
                degenerate += 1
            else:
                degenerate = 0
    return code, it


def dual_feasible(double[::1] d, signed char[::1] status, double[::1] lb, double[::1] ub,
                  double opt_tol):
    cdef Py_ssize_t j
    for j in range(d.shape[0]):
        if not _movable(status[j], lb[j], ub[j]):
            continue
        if status[j] == C_AT_LOWER and d[j] < -opt_tol:
            return False
        if status[j] == C_AT_UPPER and d[j] > opt_tol:
            return False
        if status[j] == C_FREE and fabs(d[j]) > opt_tol:
            return False
    return True


def dual(double[:, ::1] T, cnp.intp_t[::1] basis, signed char[::1] status,
         double[::1] x, double[::1] lb, double[::1] ub, double[::1] c, double[::1] d,
         long max_iter, double feas_tol, double opt_tol, double piv_tol):
    """Dual simplex from a dual-feasible basis; restores primal feasibility."""
    cdef Py_ssize_t m = T.shape[0], N = T.shape[1]
    cdef Py_ssize_t i, j, r, q, leaving
    cdef long it = 0
    cdef double w, v, best, xr, target, rj, mag, theta_max, pick, delta, ratio
    cdef bint to_lower, ok
    cdef int code = C_NUMERICAL
    cdef Py_ssize_t[::1] prow = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] pcol = np.empty(N, dtype=np.intp)

    for j in range(N):
        d[j] = c[j]
    for i in range(m):
        w = c[basis[i]]
        if w != 0.0:
            for j in range(N):
                if T[i, j] != 0.0:
                    d[j] -= w * T[i, j]
    for i in range(m):
        d[basis[i]] = 0.0
    if not dual_feasible(d, status, lb, ub, opt_tol):
        return NOT_DUAL_FEASIBLE, 0

    with nogil:
        while True:
            r = -1
            best = -INFINITY
            for i in range(m):
                j = basis[i]
                v = lb[j] - x[j]
                if x[j] - ub[j] > v:
                    v = x[j] - ub[j]
                if v > best:
                    best = v
                    r = i
            if r < 0 or best <= feas_tol:
                code = C_OPTIMAL
                break
            if it >= max_iter:
                code = C_ITER_LIMIT
                break
            it += 1
            leaving = basis[r]
            xr = x[leaving]
            to_lower = xr < lb[leaving]
            if to_lower:
                target = lb[leaving]
            else:
                target = ub[leaving]
            theta_max = INFINITY
            q = -1
            for j in range(N):
                rj = T[r, j]
                if rj == 0.0 or not _movable(status[j], lb[j], ub[j]):
                    continue
                if to_lower:
                    ok = (status[j] != C_AT_UPPER and rj < -piv_tol) or (status[j] != C_AT_LOWER and rj > piv_tol)
                else:
                    ok = (status[j] != C_AT_UPPER and rj > piv_tol) or (status[j] != C_AT_LOWER and rj < -piv_tol)
                if ok:
                    q = j
                    v = (fabs(d[j]) + opt_tol) / fabs(rj)
                    if v < theta_max:
                        theta_max = v
            if q < 0:
                code = C_INFEASIBLE
                break
            q = -1
            pick = -1.0
            for j in range(N):
                rj = T[r, j]
                if rj == 0.0 or not _movable(status[j], lb[j], ub[j]):
                    continue
                if to_lower:
                    ok = (status[j] != C_AT_UPPER and rj < -piv_tol) or (status[j] != C_AT_LOWER and rj > piv_tol)
                else:
                    ok = (status[j] != C_AT_UPPER and rj > piv_tol) or (status[j] != C_AT_LOWER and rj < -piv_tol)
                if ok:
                    mag = fabs(rj)
                    if fabs(d[j]) / mag <= theta_max and mag > pick:
                        pick = mag
                        q = j
            delta = (xr - target) / T[r, q]
            for i in range(m):
                if T[i, q] != 0.0:
                    x[basis[i]] -= delta * T[i, q]
            x[q] += delta
            x[leaving] = target
            if to_lower:
                status[leaving] = C_AT_LOWER
            else:
                status[leaving] = C_AT_UPPER
            ratio = d[q] / T[r, q]
            if ratio != 0.0:
                for j in range(N):
                    if T[r, j] != 0.0:
                        d[j] -= ratio * T[r, j]
            _pivot(T, r, q, prow, pcol)
            basis[r] = q
            status[q] = C_BASIC
            d[q] = 0.0
            d[leaving] = -ratio
    return code, it
