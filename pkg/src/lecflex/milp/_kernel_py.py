"""Dense bounded-variable simplex kernel (numpy implementation).

Operates in place on a tableau ``T = B^-1 [A | I]`` of shape (m, N), the basis
header, per-column status codes and the full value vector. The compiled
``_kernel`` module implements the same routines with identical pivot rules.
"""

import numpy as np

BASIC = 0
AT_LOWER = 1
AT_UPPER = 2
FREE = 3

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITER_LIMIT = 3
NOT_DUAL_FEASIBLE = 4
NUMERICAL = 5

DROP_TOL = 1e-13
DEGENERATE_SWITCH = 50

IMPLEMENTATION = "python"


def pivot(T, r, q):
    """Gauss-Jordan pivot on (r, q), skipping structural zeros."""
    T[r, :] /= T[r, q]
    col = T[:, q].copy()
    col[r] = 0.0
    rows = np.flatnonzero(col)
    if rows.size:
        cols = np.flatnonzero(T[r, :])
        block = T[np.ix_(rows, cols)] - np.outer(col[rows], T[r, cols])
        block[np.abs(block) < DROP_TOL] = 0.0
        T[np.ix_(rows, cols)] = block
    T[:, q] = 0.0
    T[r, q] = 1.0


def _entering(d, status, lb, ub, opt_tol, bland):
    """Pick the entering column and its direction (+1 increase, -1 decrease)."""
    movable = (status != BASIC) & (lb < ub)
    up = movable & (status != AT_UPPER) & (d < -opt_tol)
    down = movable & (status != AT_LOWER) & (d > opt_tol)
    eligible = up | down
    if not eligible.any():
        return -1, 0
    if bland:
        q = int(np.flatnonzero(eligible)[0])
    else:
        score = np.where(eligible, np.abs(d), -1.0)
        q = int(np.argmax(score))
    return q, (1 if up[q] else -1)


def _primal_ratio(x, lb, ub, basis, a, feas_tol, piv_tol, harris):
    """Ratio test for the move ``x_B -= theta * a``.

    Returns (row, theta, bound) with row = -1 when nothing blocks.
    """
    xb = x[basis]
    lbb = lb[basis]
    ubb = ub[basis]
    dec = a > piv_tol
    inc = a < -piv_tol
    # target bound each candidate row runs into
    target = np.full(a.shape, np.nan)
    relax = np.zeros(a.shape)
    above = xb > ubb + feas_tol
    below = xb < lbb - feas_tol
    feas = ~(above | below)
    m1 = dec & above
    target[m1] = ubb[m1]
    m2 = dec & feas & np.isfinite(lbb)
    target[m2] = lbb[m2]
    relax[m2] = feas_tol
    m3 = inc & below
    target[m3] = lbb[m3]
    m4 = inc & feas & np.isfinite(ubb)
    target[m4] = ubb[m4]
    relax[m4] = -feas_tol
    cand = m1 | m2 | m3 | m4
    if not cand.any():
        return -1, np.inf, 0.0
    idx = np.flatnonzero(cand)
    exact = (xb[idx] - target[idx]) / a[idx]
    if harris:
        relaxed = (xb[idx] - target[idx] + relax[idx]) / a[idx]
        theta_max = relaxed.min()
        ok = exact <= theta_max
        mags = np.where(ok, np.abs(a[idx]), -1.0)
        k = int(np.argmax(mags))
    else:
        theta_min = exact.min()
        ties = np.flatnonzero(exact <= theta_min)
        k = int(ties[np.argmin(basis[idx[ties]])])
    r = int(idx[k])
    return r, max(float(exact[k]), 0.0), float(target[r])


def primal(T, basis, status, x, lb, ub, c, d, max_iter, feas_tol, opt_tol, piv_tol):
    """Composite phase-1/phase-2 primal simplex from the current basis."""
    m = T.shape[0]
    it = 0
    degenerate = 0
    phase = 0
    while True:
        xb = x[basis]
        lbb = lb[basis]
        ubb = ub[basis]
        below = xb < lbb - feas_tol
        above = xb > ubb + feas_tol
        infeasible = below | above
        if infeasible.any():
            rows = np.flatnonzero(infeasible)
            w = np.where(above[rows], 1.0, -1.0)
            d[:] = -(w @ T[rows, :])
            d[basis] = 0.0
            phase = 1
        elif phase != 2:
            d[:] = c - c[basis] @ T
            d[basis] = 0.0
            phase = 2
        bland = degenerate > DEGENERATE_SWITCH
        q, s = _entering(d, status, lb, ub, opt_tol, bland)
        if q < 0:
            return (INFEASIBLE if phase == 1 else OPTIMAL), it
        if it >= max_iter:
            return ITER_LIMIT, it
        it += 1
        a = s * T[:, q]
        r, theta, target = _primal_ratio(x, lb, ub, basis, a, feas_tol, piv_tol, not bland)
        span = ub[q] - lb[q]
        if r < 0 and not np.isfinite(span):
            return (UNBOUNDED if phase == 2 else NUMERICAL), it
        if np.isfinite(span) and span <= theta:
            # bound flip, basis unchanged
            x[basis] -= span * a
            if status[q] == AT_LOWER:
                x[q] = ub[q]
                status[q] = AT_UPPER
            else:
                x[q] = lb[q]
                status[q] = AT_LOWER
            degenerate = 0
            continue
        x[basis] -= theta * a
        x[q] += s * theta
        leaving = basis[r]
        x[leaving] = target
        status[leaving] = AT_LOWER if target == lb[leaving] else AT_UPPER
        pivot(T, r, q)
        basis[r] = q
        status[q] = BASIC
        if phase == 2:
            dq = d[q]
            if dq != 0.0:
                d -= dq * T[r, :]
            d[q] = 0.0
        degenerate = degenerate + 1 if theta <= 1e-12 else 0
    return NUMERICAL, it  # pragma: no cover


def dual_feasible(d, status, lb, ub, opt_tol):
    movable = (status != BASIC) & (lb < ub)
    bad = movable & (
        ((status == AT_LOWER) & (d < -opt_tol))
        | ((status == AT_UPPER) & (d > opt_tol))
        | ((status == FREE) & (np.abs(d) > opt_tol))
    )
    return not bad.any()


def dual(T, basis, status, x, lb, ub, c, d, max_iter, feas_tol, opt_tol, piv_tol):
    """Dual simplex from a dual-feasible basis; restores primal feasibility."""
    d[:] = c - c[basis] @ T
    d[basis] = 0.0
    if not dual_feasible(d, status, lb, ub, opt_tol):
        return NOT_DUAL_FEASIBLE, 0
    it = 0
    while True:
        xb = x[basis]
        viol = np.maximum(lb[basis] - xb, xb - ub[basis])
        r = int(np.argmax(viol))
        if viol[r] <= feas_tol:
            return OPTIMAL, it
        if it >= max_iter:
            return ITER_LIMIT, it
        it += 1
        leaving = basis[r]
        to_lower = xb[r] < lb[leaving]
        target = lb[leaving] if to_lower else ub[leaving]
        row = T[r, :]
        movable = (status != BASIC) & (lb < ub)
        if to_lower:
            ok = movable & (((status != AT_UPPER) & (row < -piv_tol)) | ((status != AT_LOWER) & (row > piv_tol)))
        else:
            ok = movable & (((status != AT_UPPER) & (row > piv_tol)) | ((status != AT_LOWER) & (row < -piv_tol)))
        if not ok.any():
            return INFEASIBLE, it
        idx = np.flatnonzero(ok)
        mag = np.abs(row[idx])
        ad = np.abs(d[idx])
        theta_max = ((ad + opt_tol) / mag).min()
        pick = np.where(ad / mag <= theta_max, mag, -1.0)
        q = int(idx[int(np.argmax(pick))])
        delta = (xb[r] - target) / T[r, q]
        x[basis] -= delta * T[:, q]
        x[q] += delta
        x[leaving] = target
        status[leaving] = AT_LOWER if to_lower else AT_UPPER
        ratio = d[q] / T[r, q]
        if ratio != 0.0:
            d -= ratio * row
        pivot(T, r, q)
        basis[r] = q
        status[q] = BASIC
        d[q] = 0.0
        d[leaving] = -ratio
    return NUMERICAL, it  # pragma: no cover
