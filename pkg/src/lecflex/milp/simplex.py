"""LP driver around the tableau kernels.

Converts a :class:`~lecflex.milp.model.Model` to bounded standard form
``lo <= A x <= hi, lb <= x <= ub`` with one logical column per row, keeps a
warm-startable tableau state and extracts primal values, duals and a dual
bound at termination.
"""

from __future__ import annotations

import math
import os
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import _kernel_py

BASIC = _kernel_py.BASIC
AT_LOWER = _kernel_py.AT_LOWER
AT_UPPER = _kernel_py.AT_UPPER
FREE = _kernel_py.FREE
OPTIMAL = _kernel_py.OPTIMAL
INFEASIBLE = _kernel_py.INFEASIBLE
UNBOUNDED = _kernel_py.UNBOUNDED
ITER_LIMIT = _kernel_py.ITER_LIMIT
NOT_DUAL_FEASIBLE = _kernel_py.NOT_DUAL_FEASIBLE
NUMERICAL = _kernel_py.NUMERICAL


def _load_kernel(name: str | None = None):
    if name is None:
        name = "python" if os.environ.get("LECFLEX_PURE_PYTHON") else "auto"
    if name == "python":
        return _kernel_py
    try:
        from . import _kernel
    except ImportError:
        if name == "cython":
            raise
        return _kernel_py
    return _kernel


kernel = _load_kernel()


def kernel_name() -> str:
    return kernel.IMPLEMENTATION


@contextmanager
def use_kernel(name: str):
    """Temporarily switch kernel ("python" or "cython")."""
    global kernel
    saved = kernel
    kernel = _load_kernel(name)
    try:
        yield kernel
    finally:
        kernel = saved


@dataclass
class StandardForm:
    """Scaled rows ``lo <= A x <= hi`` plus column bounds.

    ``rows`` maps each kept row back to its model row; ``scale`` holds the
    positive factor every kept row was divided by.
    """

    A: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    c0: float
    rows: np.ndarray
    scale: np.ndarray
    is_integer: np.ndarray
    bound_rows: dict
    num_model_rows: int
    trivially_infeasible: bool = False

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]


def standard_form(model, feas_tol: float = 1e-9) -> StandardForm:
    """Scale rows, fold singleton rows into bounds and drop empty rows."""
    n = model.num_variables
    lb = np.array(model.lb, dtype=float)
    ub = np.array(model.ub, dtype=float)
    is_int = np.array(model.is_integer, dtype=bool)
    c = np.zeros(n)
    c0 = 0.0
    if model.objective is not None:
        for j, a in model.objective.terms.items():
            c[j] += a
        c0 = model.objective.const
    kept, lo_list, hi_list, scale_list = [], [], [], []
    bound_rows: dict = {}
    bad = False
    for i, row in enumerate(model.rows):
        lo, hi = model.row_bounds(i)
        if not row:
            if lo > feas_tol or hi < -feas_tol:
                bad = True
            continue
        if len(row) == 1:
            (j, a), = row.items()
            blo, bhi = (lo / a, hi / a) if a > 0 else (hi / a, lo / a)
            if is_int[j]:
                if math.isfinite(blo):
                    blo = math.ceil(blo - 1e-9)
                if math.isfinite(bhi):
                    bhi = math.floor(bhi + 1e-9)
            if blo > lb[j]:
                lb[j] = blo
                bound_rows[(j, "lb")] = (i, a)
            if bhi < ub[j]:
                ub[j] = bhi
                bound_rows[(j, "ub")] = (i, a)
            continue
        s = max(abs(a) for a in row.values())
        kept.append(i)
        lo_list.append(lo / s)
        hi_list.append(hi / s)
        scale_list.append(s)
    m = len(kept)
    A = np.zeros((m, n))
    for r, i in enumerate(kept):
        s = scale_list[r]
        for j, a in model.rows[i].items():
            A[r, j] = a / s
    # crossovers within tolerance are snapped; genuine ones are infeasible
    cross = lb > ub
    if cross.any():
        near = cross & (lb - ub <= feas_tol * np.maximum(1.0, np.abs(ub)))
        ub[near] = lb[near]
        if (cross & ~near).any():
            bad = True
    return StandardForm(A, np.array(lo_list, dtype=float), np.array(hi_list, dtype=float),
                        lb, ub, c, c0, np.array(kept, dtype=np.intp),
                        np.array(scale_list, dtype=float), is_int, bound_rows,
                        model.num_constraints, bad)


class LPState:
    """Tableau, basis header and values for one LP over a fixed matrix.

    Column ``j < n`` is structural, column ``n + i`` is the logical of row i
    with value ``-a_i x``, so ``[A | I] x_full = 0`` always holds.
    """

    def __init__(self, form: StandardForm, T, basis, status, x, lb, ub, c):
        self.form = form
        self.T = T
        self.basis = basis
        self.status = status
        self.x = x
        self.lb = lb
        self.ub = ub
        self.c = c
        self.d = np.zeros(T.shape[1])
        self.iterations = 0

    @classmethod
    def slack_start(cls, form: StandardForm) -> "LPState":
        m, n = form.m, form.n
        N = n + m
        T = np.ascontiguousarray(np.hstack([form.A, np.eye(m)]))
        lb = np.concatenate([form.lb, -form.hi])
        ub = np.concatenate([form.ub, -form.lo])
        c = np.concatenate([form.c, np.zeros(m)])
        status = np.empty(N, dtype=np.int8)
        x = np.zeros(N)
        for j in range(n):
            if math.isfinite(lb[j]):
                status[j], x[j] = AT_LOWER, lb[j]
            elif math.isfinite(ub[j]):
                status[j], x[j] = AT_UPPER, ub[j]
            else:
                status[j], x[j] = FREE, 0.0
        basis = np.arange(n, N, dtype=np.intp)
        status[n:] = BASIC
        x[n:] = -(form.A @ x[:n])
        return cls(form, T, basis, status, x, lb, ub, c)

    def copy(self) -> "LPState":
        out = LPState(self.form, self.T.copy(), self.basis.copy(), self.status.copy(),
                      self.x.copy(), self.lb.copy(), self.ub.copy(), self.c)
        out.iterations = self.iterations
        return out

    def nbytes(self) -> int:
        return self.T.nbytes + self.x.nbytes * 4

    def set_bounds(self, j: int, lower: float, upper: float) -> None:
        """Change column bounds, keeping nonbasic columns at a bound."""
        self.lb[j] = lower
        self.ub[j] = upper
        st = self.status[j]
        if st == BASIC:
            return
        if st == AT_UPPER and math.isfinite(upper):
            new = upper
        elif math.isfinite(lower):
            new, self.status[j] = lower, AT_LOWER
        elif math.isfinite(upper):
            new, self.status[j] = upper, AT_UPPER
        else:
            new, self.status[j] = 0.0, FREE
        delta = new - self.x[j]
        if delta != 0.0:
            self.x[j] = new
            self.x[self.basis] -= delta * self.T[:, j]

    def refactor(self) -> bool:
        """Rebuild ``T`` and basic values from the original matrix."""
        form = self.form
        m, n = form.m, form.n
        if m == 0:
            return True
        full = np.hstack([form.A, np.eye(m)])
        B = full[:, self.basis]
        try:
            T = np.linalg.solve(B, full)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(T)):
            return False
        T[np.abs(T) < 1e-13] = 0.0
        T[:, self.basis] = np.eye(m)
        self.T = np.ascontiguousarray(T)
        self._recompute_basic()
        return True

    def _recompute_basic(self):
        nonbasic = np.ones(self.T.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        self.x[self.basis] = -(self.T[:, nonbasic] @ self.x[nonbasic])

    def residual(self) -> float:
        """Relative violation of ``[A | I] x = 0``."""
        n = self.form.n
        if self.form.m == 0:
            return 0.0
        res = np.abs(self.form.A @ self.x[:n] + self.x[n:])
        return float(np.max(res / np.maximum(1.0, np.abs(self.x[n:]))))

    def objective(self) -> float:
        n = self.form.n
        return float(self.form.c @ self.x[:n] + self.form.c0)

    def primal_infeasibility(self) -> float:
        xb = self.x[self.basis]
        if xb.size == 0:
            return 0.0
        return float(max(np.max(self.lb[self.basis] - xb), np.max(xb - self.ub[self.basis]), 0.0))


@dataclass
class LPResult:
    code: int
    iterations: int


def run(state: LPState, method: str = "primal", max_iter: int = 50_000, feas_tol: float = 1e-9,
        opt_tol: float = 1e-9, piv_tol: float = 1e-9) -> LPResult:
    """Run the primal or dual simplex with periodic refactorization.

    The dual method falls back to the primal one when the starting basis is
    not dual feasible or the dual stalls.
    """
    m = state.form.m
    if state.form.trivially_infeasible:
        return LPResult(INFEASIBLE, 0)
    if m == 0:
        return _solve_bounds_only(state)
    chunk = max(500, 2 * m)
    total = 0
    refactors = 0
    fn = kernel.dual if method == "dual" else kernel.primal
    while True:
        budget = min(chunk, max_iter - total)
        code, it = fn(state.T, state.basis, state.status, state.x, state.lb, state.ub, state.c,
                      state.d, budget, feas_tol, opt_tol, piv_tol)
        total += it
        if code == NOT_DUAL_FEASIBLE:
            fn = kernel.primal
            continue
        if code == ITER_LIMIT and total < max_iter:
            refactors += 1
            if not state.refactor():
                return LPResult(NUMERICAL, total)
            continue
        if code in (OPTIMAL, INFEASIBLE) and total > 0 and refactors < 3 and state.residual() > 1e-9:
            # accumulated pivot error: refactor and let the primal clean up
            refactors += 1
            if not state.refactor():
                return LPResult(NUMERICAL, total)
            fn = kernel.primal
            continue
        if code == NUMERICAL and refactors < 3 and total < max_iter:
            refactors += 1
            if state.refactor():
                fn = kernel.primal
                continue
        state.iterations += total
        return LPResult(code, total)


def _solve_bounds_only(state: LPState) -> LPResult:
    """No rows: each column sits at its cheaper bound."""
    n = state.form.n
    for j in range(n):
        cj = state.c[j]
        lo, hi = state.lb[j], state.ub[j]
        if cj > 0:
            if not math.isfinite(lo):
                return LPResult(UNBOUNDED, 0)
            state.x[j], state.status[j] = lo, AT_LOWER
        elif cj < 0:
            if not math.isfinite(hi):
                return LPResult(UNBOUNDED, 0)
            state.x[j], state.status[j] = hi, AT_UPPER
    state.d[:n] = state.c[:n]
    return LPResult(OPTIMAL, 0)


def model_values(state: LPState) -> np.ndarray:
    """Structural values clipped into their bounds."""
    n = state.form.n
    return np.clip(state.x[:n], state.form.lb, state.form.ub)


def duals(state: LPState) -> tuple[np.ndarray, np.ndarray]:
    """Row duals in model row order and structural reduced costs.

    Convention: ``c = A^T y + r``; ``y_i > 0`` prices a binding lower row bound.
    Rows folded into bounds receive the reduced cost of their column.
    """
    form = state.form
    n = form.n
    full_c = state.c
    d = full_c - full_c[state.basis] @ state.T if form.m else full_c.copy()
    y_scaled = -d[n:]
    y = np.zeros(form.num_model_rows)
    if form.m:
        y[form.rows] = y_scaled / form.scale
    r = form.c - (form.A.T @ y_scaled if form.m else 0.0)
    x = state.x
    for (j, side), (i, a) in form.bound_rows.items():
        bound = form.lb[j] if side == "lb" else form.ub[j]
        if abs(x[j] - bound) <= 1e-9 * max(1.0, abs(bound)):
            if (side == "lb" and r[j] > 0) or (side == "ub" and r[j] < 0):
                y[i] = r[j] / a
    return y, r


def dual_bound(state: LPState, tol: float = 1e-9) -> float:
    """Lagrangian lower bound from the current duals (exact at an optimum)."""
    form = state.form
    n = form.n
    full_c = state.c
    d = full_c - full_c[state.basis] @ state.T if form.m else full_c.copy()
    y = -d[n:]
    y = np.where(np.abs(y) < tol, 0.0, y)
    r = form.c - (form.A.T @ y if form.m else 0.0)
    r = np.where(np.abs(r) < tol, 0.0, r)
    with np.errstate(invalid="ignore"):
        terms = np.concatenate([
            np.where(y > 0, y * form.lo, 0.0), np.where(y < 0, y * form.hi, 0.0),
            np.where(r > 0, r * form.lb, 0.0), np.where(r < 0, r * form.ub, 0.0),
        ])
    if np.any(np.isnan(terms)):
        return -math.inf
    return float(terms.sum() + form.c0)
