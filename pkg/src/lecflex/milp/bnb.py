"""Best-first branch-and-bound over the simplex driver, plus solver backends."""

from __future__ import annotations

import enum
import heapq
import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .model import Model, ModelError


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class SolveOptions:
    """Solver tolerances and limits.

    Parameters
    ----------
    feasibility_tol, integrality_tol : float
        Absolute tolerances on scaled rows / bounds and on integrality.
    gap : float
        Relative optimality gap, measured against ``max(1, |incumbent|)``.
    node_limit : int
        Maximum number of branch-and-bound child LPs.
    time_limit : float
        Wall-clock seconds.
    backend : str
        ``"embedded"`` or ``"highs"`` (needs scipy).
    """

    feasibility_tol: float = 1e-6
    integrality_tol: float = 1e-6
    gap: float = 1e-6
    node_limit: int = 200_000
    time_limit: float = math.inf
    lp_iteration_limit: int = 200_000
    cache_bytes: int = 256 * 2**20
    backend: str = "embedded"

    def __post_init__(self):
        for name in ("feasibility_tol", "integrality_tol", "gap"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive")
        if self.backend not in ("embedded", "highs"):
            raise ModelError(f"unknown backend {self.backend!r}")


@dataclass
class Solution:
    status: SolveStatus
    objective: float = math.nan
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    nodes: int = 0
    iterations: int = 0
    dual_bound: float = math.nan
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def value(self, item) -> float:
        """Value of a variable, expression or constant at this solution."""
        from .model import Var, LinExpr
        if isinstance(item, Var):
            return float(self.values[item.index])
        if isinstance(item, LinExpr):
            return float(item.value(self.values))
        return float(item)


_CODE_STATUS = {
    simplex.OPTIMAL: SolveStatus.OPTIMAL,
    simplex.INFEASIBLE: SolveStatus.INFEASIBLE,
    simplex.UNBOUNDED: SolveStatus.UNBOUNDED,
    simplex.ITER_LIMIT: SolveStatus.ITERATION_LIMIT,
    simplex.NUMERICAL: SolveStatus.ITERATION_LIMIT,
}


def _lp_tols(options: SolveOptions) -> dict:
    # the kernels work on scaled rows; keep them tighter than the reported tolerance
    tol = min(1e-9, options.feasibility_tol * 1e-3)
    return dict(feas_tol=tol, opt_tol=tol, piv_tol=1e-9)


class _Cache:
    """Byte-bounded LRU of node tableaux."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0
        self.items: OrderedDict[int, simplex.LPState] = OrderedDict()

    def put(self, key: int, state: simplex.LPState):
        size = state.nbytes()
        if size > self.limit:
            return
        self.items[key] = state
        self.used += size
        while self.used > self.limit:
            _, old = self.items.popitem(last=False)
            self.used -= old.nbytes()

    def pop(self, key: int):
        state = self.items.pop(key, None)
        if state is not None:
            self.used -= state.nbytes()
        return state


def _fractional(x: np.ndarray, int_idx: np.ndarray, tol: float) -> int:
    """Most fractional integer column, lowest index on ties; -1 if integral."""
    if int_idx.size == 0:
        return -1
    v = x[int_idx]
    frac = np.abs(v - np.round(v))
    if frac.max() <= tol:
        return -1
    score = np.minimum(v - np.floor(v), np.ceil(v) - v)
    score[frac <= tol] = -1.0
    return int(int_idx[int(np.argmax(score))])


def _lp_solution(state: simplex.LPState, res: simplex.LPResult, nodes: int = 0) -> Solution:
    status = _CODE_STATUS[res.code]
    if status is not SolveStatus.OPTIMAL:
        return Solution(status, nodes=nodes, iterations=state.iterations)
    y, r = simplex.duals(state)
    return Solution(status, state.objective(), simplex.model_values(state), nodes, state.iterations,
                    simplex.dual_bound(state), y, r)


def solve_lp(model: Model, options: SolveOptions | None = None) -> Solution:
    """Solve the LP relaxation (integrality dropped)."""
    options = options or SolveOptions()
    form = simplex.standard_form(model)
    state = simplex.LPState.slack_start(form)
    res = simplex.run(state, "primal", options.lp_iteration_limit, **_lp_tols(options))
    return _lp_solution(state, res)


def solve(model: Model, options: SolveOptions | None = None) -> Solution:
    """Solve a minimisation MILP.

    Deterministic: pivoting and branching use fixed tie-breaking, so equal
    inputs give bit-identical values. Abnormal outcomes are reported through
    :attr:`Solution.status`, never raised.
    """
    options = options or SolveOptions()
    if options.backend == "highs":
        return solve_highs(model, options)
    t0 = time.perf_counter()
    tols = _lp_tols(options)
    form = simplex.standard_form(model)
    root = simplex.LPState.slack_start(form)
    res = simplex.run(root, "primal", options.lp_iteration_limit, **tols)
    int_idx = np.flatnonzero(form.is_integer)
    if res.code != simplex.OPTIMAL or int_idx.size == 0:
        return _lp_solution(root, res)

    itol = options.integrality_tol
    incumbent = None  # (objective, state)
    seq = 0
    nodes = 0
    cache = _Cache(options.cache_bytes)
    heap: list = []
    # node record: (bound, -depth, seq, lb, ub)

    def prune_level():
        if incumbent is None:
            return math.inf
        inc = incumbent[0]
        return inc - options.gap * max(1.0, abs(inc))

    root_obj = root.objective()
    if _fractional(root.x, int_idx, itol) < 0:
        incumbent = (root_obj, root)
    else:
        heapq.heappush(heap, (root_obj, 0, seq, root.lb[: form.n].copy(), root.ub[: form.n].copy()))
        cache.put(seq, root)
    base = root.copy()
    limited = False
    while heap:
        bound, negdepth, key, nlb, nub = heapq.heappop(heap)
        if bound >= prune_level():
            cache.pop(key)
            continue
        if nodes >= options.node_limit or time.perf_counter() - t0 > options.time_limit:
            limited = True
            break
        state = cache.pop(key)
        if state is None:
            state = _rebuild(base, nlb, nub, options, tols)
            if state is None:
                continue
        j = _fractional(state.x, int_idx, itol)
        if j < 0:
            continue
        v = state.x[j]
        for side in (0, 1):
            child = state.copy()
            lo, hi = child.lb[j], child.ub[j]
            if side == 0:
                child.set_bounds(j, lo, math.floor(v))
            else:
                child.set_bounds(j, math.ceil(v), hi)
            cres = simplex.run(child, "dual", options.lp_iteration_limit, **tols)
            nodes += 1
            if cres.code != simplex.OPTIMAL:
                continue
            obj = child.objective()
            if obj >= prune_level():
                continue
            if _fractional(child.x, int_idx, itol) < 0:
                incumbent = (obj, child)
                continue
            seq += 1
            heapq.heappush(heap, (obj, negdepth - 1, seq, child.lb[: form.n].copy(),
                                  child.ub[: form.n].copy()))
            cache.put(seq, child)
    iterations = root.iterations
    if incumbent is None:
        status = SolveStatus.ITERATION_LIMIT if limited else SolveStatus.INFEASIBLE
        return Solution(status, nodes=nodes, iterations=iterations)
    sol = _polish(incumbent[1], int_idx, options, tols)
    sol.nodes = nodes
    if limited:
        sol.status = SolveStatus.ITERATION_LIMIT
    return sol


def _rebuild(base: simplex.LPState, nlb, nub, options, tols):
    """Re-solve an evicted node from the root basis."""
    state = base.copy()
    n = base.form.n
    for j in np.flatnonzero((state.lb[:n] != nlb) | (state.ub[:n] != nub)):
        state.set_bounds(int(j), nlb[j], nub[j])
    res = simplex.run(state, "dual", options.lp_iteration_limit, **tols)
    return state if res.code == simplex.OPTIMAL else None


def _polish(state: simplex.LPState, int_idx, options, tols) -> Solution:
    """Fix integers at their rounded values and re-solve the remaining LP."""
    fixed = state.copy()
    for j in int_idx:
        r = float(np.round(fixed.x[j]))
        fixed.set_bounds(int(j), r, r)
    res = simplex.run(fixed, "dual", options.lp_iteration_limit, **tols)
    if res.code == simplex.OPTIMAL and fixed.refactor():
        values = simplex.model_values(fixed)
        obj = fixed.objective()
    else:
        values = simplex.model_values(state)
        values[int_idx] = np.round(values[int_idx])
        obj = float(state.form.c @ values + state.form.c0)
    return Solution(SolveStatus.OPTIMAL, float(obj), values, iterations=state.iterations)


def solve_highs(model: Model, options: SolveOptions | None = None) -> Solution:
    """Adapter to scipy's HiGHS MILP interface (same Model and Solution types)."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    options = options or SolveOptions()
    n, m = model.num_variables, model.num_constraints
    c = np.zeros(n)
    c0 = 0.0
    if model.objective is not None:
        for j, a in model.objective.terms.items():
            c[j] += a
        c0 = model.objective.const
    A = lil_matrix((max(m, 1), n))
    lo = np.full(max(m, 1), -np.inf)
    hi = np.full(max(m, 1), np.inf)
    for i, row in enumerate(model.rows):
        for j, a in row.items():
            A[i, j] = a
        lo[i], hi[i] = model.row_bounds(i)
    cons = [LinearConstraint(A.tocsr(), lo, hi)] if m else []
    opts = {"mip_rel_gap": options.gap}
    if math.isfinite(options.time_limit):
        opts["time_limit"] = options.time_limit
    res = milp(c, integrality=np.array(model.is_integer, dtype=int), bounds=Bounds(model.lb, model.ub),
               constraints=cons, options=opts)
    if res.status == 0:
        return Solution(SolveStatus.OPTIMAL, float(res.fun + c0), np.asarray(res.x, dtype=float))
    if res.status == 2:
        return Solution(SolveStatus.INFEASIBLE)
    if res.status == 3:
        return Solution(SolveStatus.UNBOUNDED)
    return Solution(SolveStatus.ITERATION_LIMIT)
