"""Exhaustive-enumeration reference solver used as a test oracle."""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import simplex
from .bnb import Solution, SolveOptions, SolveStatus, _lp_tols
from .model import Model, ModelError

MAX_INTEGER_VARIABLES = 20


class OracleLimitError(ModelError):
    """Model too large (or unbounded in an integer) for enumeration."""


def brute_force_solve(model: Model, options: SolveOptions | None = None) -> Solution:
    """Enumerate every integer assignment and solve each remaining LP cold.

    Ties between equal objectives keep the first assignment in lexicographic
    order, so the result is deterministic.
    """
    options = options or SolveOptions()
    int_idx = [j for j, flag in enumerate(model.is_integer) if flag]
    if len(int_idx) > MAX_INTEGER_VARIABLES:
        raise OracleLimitError(f"{len(int_idx)} integer variables exceed the oracle limit "
                               f"of {MAX_INTEGER_VARIABLES}")
    ranges = []
    for j in int_idx:
        lo, hi = model.lb[j], model.ub[j]
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise OracleLimitError(f"integer variable {model.var_names[j]!r} has an infinite bound")
        ranges.append(range(int(math.ceil(lo)), int(math.floor(hi)) + 1))
    tols = _lp_tols(options)
    form = simplex.standard_form(model)
    best = None
    saw_unbounded = False
    for combo in itertools.product(*ranges):
        lb = form.lb.copy()
        ub = form.ub.copy()
        skip = False
        for j, v in zip(int_idx, combo):
            if v < lb[j] - 1e-9 or v > ub[j] + 1e-9:
                skip = True
                break
            lb[j] = ub[j] = float(v)
        if skip:
            continue
        sub = simplex.StandardForm(form.A, form.lo, form.hi, lb, ub, form.c, form.c0, form.rows,
                                   form.scale, form.is_integer, {}, form.num_model_rows,
                                   form.trivially_infeasible)
        state = simplex.LPState.slack_start(sub)
        res = simplex.run(state, "primal", options.lp_iteration_limit, **tols)
        if res.code == simplex.UNBOUNDED:
            saw_unbounded = True
            continue
        if res.code != simplex.OPTIMAL:
            continue
        obj = state.objective()
        if best is None or obj < best[0]:
            values = simplex.model_values(state)
            values[int_idx] = np.array(combo, dtype=float)
            best = (obj, values)
    if saw_unbounded:
        return Solution(SolveStatus.UNBOUNDED)
    if best is None:
        return Solution(SolveStatus.INFEASIBLE)
    return Solution(SolveStatus.OPTIMAL, float(best[0]), best[1])
