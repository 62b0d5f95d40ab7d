"""Linear model builder: variables, affine expressions and constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

INF = math.inf

SENSES = ("<=", "==", ">=")
_SENSE_ALIASES = {"<=": "<=", "<": "<=", "le": "<=", "==": "==", "=": "==", "eq": "==",
                  ">=": ">=", ">": ">=", "ge": ">="}


class ModelError(ValueError):
    """Base class for model construction errors."""


class InvalidBoundsError(ModelError):
    pass


class ForeignVariableError(ModelError):
    """An expression references a variable owned by another model."""


class Var:
    __slots__ = ("model", "index", "name")

    def __init__(self, model: "Model", index: int, name: str):
        self.model = model
        self.index = index
        self.name = name

    def __repr__(self):
        return f"Var({self.name!r})"

    def __hash__(self):
        return hash((id(self.model), self.index))

    def __eq__(self, other):
        return isinstance(other, Var) and other.model is self.model and other.index == self.index

    def to_expr(self) -> "LinExpr":
        return LinExpr(self.model, {self.index: 1.0}, 0.0)

    def __add__(self, other):
        return self.to_expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.to_expr() - other

    def __rsub__(self, other):
        return (-self.to_expr()) + other

    def __mul__(self, k):
        return self.to_expr() * k

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self.to_expr() * (1.0 / k)

    def __neg__(self):
        return self.to_expr() * -1.0

    def __pos__(self):
        return self.to_expr()


class LinExpr:
    """Affine expression ``sum(coef * var) + const`` over one model's variables."""

    __slots__ = ("model", "terms", "const")

    def __init__(self, model: "Model | None" = None, terms: Mapping[int, float] | None = None,
                 const: float = 0.0):
        self.model = model
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    @classmethod
    def constant(cls, value: float) -> "LinExpr":
        return cls(None, None, value)

    def copy(self) -> "LinExpr":
        return LinExpr(self.model, self.terms, self.const)

    def _owner(self, other_model):
        if other_model is None:
            return self.model
        if self.model is None or self.model is other_model:
            return other_model
        raise ForeignVariableError("expression mixes variables from different models")

    def _iadd(self, other, sign: float) -> "LinExpr":
        if isinstance(other, Var):
            self.model = self._owner(other.model)
            self.terms[other.index] = self.terms.get(other.index, 0.0) + sign
        elif isinstance(other, LinExpr):
            self.model = self._owner(other.model)
            for j, a in other.terms.items():
                self.terms[j] = self.terms.get(j, 0.0) + sign * a
            self.const += sign * other.const
        elif isinstance(other, (int, float, np.integer, np.floating)):
            self.const += sign * float(other)
        else:
            return NotImplemented
        return self

    def __add__(self, other):
        return self.copy()._iadd(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy()._iadd(other, -1.0)

    def __rsub__(self, other):
        return (self * -1.0)._iadd(other, 1.0)

    def __iadd__(self, other):
        return self._iadd(other, 1.0)

    def __isub__(self, other):
        return self._iadd(other, -1.0)

    def __mul__(self, k):
        if not isinstance(k, (int, float, np.integer, np.floating)):
            return NotImplemented
        k = float(k)
        return LinExpr(self.model, {j: a * k for j, a in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / float(k))

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        body = " + ".join(f"{a:g}*x{j}" for j, a in sorted(self.terms.items()))
        return f"LinExpr({body or '0'} + {self.const:g})"

    def value(self, x: np.ndarray) -> float:
        """Evaluate against a full vector of variable values."""
        return self.const + sum(a * x[j] for j, a in self.terms.items())


def quicksum(items: Iterable) -> LinExpr:
    """Sum vars, expressions and numbers without building intermediates."""
    out = LinExpr()
    for item in items:
        out._iadd(item, 1.0)
    return out


def as_expr(item) -> LinExpr:
    if isinstance(item, LinExpr):
        return item
    if isinstance(item, Var):
        return item.to_expr()
    return LinExpr.constant(float(item))


@dataclass(frozen=True)
class Constraint:
    index: int
    name: str


class Model:
    """A minimisation MILP: bounded variables, linear rows, linear objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.is_integer: list[bool] = []
        self.var_names: list[str] = []
        self.rows: list[dict[int, float]] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.range_lo: dict[int, float] = {}
        self.row_names: list[str] = []
        self.objective: LinExpr | None = None
        self._vars: list[Var] = []

    @property
    def num_variables(self) -> int:
        return len(self.lb)

    @property
    def num_constraints(self) -> int:
        return len(self.rows)

    @property
    def num_integer(self) -> int:
        return sum(self.is_integer)

    @property
    def variables(self) -> list[Var]:
        return list(self._vars)

    def add_variable(self, lower: float = 0.0, upper: float = INF, is_integer: bool = False,
                     name: str | None = None) -> Var:
        lower = float(lower)
        upper = float(upper)
        if math.isnan(lower) or math.isnan(upper):
            raise InvalidBoundsError(f"NaN bound on variable {name!r}")
        if lower > upper:
            raise InvalidBoundsError(f"variable {name!r}: lower bound {lower} > upper bound {upper}")
        if lower == INF or upper == -INF:
            raise InvalidBoundsError(f"variable {name!r}: empty domain [{lower}, {upper}]")
        if is_integer:
            if math.isfinite(lower):
                lower = float(math.ceil(lower - 1e-9))
            if math.isfinite(upper):
                upper = float(math.floor(upper + 1e-9))
            if lower > upper:
                raise InvalidBoundsError(f"integer variable {name!r} has no integer in its bounds")
        index = len(self.lb)
        name = name if name is not None else f"x{index}"
        self.lb.append(lower)
        self.ub.append(upper)
        self.is_integer.append(bool(is_integer))
        self.var_names.append(name)
        var = Var(self, index, name)
        self._vars.append(var)
        return var

    def add_binary(self, name: str | None = None) -> Var:
        return self.add_variable(0.0, 1.0, True, name)

    def _check(self, expr: LinExpr):
        if expr.model is not None and expr.model is not self:
            raise ForeignVariableError("expression references a variable of another model")
        n = len(self.lb)
        for j in expr.terms:
            if not 0 <= j < n:
                raise ForeignVariableError(f"unknown variable index {j}")

    def add_constraint(self, expr, sense: str, rhs: float = 0.0, name: str | None = None) -> Constraint:
        """Append ``expr sense rhs``; repeated variables in ``expr`` are merged."""
        try:
            sense = _SENSE_ALIASES[sense]
        except (KeyError, TypeError):
            raise ModelError(f"unknown constraint sense {sense!r}") from None
        expr = as_expr(expr)
        rhs_expr = as_expr(rhs)
        self._check(expr)
        self._check(rhs_expr)
        merged = (expr - rhs_expr) if rhs_expr.terms else expr
        row = {j: a for j, a in merged.terms.items() if a != 0.0}
        value = rhs_expr.const - expr.const if not rhs_expr.terms else -merged.const
        if not math.isfinite(value):
            raise ModelError(f"non-finite right-hand side in constraint {name!r}")
        index = len(self.rows)
        self.rows.append(row)
        self.senses.append(sense)
        self.rhs.append(float(value))
        self.row_names.append(name if name is not None else f"c{index}")
        return Constraint(index, self.row_names[-1])

    def add_range(self, expr, lower: float, upper: float, name: str | None = None) -> Constraint:
        """Append ``lower <= expr <= upper`` as a single row."""
        expr = as_expr(expr)
        lower, upper = float(lower), float(upper)
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise ModelError(f"invalid range [{lower}, {upper}] in constraint {name!r}")
        if math.isinf(lower) and math.isinf(upper):
            raise ModelError(f"range constraint {name!r} has no finite side")
        if math.isinf(lower):
            return self.add_constraint(expr, "<=", upper, name)
        if math.isinf(upper):
            return self.add_constraint(expr, ">=", lower, name)
        if lower == upper:
            return self.add_constraint(expr, "==", upper, name)
        con = self.add_constraint(expr, "<=", upper, name)
        self.senses[con.index] = "range"
        self.range_lo[con.index] = lower - expr.const
        return con

    def row_bounds(self, i: int) -> tuple[float, float]:
        """(lower, upper) of row i's activity."""
        sense, rhs = self.senses[i], self.rhs[i]
        if sense == "range":
            return self.range_lo[i], rhs
        lo = rhs if sense in (">=", "==") else -INF
        hi = rhs if sense in ("<=", "==") else INF
        return lo, hi

    def set_objective(self, expr) -> None:
        """Set the (minimised) objective."""
        expr = as_expr(expr)
        self._check(expr)
        self.objective = expr.copy()
        self.objective.model = self

    def fix(self, var: Var, value: float) -> None:
        self.set_bounds(var, value, value)

    def set_bounds(self, var: Var, lower: float, upper: float) -> None:
        if var.model is not self:
            raise ForeignVariableError("variable belongs to another model")
        if lower > upper:
            raise InvalidBoundsError(f"variable {var.name!r}: lower bound {lower} > upper bound {upper}")
        self.lb[var.index] = float(lower)
        self.ub[var.index] = float(upper)

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        return np.array([sum(a * x[j] for j, a in row.items()) for row in self.rows], dtype=float)

    def max_violation(self, x: np.ndarray, relative: bool = True) -> float:
        """Largest bound or row violation at ``x``; rows measured relative to their largest coefficient."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        lb = np.asarray(self.lb)
        ub = np.asarray(self.ub)
        if x.size:
            worst = max(worst, float(np.max(np.maximum(lb - x, 0.0))), float(np.max(np.maximum(x - ub, 0.0))))
        for i, row in enumerate(self.rows):
            act = sum(a * x[j] for j, a in row.items())
            scale = max((abs(a) for a in row.values()), default=1.0) if relative else 1.0
            scale = max(scale, 1e-12)
            lo, hi = self.row_bounds(i)
            v = max(lo - act, act - hi)
            worst = max(worst, v / scale)
        return worst
