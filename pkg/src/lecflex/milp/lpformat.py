"""CPLEX-LP style text dump of a model, for debugging.

Grammar (one section per keyword line)::

    \\ <model name>
    Minimize
     obj: <terms> [+ <constant>]
    Subject To
     <row name>: <terms> <= | = | >= <rhs>
                             (ranged rows become <name>_lo / <name>_hi pairs)
    Bounds
     <lb> <= <var> <= <ub>      (or "<var> free", "-inf"/"+inf" for infinite)
    Generals
     <integer vars>
    End

Terms are ``+ <coef> <var>`` with numbers printed to 9 significant digits.
"""

from __future__ import annotations

import math

from .model import Model


def _num(v: float) -> str:
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return f"{v:.9g}"


def _terms(model: Model, terms: dict) -> str:
    if not terms:
        return "0 " + model.var_names[0] if model.var_names else "0"
    out = []
    for j in sorted(terms):
        a = terms[j]
        sign = "-" if a < 0 else "+"
        out.append(f"{sign} {_num(abs(a))} {model.var_names[j]}")
    return " ".join(out)


def to_lp_string(model: Model) -> str:
    lines = [f"\\ {model.name}", "Minimize"]
    obj = model.objective
    body = _terms(model, obj.terms if obj is not None else {})
    if obj is not None and obj.const:
        body += f" + {_num(obj.const)}" if obj.const > 0 else f" - {_num(-obj.const)}"
    lines.append(f" obj: {body}")
    lines.append("Subject To")
    for i, (name, row, sense, rhs) in enumerate(zip(model.row_names, model.rows, model.senses, model.rhs)):
        if sense == "range":
            lo, hi = model.row_bounds(i)
            lines.append(f" {name}_lo: {_terms(model, row)} >= {_num(lo)}")
            lines.append(f" {name}_hi: {_terms(model, row)} <= {_num(hi)}")
            continue
        op = "=" if sense == "==" else sense
        lines.append(f" {name}: {_terms(model, row)} {op} {_num(rhs)}")
    lines.append("Bounds")
    for name, lo, hi in zip(model.var_names, model.lb, model.ub):
        if math.isinf(lo) and math.isinf(hi):
            lines.append(f" {name} free")
        else:
            lines.append(f" {_num(lo)} <= {name} <= {_num(hi)}")
    ints = [name for name, flag in zip(model.var_names, model.is_integer) if flag]
    if ints:
        lines.append("Generals")
        lines.append(" " + " ".join(ints))
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_lp_string(model))
