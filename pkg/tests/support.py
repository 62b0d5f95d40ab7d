"""Shared fixtures builders and independent reference computations for the tests."""

from __future__ import annotations

import math

import numpy as np

from lecflex.milp import Model, quicksum


def random_milp(seed: int, max_int: int = 6, max_cont: int = 8, general_ints: bool = True):
    """Feasible bounded MILP built around a random integral point.

    Returns ``(model, variables)``.
    """
    rng = np.random.default_rng(seed)
    ni = int(rng.integers(1, max_int + 1))
    nc = int(rng.integers(0, max_cont + 1))
    m = Model(f"rand{seed}")
    xs = []
    point = []
    for j in range(ni):
        if general_ints and rng.random() < 0.3:
            hi = int(rng.integers(1, 4))
            xs.append(m.add_variable(0, hi, is_integer=True, name=f"i{j}"))
            point.append(float(rng.integers(0, hi + 1)))
        else:
            xs.append(m.add_binary(name=f"b{j}"))
            point.append(float(rng.integers(0, 2)))
    for j in range(nc):
        hi = float(rng.uniform(1, 10))
        xs.append(m.add_variable(float(-rng.uniform(0, 2)) if rng.random() < 0.3 else 0.0, hi, name=f"c{j}"))
        point.append(float(rng.uniform(0, hi)))
    point = np.array(point)
    for r in range(int(rng.integers(1, 7))):
        a = np.round(rng.normal(0, 1, len(xs)), 3)
        a[rng.random(len(xs)) < 0.3] = 0.0
        act = float(a @ point)
        sense = rng.choice(["<=", ">=", "=="], p=[0.6, 0.3, 0.1])
        expr = quicksum(float(a[j]) * xs[j] for j in range(len(xs)) if a[j] != 0.0)
        if sense == "<=":
            m.add_constraint(expr, "<=", round(act + float(rng.uniform(0, 2)), 6))
        elif sense == ">=":
            m.add_constraint(expr, ">=", round(act - float(rng.uniform(0, 2)), 6))
        else:
            # equalities only over integer columns keep the built point feasible after rounding
            ai = np.round(rng.integers(-2, 3, ni)).astype(float)
            if not ai.any():
                continue
            e = quicksum(float(ai[j]) * xs[j] for j in range(ni) if ai[j] != 0.0)
            m.add_constraint(e, "==", float(ai @ point[:ni]))
    c = np.round(rng.normal(0, 1, len(xs)), 3)
    m.set_objective(quicksum(float(c[j]) * xs[j] for j in range(len(xs))))
    return m, xs


def rel_close(a: float, b: float, tol: float = 1e-6) -> bool:
    return abs(a - b) <= tol * (1.0 + abs(b))


def two_bus_voltage(p_load: float, q_load: float, r: float, x: float):
    """Closed-form receiving-end voltage (magnitude, angle) of a 2-bus feeder with V0 = 1.

    Solves ``|V|^4 + (2(rP + xQ) - 1)|V|^2 + (r^2 + x^2)(P^2 + Q^2) = 0`` for the high root,
    then recovers the angle from the branch power balance.
    """
    b = 2.0 * (r * p_load + x * q_load) - 1.0
    c = (r * r + x * x) * (p_load ** 2 + q_load ** 2)
    v2 = (-b + math.sqrt(b * b - 4.0 * c)) / 2.0
    v = math.sqrt(v2)
    # V0 = V + z I, with I = conj(S / V) and V taken as the angle reference
    s = complex(p_load, q_load)
    i = (s / v).conjugate()
    v0 = v + complex(r, x) * i
    return v, -math.atan2(v0.imag, v0.real)


def ac_losses(network, solution) -> float:
    """Total series and shunt losses (kW) recomputed from voltages only."""
    base = network.base_power
    total = 0.0
    for br in network.branches:
        if not br.closed:
            continue
        vi = solution.v[br.from_bus] * np.exp(1j * solution.theta[br.from_bus])
        vj = solution.v[br.to_bus] * np.exp(1j * solution.theta[br.to_bus])
        i = (vi - vj) / complex(br.resistance, br.reactance)
        total += (abs(i) ** 2 * br.resistance) * base
    return float(total)
