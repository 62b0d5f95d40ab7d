"""First-order flow model around a solved operating point.

The sensitivities come from the inverse power-flow Jacobian: injecting one kW
of active power at bus ``i`` (slack absorbing the balance) moves the state by
``J^-1 e_i``, which maps to end-flow changes through the flow derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.types import Network
from .ac import PfSolution, SingularJacobianError, _jacobian, admittance

POLYGON_SIDES = 12


@dataclass
class Linearization:
    """Derivatives of branch end flows w.r.t. active injection at ``buses``.

    ``dp[e, l, j]`` / ``dq[e, l, j]``: change in P / Q (kW, kvar) at end ``e``
    (0 = from, 1 = to) of branch ``branches[l]`` per kW injected at
    ``buses[j]``. ``p0`` / ``q0`` hold the operating-point end flows.
    """

    hour: int
    branches: tuple
    buses: tuple
    p0: np.ndarray
    q0: np.ndarray
    dp: np.ndarray
    dq: np.ndarray

    @property
    def ds(self) -> np.ndarray:
        """d|S|/dP at the end carrying the larger flow, shape (branches, buses)."""
        s = np.hypot(self.p0, self.q0)
        end = np.argmax(s, axis=0)
        cols = np.arange(len(self.branches))
        p, q, smax = self.p0[end, cols], self.q0[end, cols], s[end, cols]
        dp = self.dp[end, cols, :]
        dq = self.dq[end, cols, :]
        safe = np.where(smax > 1e-12, smax, 1.0)
        return np.where((smax > 1e-12)[:, None], (p[:, None] * dp + q[:, None] * dq) / safe[:, None], 0.0)

    def predict(self, dinj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """End flows after injection changes ``dinj`` (kW, aligned with ``buses``)."""
        dinj = np.asarray(dinj, dtype=float)
        return self.p0 + self.dp @ dinj, self.q0 + self.dq @ dinj


def polygon_cuts(rating: float, sides: int = POLYGON_SIDES) -> list:
    """Half-planes ``P cos(phi) + Q sin(phi) <= rating`` for ``phi = 2 pi k / sides``.

    Every point inside the circle of radius ``rating`` satisfies all cuts and a
    point violating one lies outside ``rating * cos(pi / sides)``.
    """
    out = []
    for k in range(sides):
        phi = 2.0 * math.pi * k / sides
        out.append((math.cos(phi), math.sin(phi), float(rating)))
    return out


def tangent_cut(rating: float, p: float, q: float):
    """Half-plane tangent to the rating circle in the direction of (p, q)."""
    s = math.hypot(p, q)
    if s <= 1e-12:
        return None
    return (p / s, q / s, float(rating))


def sensitivities(network: Network, solution: PfSolution, branches=None, buses=None) -> Linearization:
    """Jacobian-based end-flow sensitivities at ``solution``."""
    if branches is None:
        branches = range(len(network.branches))
    branches = tuple(int(b) for b in branches)
    if buses is None:
        buses = [b.id for b in network.buses if not b.is_slack]
    buses = tuple(int(b) for b in buses)
    n = network.num_buses
    slack = network.slack
    pq = np.array([i for i in range(n) if i != slack], dtype=int)
    y, series, shunt = admittance(network)
    v, theta = solution.v, solution.theta
    ds_dth, ds_dv = _jacobian(y, v, theta)
    jac = np.block([[ds_dth.real[np.ix_(pq, pq)], ds_dv.real[np.ix_(pq, pq)]],
                    [ds_dth.imag[np.ix_(pq, pq)], ds_dv.imag[np.ix_(pq, pq)]]])
    pos = {int(b): k for k, b in enumerate(pq)}
    rhs = np.zeros((2 * pq.size, len(buses)))
    for j, b in enumerate(buses):
        if b == slack:
            continue
        rhs[pos[b], j] = 1.0 / network.base_power
    try:
        dx = np.linalg.solve(jac, rhs) if pq.size else rhs
    except np.linalg.LinAlgError as exc:
        raise SingularJacobianError("singular Jacobian at the operating point") from exc
    if not np.all(np.isfinite(dx)):
        raise SingularJacobianError("non-finite sensitivities")
    # state derivatives for every bus (slack rows stay zero)
    dth = np.zeros((n, len(buses)))
    dvm = np.zeros((n, len(buses)))
    dth[pq, :] = dx[:pq.size]
    dvm[pq, :] = dx[pq.size:]
    vc = v * np.exp(1j * theta)
    dvc = 1j * vc[:, None] * dth + np.exp(1j * theta)[:, None] * dvm
    m = len(branches)
    p0 = np.zeros((2, m))
    q0 = np.zeros((2, m))
    dp = np.zeros((2, m, len(buses)))
    dq = np.zeros((2, m, len(buses)))
    base = network.base_power
    for k, l in enumerate(branches):
        br = network.branches[l]
        if not br.closed:
            continue
        for e, (i, j) in enumerate(((br.from_bus, br.to_bus), (br.to_bus, br.from_bus))):
            cur = (vc[i] - vc[j]) * series[l] + vc[i] * shunt[l]
            dcur = (dvc[i] - dvc[j]) * series[l] + dvc[i] * shunt[l]
            s = vc[i] * np.conj(cur)
            dsk = dvc[i] * np.conj(cur) + vc[i] * np.conj(dcur)
            p0[e, k], q0[e, k] = s.real * base, s.imag * base
            dp[e, k, :] = dsk.real * base
            dq[e, k, :] = dsk.imag * base
    return Linearization(solution.hour, branches, buses, p0, q0, dp, dq)
