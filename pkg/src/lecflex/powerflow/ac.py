"""Polar Newton-Raphson AC power flow, branch flows and congestion margins.

Injections enter in kW / kvar (generation positive) and are converted with the
network base power; the slack bus holds V = 1, angle 0. Branches use the
pi-model with half the charging susceptance at each end.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..core.types import Network


class PowerFlowError(RuntimeError):
    pass


class DivergenceError(PowerFlowError):
    """Newton iterations did not reach the mismatch tolerance."""

    def __init__(self, message: str, mismatch: float, iterations: int):
        self.mismatch = mismatch
        self.iterations = iterations
        super().__init__(message)


class SingularJacobianError(PowerFlowError):
    pass


class MissingExchangeError(PowerFlowError, KeyError):
    pass


@dataclass(frozen=True)
class PfInjections:
    """Net injection per bus for one hour (kW / kvar, generation positive)."""

    p: np.ndarray
    q: np.ndarray
    hour: int = 0


@dataclass
class PfSolution:
    v: np.ndarray
    theta: np.ndarray
    p_from: np.ndarray
    q_from: np.ndarray
    p_to: np.ndarray
    q_to: np.ndarray
    p_slack: float
    q_slack: float
    iterations: int
    mismatch: float
    hour: int = 0

    @property
    def s_from(self) -> np.ndarray:
        return np.hypot(self.p_from, self.q_from)

    @property
    def s_to(self) -> np.ndarray:
        return np.hypot(self.p_to, self.q_to)

    @property
    def s_max(self) -> np.ndarray:
        """Larger of the two end flows, the quantity compared with the rating."""
        return np.maximum(self.s_from, self.s_to)

    @property
    def losses(self) -> float:
        return float(np.sum(self.p_from + self.p_to))


@dataclass
class CongestionReport:
    """``alpha[l, t] = rating - max end flow`` (kVA); negative means congested."""

    alpha: np.ndarray
    tolerance: float
    congested: list = field(default_factory=list)
    voltage_violations: list = field(default_factory=list)

    @property
    def hours(self) -> list:
        return sorted({t for _, t in self.congested})

    def is_congested(self, hour: int | None = None) -> bool:
        if hour is None:
            return bool(self.congested)
        return any(t == hour for _, t in self.congested)


def admittance(network: Network):
    """Bus admittance matrix plus per-branch (series, half shunt) admittances, in pu."""
    n = network.num_buses
    y = np.zeros((n, n), dtype=complex)
    series = np.zeros(len(network.branches), dtype=complex)
    shunt = np.zeros(len(network.branches), dtype=complex)
    for k, br in enumerate(network.branches):
        if not br.closed:
            continue
        ys = 1.0 / br.impedance
        ysh = 0.5j * br.charging_susceptance
        series[k], shunt[k] = ys, ysh
        i, j = br.from_bus, br.to_bus
        y[i, i] += ys + ysh
        y[j, j] += ys + ysh
        y[i, j] -= ys
        y[j, i] -= ys
    return y, series, shunt


def assemble_injections(network: Network, exchanges: dict, hour: int, flexibility: dict | None = None,
                        directions: dict | None = None) -> PfInjections:
    """Net bus injections for one hour.

    ``exchanges`` maps LEC id to per-hour (P, Q) net draw arrays; ``flexibility``
    maps LEC id to a non-negative kW amount applied with ``directions[lec]``
    (+1 lowers the draw, -1 raises it).
    """
    flexibility = flexibility or {}
    directions = directions or {}
    n = network.num_buses
    p = np.zeros(n)
    q = np.zeros(n)

    def at(series):
        return float(series[hour]) if len(series) else 0.0

    for b in network.buses:
        p[b.id] += at(b.dg_p) + at(b.pv_p) - at(b.load_p)
        q[b.id] += at(b.dg_q) - at(b.load_q)
    for lec, bus in network.pcc_buses().items():
        if lec not in exchanges:
            raise MissingExchangeError(f"no exchange for LEC {lec} at bus {bus}")
        pe, qe = exchanges[lec]
        p[bus] -= float(pe[hour])
        q[bus] -= float(qe[hour])
        if lec in flexibility:
            p[bus] += directions.get(lec, 1) * float(flexibility[lec])
    return PfInjections(p, q, hour)


def _power(y, v, theta):
    vc = v * np.exp(1j * theta)
    s = vc * np.conj(y @ vc)
    return s.real, s.imag


def _jacobian(y, v, theta):
    """d(P, Q)/d(theta, V) for all buses (rows/cols filtered by the caller)."""
    vc = v * np.exp(1j * theta)
    ibus = y @ vc
    dv = np.diag(vc)
    ds_dth = 1j * dv @ np.conj(np.diag(ibus) - y @ dv)
    ds_dv = dv @ np.conj(y @ np.diag(vc / v)) + np.conj(np.diag(ibus)) @ np.diag(vc / v)
    return ds_dth, ds_dv


def _flows(network, series, shunt, v, theta):
    vc = v * np.exp(1j * theta)
    m = len(network.branches)
    sf = np.zeros(m, dtype=complex)
    st = np.zeros(m, dtype=complex)
    for k, br in enumerate(network.branches):
        if not br.closed:
            continue
        vi, vj = vc[br.from_bus], vc[br.to_bus]
        sf[k] = vi * np.conj((vi - vj) * series[k] + vi * shunt[k])
        st[k] = vj * np.conj((vj - vi) * series[k] + vj * shunt[k])
    return sf, st


def solve_newton(network: Network, injections: PfInjections, max_iter: int = 50,
                 tol: float = 1e-8) -> PfSolution:
    """Newton-Raphson from a flat start; raises DivergenceError past ``max_iter``."""
    base = network.base_power
    y, series, shunt = admittance(network)
    n = network.num_buses
    slack = network.slack
    pq = np.array([i for i in range(n) if i != slack], dtype=int)
    p_spec = np.asarray(injections.p, dtype=float) / base
    q_spec = np.asarray(injections.q, dtype=float) / base
    v = np.ones(n)
    theta = np.zeros(n)
    it = 0
    while True:
        p, q = _power(y, v, theta)
        mis = np.concatenate([p_spec[pq] - p[pq], q_spec[pq] - q[pq]])
        worst = float(np.max(np.abs(mis))) if mis.size else 0.0
        if worst <= tol:
            break
        if it >= max_iter:
            raise DivergenceError(f"power flow did not converge in {max_iter} iterations "
                                  f"(mismatch {worst:.3e} pu)", worst, it)
        ds_dth, ds_dv = _jacobian(y, v, theta)
        jac = np.block([[ds_dth.real[np.ix_(pq, pq)], ds_dv.real[np.ix_(pq, pq)]],
                        [ds_dth.imag[np.ix_(pq, pq)], ds_dv.imag[np.ix_(pq, pq)]]])
        try:
            step = np.linalg.solve(jac, mis)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError("singular power-flow Jacobian") from exc
        if not np.all(np.isfinite(step)):
            raise DivergenceError("power flow step is not finite", worst, it)
        theta[pq] += step[:pq.size]
        v[pq] += step[pq.size:]
        it += 1
    sf, st = _flows(network, series, shunt, v, theta)
    p, q = _power(y, v, theta)
    return PfSolution(v, theta, sf.real * base, sf.imag * base, st.real * base, st.imag * base,
                      float(p[slack] * base), float(q[slack] * base), it, worst, injections.hour)


def mismatch(network: Network, injections: PfInjections, solution: PfSolution) -> float:
    """Largest non-slack mismatch (pu) recomputed from the returned voltages."""
    y, _, _ = admittance(network)
    p, q = _power(y, solution.v, solution.theta)
    idx = [i for i in range(network.num_buses) if i != network.slack]
    base = network.base_power
    dp = np.asarray(injections.p)[idx] / base - p[idx]
    dq = np.asarray(injections.q)[idx] / base - q[idx]
    return float(max(np.max(np.abs(dp), initial=0.0), np.max(np.abs(dq), initial=0.0)))


def branch_alpha(network: Network, solution: PfSolution) -> np.ndarray:
    ratings = np.array([br.rating for br in network.branches])
    s = np.where([br.closed for br in network.branches], solution.s_max, 0.0)
    return ratings - s


def congestion_report(network: Network, solutions, tolerance: float = 0.1) -> CongestionReport:
    """Margins for every branch and hour; voltages outside bounds are listed, not priced."""
    solutions = list(solutions)
    alpha = np.zeros((len(network.branches), len(solutions)))
    congested = []
    volts = []
    for col, sol in enumerate(solutions):
        alpha[:, col] = branch_alpha(network, sol)
        t = sol.hour
        for l in range(len(network.branches)):
            if alpha[l, col] < -tolerance:
                congested.append((l, t))
        for b in network.buses:
            vb = float(sol.v[b.id])
            if vb < b.voltage_min - 1e-12 or vb > b.voltage_max + 1e-12:
                volts.append((b.id, t, vb))
    return CongestionReport(alpha, tolerance, congested, volts)


def powerflow_csv(network: Network, solutions, path=None) -> str:
    """Per-hour dump: one row per bus (voltage) and per branch (flows, alpha)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hour", "element", "id", "v_pu", "angle_rad", "p_kw", "q_kvar", "s_kva", "alpha_kva"])
    for sol in solutions:
        for b in network.buses:
            w.writerow([sol.hour, "bus", b.id, f"{sol.v[b.id]:.9g}", f"{sol.theta[b.id]:.9g}", "", "", "", ""])
        alpha = branch_alpha(network, sol)
        for l in range(len(network.branches)):
            w.writerow([sol.hour, "branch", l, "", "", f"{sol.p_from[l]:.9g}", f"{sol.q_from[l]:.9g}",
                        f"{sol.s_max[l]:.9g}", f"{alpha[l]:.9g}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
