"""Report writers for a finished market run.

Every file is produced from the outcome alone, with floats at 9 significant
digits and a fixed row order, so the bytes depend only on the outcome.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..powerflow import powerflow_csv
from .messages import quantize

TRACE_HEADER = ["round", "iteration", "hour", "lec", "pcc", "price", "penalty", "worst_alpha_kva", "offered_kw"]
SETTLEMENT_ROWS = ("operational_cost_increase", "income_increase", "revenue")
REPORT_FILES = ("summary.json", "trace.csv", "allocation.csv", "settlement.csv", "powerflow.csv",
                "exchanges.csv")


def _f(v) -> str:
    return format(float(v), ".9g")


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def allocation_header(lecs) -> list:
    lecs = sorted(lecs)
    return (["hour"] + [f"offered_{l}" for l in lecs] + [f"cleared_{l}" for l in lecs] + ["requirement_kw"]
            + [f"price_{l}" for l in lecs] + [f"direction_{l}" for l in lecs] + ["shedding_kw"])


def settlement_header(lecs) -> list:
    return ["capital_flow", "dso"] + sorted(lecs) + ["energy_retailer", "heat_retailer"]


def trace_csv(outcome) -> str:
    pcc = outcome.scenario.network.pcc_buses()
    rows = [TRACE_HEADER]
    for rnd, r in outcome.trace:
        rows.append([rnd, r.iteration, r.hour, r.lec, pcc[r.lec], _f(r.price), _f(r.penalty), _f(r.worst_alpha),
                     _f(r.offered)])
    return _csv(rows)


def allocation_csv(outcome) -> str:
    lecs = sorted(outcome.baselines)
    rows = [allocation_header(lecs)]
    a = outcome.allocation
    if a is None:
        return _csv(rows)
    for h in a.hours:
        shed = sum(v for (t, _), v in a.shedding.items() if t == h)
        rows.append([h] + [_f(a.offered[(h, l)]) for l in lecs] + [_f(a.cleared[(h, l)]) for l in lecs]
                    + [_f(a.requirement[h])] + [_f(a.prices[(h, l)]) for l in lecs]
                    + [a.directions[(h, l)] for l in lecs] + [_f(shed)])
    return _csv(rows)


def settlement_csv(outcome) -> str:
    s = outcome.settlement
    lecs = sorted(s.lec_revenue)
    rows = [settlement_header(lecs),
            ["operational_cost_increase", _f(s.dso_cost)] + [_f(s.lec_cost_delta[l]) for l in lecs] + ["", ""],
            ["income_increase", ""] + ["" for _ in lecs] + [_f(s.energy_retailer_delta), _f(s.heat_retailer_delta)],
            ["revenue", ""] + [_f(s.lec_revenue[l]) for l in lecs] + ["", ""]]
    return _csv(rows)


def exchanges_csv(outcome) -> str:
    rows = [["hour", "lec", "baseline_p_kw", "baseline_q_kvar", "committed_p_kw", "committed_q_kvar"]]
    for lec in sorted(outcome.baselines):
        bp, bq = outcome.baselines[lec]
        cp, cq = outcome.commitments[lec]
        for t in range(outcome.scenario.horizon):
            rows.append([t, lec, _f(bp[t]), _f(bq[t]), _f(cp[t]), _f(cq[t])])
    return _csv(rows)


def summary(outcome) -> dict:
    s = outcome.settlement
    a = outcome.allocation
    return quantize({
        "scenario": outcome.scenario.name,
        "converged": outcome.converged,
        "negotiation_converged": outcome.negotiation_converged,
        "exit_code": outcome.exit_code,
        "iterations": outcome.iterations,
        "congested_hours": [int(h) for h in outcome.congested_hours],
        "rebound_rounds": outcome.rebound_rounds,
        "rebound_hours": [int(h) for h in outcome.rebound_hours],
        "rebound_violations": [[l, t, a_] for l, t, a_ in outcome.rebound.violations],
        "shedding_kwh": outcome.shedding * outcome.scenario.dt,
        "baseline_min_alpha_kva": [float(v) for v in outcome.baseline_min_alpha],
        "final_min_alpha_kva": [float(v) for v in outcome.rebound.min_alpha],
        "corrective_hours": [int(h) for h in a.corrective] if a is not None else [],
        "settlement": {
            "dso_cost": s.dso_cost,
            "flexibility_payments": s.flexibility_payments,
            "shedding_payment": s.shedding_payment,
            "energy_retailer_delta": s.energy_retailer_delta,
            "heat_retailer_delta": s.heat_retailer_delta,
            "network_tariff_delta": s.network_tariff_delta,
            "conservation_residual": s.conservation_residual,
            "lec_revenue": dict(s.lec_revenue),
            "lec_cost_delta": dict(s.lec_cost_delta),
            "lec_net_benefit": s.lec_net_benefit,
        },
    })


def summary_json(outcome) -> str:
    return json.dumps(summary(outcome), indent=2, sort_keys=True) + "\n"


def render_reports(outcome) -> dict:
    """File name to text for every report."""
    return {
        "summary.json": summary_json(outcome),
        "trace.csv": trace_csv(outcome),
        "allocation.csv": allocation_csv(outcome),
        "settlement.csv": settlement_csv(outcome),
        "powerflow.csv": powerflow_csv(outcome.scenario.network, outcome.rebound.solutions),
        "exchanges.csv": exchanges_csv(outcome),
    }


def write_reports(outcome, directory) -> dict:
    """Write all reports into ``directory`` (created if missing); returns name -> path."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    paths = {}
    for name, text in render_reports(outcome).items():
        p = out / name
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths[name] = p
    return paths
