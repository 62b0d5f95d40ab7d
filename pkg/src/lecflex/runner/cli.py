"""Command line entry point: ``lecflex run | powerflow | validate``.

Exit codes: 0 converged, 2 converged with load shedding, 3 not converged,
1 any error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..core.errors import ScenarioError
from ..core.scenario import load_scenario
from ..lec import solve_baseline
from ..powerflow import branch_alpha, powerflow_csv, solve_newton
from ..market import hour_injections
from .pipeline import RunConfig, StageError, run_market
from .transport import TRANSPORTS

EXIT_OK, EXIT_ERROR, EXIT_SHEDDING, EXIT_NOT_CONVERGED = 0, 1, 2, 3


def _resolve(path: str) -> Path | str:
    """Existing file path, or the path of a bundled scenario given by name."""
    p = Path(path)
    if p.exists():
        return p
    from ..scenarios import BUNDLED, bundled_path

    if path in BUNDLED:
        return Path(str(bundled_path(path)))
    raise FileNotFoundError(f"scenario file {path} does not exist")


def _cmd_run(args) -> int:
    config = RunConfig(_resolve(args.scenario), args.out, max_iterations=args.max_iter, transport=args.transport)
    outcome = run_market(config)
    s = outcome.settlement
    print(f"scenario {outcome.scenario.name}: converged={outcome.converged} iterations={outcome.iterations} "
          f"congested_hours={list(outcome.congested_hours)} shedding_kw={outcome.shedding:.6g}")
    print(f"dso_cost={s.dso_cost:.6g} SEK residual={s.conservation_residual:.3g}")
    if args.out is not None:
        print(f"reports written to {args.out}")
    return outcome.exit_code


def _cmd_powerflow(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    if not 0 <= args.hour < scenario.horizon:
        raise ValueError(f"hour {args.hour} outside horizon 0..{scenario.horizon - 1}")
    ex = {}
    for spec in scenario.lecs:
        b = solve_baseline(spec, scenario.tariffs, scenario.horizon, scenario.dt)
        ex[spec.id] = (b.net_p, b.net_q)
    sol = solve_newton(scenario.network, hour_injections(scenario.network, ex, args.hour))
    sys.stdout.write(powerflow_csv(scenario.network, [sol]))
    alpha = branch_alpha(scenario.network, sol)
    tol = scenario.market.congestion_tolerance
    print(f"# iterations={sol.iterations} mismatch={sol.mismatch:.3g} min_alpha_kva={alpha.min():.6g} "
          f"congested={bool((alpha < -tol).any())}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    s = load_scenario(_resolve(args.scenario))
    print(f"ok: {s.name} ({s.network.num_buses} buses, {len(s.network.branches)} branches, "
          f"{len(s.lecs)} LECs, horizon {s.horizon})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lecflex", description="Local flexibility market simulator")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the full market workflow")
    run.add_argument("--scenario", required=True, help="scenario YAML path or bundled name")
    run.add_argument("--out", default=None, help="report directory")
    run.add_argument("--max-iter", type=int, default=None, help="negotiation iteration budget")
    run.add_argument("--transport", choices=sorted(TRANSPORTS), default="in-process")
    run.set_defaults(func=_cmd_run)
    pf = sub.add_parser("powerflow", help="baseline AC power flow for one hour")
    pf.add_argument("--scenario", required=True)
    pf.add_argument("--hour", type=int, required=True)
    pf.set_defaults(func=_cmd_powerflow)
    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("--scenario", required=True)
    val.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StageError, ScenarioError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
