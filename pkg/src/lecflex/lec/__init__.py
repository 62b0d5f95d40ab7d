"""LEC agent: baseline, flexibility bid and commitment scheduling."""

from .agent import (INCREASE_IMPORT, REDUCE_IMPORT, BaselineSchedule, CommitmentError, CommittedSchedule,
                    FlexBid, FlexSignal, LECError, LECInfeasibleError, Schedule, cost_breakdown, net_exchange,
                    schedule_to_csv, solve_baseline, solve_commitment, solve_flex_bid)

__all__ = [
    "BaselineSchedule", "CommitmentError", "CommittedSchedule", "FlexBid", "FlexSignal", "INCREASE_IMPORT",
    "LECError", "LECInfeasibleError", "REDUCE_IMPORT", "Schedule", "cost_breakdown", "net_exchange",
    "schedule_to_csv", "solve_baseline", "solve_commitment", "solve_flex_bid",
]
