"""Click-count and quality metrics over interaction traces.

`noc` is the number-of-clicks metric: the smallest human-click count whose
round-end IoU reaches the target. Sessions that never reach the target within
the click budget score the budget itself and are flagged, so means stay
interpretable while failures remain visible. `miou_at_k` is the mean round-end
IoU after exactly k clicks; sessions that stopped early (target reached or no
errors left) carry their final IoU forward.
"""

from typing import NamedTuple, Sequence

from .exceptions import ConfigError, InputError


class NocResult(NamedTuple):
    clicks: int
    reached: bool


def _round_end_ious(trace) -> list[float]:
    if hasattr(trace, "round_end_ious"):
        return list(trace.round_end_ious())
    return list(trace)


def noc(trace, target: float, budget: int) -> NocResult:
    """Smallest click count with round-end IoU >= target, capped at budget."""
    if not 0 < target <= 1:
        raise ConfigError(f"target must lie in (0, 1], got {target}")
    if budget < 1:
        raise ConfigError(f"budget must be >= 1, got {budget}")
    for i, value in enumerate(_round_end_ious(trace)):
        if value is not None and value >= target:
            return NocResult(clicks=i + 1, reached=True)
    return NocResult(clicks=budget, reached=False)


def iou_at_k(trace, k: int) -> float:
    """Round-end IoU after min(k, trace length) human clicks."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    ious = _round_end_ious(trace)
    if not ious:
        raise InputError("trace has no rounds")
    return ious[min(k, len(ious)) - 1]


def miou_at_k(traces: Sequence, k: int) -> float:
    if not traces:
        raise InputError("no traces given")
    return sum(iou_at_k(t, k) for t in traces) / len(traces)
