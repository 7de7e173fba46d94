from typing import Dict, Iterable, List, Sequence
import math

from ..models import GaussGreenReport


def step_ratios(values: Sequence[float], floor: float = 1e-14) -> List[float]:
    """values[k] / values[k - 1] for consecutive ladder or refinement levels.

    Levels whose predecessor is below ``floor`` get ratio 0 when they are
    below the floor as well, otherwise inf.
    """
    ratios = []
    for previous, current in zip(values, values[1:]):
        if previous > floor:
            ratios.append(current / previous)
        else:
            ratios.append(0.0 if current <= floor else math.inf)
    return ratios


def is_nonincreasing(values: Sequence[float], slack: float = 0.0, floor: float = 1e-14) -> bool:
    """True when every level is at most (1 + slack) times the previous one (up to ``floor``)."""
    return all(current <= (1.0 + slack) * previous + floor for previous, current in zip(values, values[1:]))


def observed_order(values: Sequence[float], steps: Sequence[float]) -> List[float]:
    """log(e_k / e_{k-1}) / log(h_k / h_{k-1}); nan where either error vanishes."""
    orders = []
    for k in range(1, len(values)):
        e0, e1 = values[k - 1], values[k]
        h0, h1 = steps[k - 1], steps[k]
        if e0 <= 0.0 or e1 <= 0.0 or h0 == h1:
            orders.append(math.nan)
        else:
            orders.append(math.log(e1 / e0) / math.log(h1 / h0))
    return orders


def summarize_reports(reports: Iterable[GaussGreenReport]) -> Dict[str, Dict[str, float]]:
    """
    Per scenario kind (the name up to the first '['): count, passed, worst and mean relative residual.
    """
    buckets: Dict[str, List[GaussGreenReport]] = {}
    for report in reports:
        buckets.setdefault(report.scenario.split("[")[0], []).append(report)

    summary = {}
    for key, items in buckets.items():
        rels = [r.rel_residual for r in items if math.isfinite(r.rel_residual)]
        summary[key] = {
            "count": len(items),
            "passed": sum(1 for r in items if r.passed),
            "max_rel_residual": max(rels) if rels else math.nan,
            "mean_rel_residual": sum(rels) / len(rels) if rels else math.nan,
        }
    return summary
