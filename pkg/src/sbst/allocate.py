"""Defect-score-driven budget allocation across classes.

Every class is guaranteed a lower-bound slice of the total budget; the
surplus is split by a softmax over defect scores, so high-scoring classes
attract most of the remaining budget while nobody starves. With constant
scores the plan degrades to the plain uniform split, which is exactly the
baseline allocation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_SHARPNESS = 6.0


@dataclass(frozen=True)
class BudgetPlan:
    total: float
    per_class: dict[str, float]
    lower_bound: float
    sharpness: float

    def as_json_dict(self) -> dict:
        return {
            "total": self.total,
            "lower_bound": self.lower_bound,
            "sharpness": self.sharpness,
            "per_class": dict(self.per_class),
        }


def allocate_budget(
    scores: dict[str, float],
    total: float,
    lower_bound: float | None = None,
    sharpness: float = DEFAULT_SHARPNESS,
    integral: bool = False,
) -> BudgetPlan:
    """Split `total` budget units across classes by defect score.

    budget_i = b_min + (T - N*b_min) * e^(k*s_i) / sum_j e^(k*s_j)

    `lower_bound` defaults to 10% of the uniform share T/N. With
    `integral` set (evaluation-count budgets), entries are rounded down
    and the leftover units go one each to the highest-scoring classes,
    keeping the sum exactly T. Integral budgets need a whole-number
    lower bound, otherwise rounding down could dip under it; the
    default bound is floored to keep the guarantee.
    """
    if not scores:
        raise ValueError("scores must be nonempty")
    if sharpness <= 0:
        raise ValueError("sharpness must be positive")
    n = len(scores)
    if lower_bound is None:
        lower_bound = 0.1 * total / n
        if integral:
            lower_bound = float(math.floor(lower_bound))
    elif integral and lower_bound != int(lower_bound):
        raise ValueError(
            f"integral allocation needs a whole-number lower bound, "
            f"got {lower_bound}"
        )
    if lower_bound < 0:
        raise ValueError("lower_bound must be non-negative")
    surplus = total - n * lower_bound
    if surplus < 0:
        raise ValueError(
            f"infeasible: total {total} < {n} classes * lower bound {lower_bound}"
        )

    # subtract the max before exponentiating so large k stays finite
    top = max(scores.values())
    weights = {c: math.exp(sharpness * (s - top)) for c, s in scores.items()}
    denom = sum(weights.values())
    real = {c: lower_bound + surplus * w / denom for c, w in weights.items()}

    if not integral:
        return BudgetPlan(total, real, lower_bound, sharpness)

    if total != int(total):
        raise ValueError("integral allocation needs an integer total")
    floored = {c: int(math.floor(v)) for c, v in real.items()}
    leftover = int(total) - sum(floored.values())
    by_score = sorted(scores, key=lambda c: (-scores[c], c))
    for c in by_score[:leftover]:
        floored[c] += 1
    return BudgetPlan(float(total), {c: float(v) for c, v in floored.items()},
                      lower_bound, sharpness)
