"""Defect scores and labels for classes and methods.

Three sources: a simulated predictor tuned to a target Matthews
correlation coefficient against known ground truth, a time-weighted risk
scorer over commit histories, and the same simulator applied at method
level inside one class. Scores follow one convention throughout: a unit
labeled defective scores in [0.5, 1.0], a clean one in [0.0, 0.5).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

DEFAULT_TWR_WEIGHTS = (0.25, 0.5, 0.25)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def mcc(m: ConfusionMatrix) -> float:
    """Matthews correlation coefficient, 0 when any margin is empty."""
    if m.total() == 0:
        raise ValueError("empty confusion matrix")
    pred_pos = m.tp + m.fp
    pos = m.tp + m.fn
    neg = m.tn + m.fp
    pred_neg = m.tn + m.fn
    if pred_pos == 0 or pos == 0 or neg == 0 or pred_neg == 0:
        return 0.0
    numerator = m.tp * m.tn - m.fp * m.fn
    return numerator / (math.sqrt(pred_pos * pos) * math.sqrt(neg * pred_neg))


@dataclass(frozen=True)
class PredictorOutput:
    level: str  # "class" | "method"
    scores: dict[str, float]
    labels: dict[str, bool]  # True = defective
    realized: ConfusionMatrix
    target_mcc: float
    seed: int


def simulate_predictor(
    units: Sequence[str],
    defective: Iterable[str],
    target_mcc: float,
    seed: int,
    level: str = "class",
) -> PredictorOutput:
    """Mislabel just enough units to land the realized MCC on the target.

    The (fp, fn) pair is chosen by exhaustive scan, minimizing the MCC
    error with ties broken toward fewer flips, then toward balanced flips.
    Which particular units get flipped is uniform under the seed, so runs
    differ in who is mispredicted while the realized matrix stays fixed.
    """
    units = list(units)
    truth = set(defective)
    n = len(units)
    d = sum(1 for u in units if u in truth)
    if d == 0 or d == n:
        raise ValueError(
            f"simulated predictor needs both defective and clean units, got {d}/{n}"
        )

    best_key: tuple | None = None
    best: ConfusionMatrix | None = None
    for fp in range(n - d + 1):
        for fn in range(d + 1):
            m = ConfusionMatrix(tp=d - fn, fp=fp, tn=n - d - fp, fn=fn)
            key = (abs(mcc(m) - target_mcc), fp + fn, abs(fp - fn), fn, fp)
            if best_key is None or key < best_key:
                best_key = key
                best = m
    assert best is not None

    rng = random.Random(seed)
    defective_units = [u for u in units if u in truth]
    clean_units = [u for u in units if u not in truth]
    miss = set(rng.sample(defective_units, best.fn))
    false_alarm = set(rng.sample(clean_units, best.fp))
    labels = {
        u: (u in truth) != (u in miss or u in false_alarm) for u in units
    }
    scores = assign_scores(labels, seed)
    return PredictorOutput(
        level=level,
        scores=scores,
        labels=labels,
        realized=best,
        target_mcc=target_mcc,
        seed=seed,
    )


def assign_scores(labels: dict[str, bool], seed: int) -> dict[str, float]:
    """Draw a score per unit: defective in [0.5, 1.0], clean in [0.0, 0.5)."""
    rng = random.Random(seed)
    scores: dict[str, float] = {}
    for unit, is_defective in labels.items():
        half = rng.random() * 0.5
        scores[unit] = 0.5 + half if is_defective else half
    return scores


# ---------------------------------------------------------------------------
# Time-weighted risk over commit history


class HistoryRecord(NamedTuple):
    class_name: str
    ts: int
    author: str
    fix: bool


def _contribution(t_norm: float) -> float:
    return 1.0 / (1.0 + math.exp(-12.0 * t_norm + 12.0))


def twr_scores(
    history: Sequence[HistoryRecord],
    now: int,
    weights: tuple[float, float, float] = DEFAULT_TWR_WEIGHTS,
) -> dict[str, float]:
    """Per-class time-weighted risk from revision/fix/author activity.

    Each event contributes through a logistic curve of its position in
    time between the oldest project event and `now` (1 = at `now`), so
    recent activity dominates. Feature sums are combined with the given
    weights and the result is scaled across the project by max-division.
    Classes absent from the history simply get no entry.
    """
    w_rev, w_fix, w_auth = weights
    if min(weights) < 0 or abs(w_rev + w_fix + w_auth - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to 1")
    if not history:
        return {}
    if any(e.ts > now for e in history):
        raise ValueError("history contains events after 'now'")

    t_min = min(e.ts for e in history)
    span = now - t_min

    def t_norm(ts: int) -> float:
        if span <= 0:
            return 1.0
        return (ts - t_min) / span

    by_class: dict[str, list[HistoryRecord]] = {}
    for event in history:
        by_class.setdefault(event.class_name, []).append(event)

    pre: dict[str, float] = {}
    for cls, events in by_class.items():
        revisions = sum(_contribution(t_norm(e.ts)) for e in events)
        fixes = sum(_contribution(t_norm(e.ts)) for e in events if e.fix)
        first_by_author: dict[str, HistoryRecord] = {}
        for e in events:
            prev = first_by_author.get(e.author)
            if prev is None or e.ts < prev.ts:
                first_by_author[e.author] = e
        authors = sum(_contribution(t_norm(e.ts)) for e in first_by_author.values())
        pre[cls] = w_rev * revisions + w_fix * fixes + w_auth * authors

    peak = max(pre.values())
    if peak <= 0:
        return {cls: 0.0 for cls in pre}
    return {cls: value / peak for cls, value in pre.items()}
