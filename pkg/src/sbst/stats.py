"""Statistics for comparing stochastic test-generation approaches.

Mann-Whitney U with an exact small-sample path, Vargha-Delaney A12 effect
size, per-bug success rates over repeated runs, and unique-bug set
comparison between two approaches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

EXACT_LIMIT = 16  # pooled size up to which the tie-free exact p is used


def _rank(pooled: Sequence[float]) -> tuple[list[float], dict[float, int]]:
    """Average ranks (1-based) and tie counts for the pooled sample."""
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks = [0.0] * len(pooled)
    ties: dict[float, int] = {}
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        if j > i:
            ties[pooled[order[i]]] = j - i + 1
        i = j + 1
    return ranks, ties


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    u1 = 0.0
    for x in a:
        for y in b:
            if x > y:
                u1 += 1.0
            elif x == y:
                u1 += 0.5
    return u1


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-tailed Mann-Whitney U test.

    Returns (U, p) with U = min(U1, U2). For pooled samples of at most 16
    tie-free values the p-value is exact by full enumeration of group
    assignments; otherwise a normal approximation with tie and continuity
    corrections is used. Two identical constant samples give p = 1.
    """
    if not a or not b:
        raise ValueError("samples must be non-empty")
    n1, n2 = len(a), len(b)
    u1 = _u_statistic(a, b)
    u2 = n1 * n2 - u1
    u = min(u1, u2)

    pooled = list(a) + list(b)
    has_ties = len(set(pooled)) != len(pooled)
    if n1 + n2 <= EXACT_LIMIT and not has_ties:
        hi = n1 * n2 - u
        hits = 0
        total = 0
        indices = range(n1 + n2)
        for group_a in combinations(indices, n1):
            in_a = set(group_a)
            stat = _u_statistic(
                [pooled[i] for i in group_a],
                [pooled[i] for i in indices if i not in in_a],
            )
            if stat <= u or stat >= hi:
                hits += 1
            total += 1
        return u, hits / total

    n = n1 + n2
    _, ties = _rank(pooled)
    tie_term = sum(t**3 - t for t in ties.values())
    variance = (n1 * n2 * (n + 1) / 12.0) * (1.0 - tie_term / (n**3 - n))
    if variance <= 0:
        return u, 1.0
    mean = n1 * n2 / 2.0
    z = (u - mean + 0.5) / math.sqrt(variance)
    p = 2.0 * _norm_cdf(z)
    return u, min(max(p, 0.0), 1.0)


def a12(a: Sequence[float], b: Sequence[float]) -> float:
    """Vargha-Delaney effect size: probability that a beats b, ties at half."""
    if not a or not b:
        raise ValueError("samples must be non-empty")
    wins = 0.0
    for x in a:
        for y in b:
            if x > y:
                wins += 1.0
            elif x == y:
                wins += 0.5
    return wins / (len(a) * len(b))


@dataclass(frozen=True)
class RunMatrix:
    """Per-bug detection outcomes over repeated runs of one approach."""

    approach: str
    detections: dict[str, tuple[bool, ...]]

    def __post_init__(self):
        lengths = {len(v) for v in self.detections.values()}
        if len(lengths) > 1:
            raise ValueError(f"unequal run counts across bugs: {sorted(lengths)}")

    @property
    def runs(self) -> int:
        for v in self.detections.values():
            return len(v)
        return 0

    def bug_ids(self) -> set[str]:
        return set(self.detections)

    def detected_bugs(self) -> set[str]:
        return {bug for bug, outcomes in self.detections.items() if any(outcomes)}

    def bugs_per_run(self) -> list[int]:
        return [
            sum(1 for outcomes in self.detections.values() if outcomes[r])
            for r in range(self.runs)
        ]

    def detection_sample(self, bug: str) -> list[float]:
        return [1.0 if hit else 0.0 for hit in self.detections[bug]]


def unique_bugs(
    m_a: RunMatrix, m_b: RunMatrix
) -> tuple[set[str], set[str], set[str]]:
    """Bugs only A finds, only B finds, and both find (in any run)."""
    if m_a.bug_ids() != m_b.bug_ids():
        raise ValueError("run matrices cover different bug universes")
    found_a = m_a.detected_bugs()
    found_b = m_b.detected_bugs()
    return found_a - found_b, found_b - found_a, found_a & found_b


def success_rate(m: RunMatrix) -> dict[str, float]:
    """Fraction of runs detecting each bug."""
    return {
        bug: sum(outcomes) / len(outcomes)
        for bug, outcomes in m.detections.items()
    }
