"""Many-objective evolutionary search for branch-covering tests.

The engine follows the dynamic many-objective genetic algorithm family:
objectives are the currently active branch targets (uncovered targets
whose control-dependency parent is covered or absent), selection runs on
preference-sorted fronts with crowding distance, and an archive keeps the
shortest covering test per target. The defect-aware variant reorders
preference sorting so tests closest to covering targets in predicted
defective methods are selected first; with an empty or all-covering buggy
set it reduces exactly to the plain sort.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

import numpy as np

from .executor import ExecutionTrace, Limits, TestCase, execute, target_fitness
from .minilang.nodes import (
    INT64_MAX,
    INT64_MIN,
    BranchTarget,
    ClassUnit,
    ControlDependencyGraph,
    MethodUnit,
    SubjectProgram,
)
from .minilang.targets import build_cdg, class_targets

GUIDANCE_NONE = "none"
GUIDANCE_DEFECT_AWARE = "defect-aware"

# Powers of two and off-by-one neighbours where integer bugs cluster.
BOUNDARY_INTS: tuple[int, ...] = tuple(
    sign * value
    for value in (
        128,
        255,
        256,
        1024,
        32767,
        32768,
        65535,
        65536,
        2**24,
        2**30,
        2**31 - 1,
        2**31,
    )
    for sign in (1, -1)
) + (INT64_MAX,)


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 30
    crossover_rate: float = 0.75
    mutation_rate: float = 0.4
    budget_kind: str = "evaluations"  # or "seconds"
    seed: int = 0
    guidance: str = GUIDANCE_NONE
    buggy_threshold: float = 0.5
    limits: Limits = field(default_factory=Limits)

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population size must be even and at least 4")
        for rate in (self.crossover_rate, self.mutation_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")
        if self.guidance not in (GUIDANCE_NONE, GUIDANCE_DEFECT_AWARE):
            raise ValueError(f"unknown guidance {self.guidance!r}")
        if self.budget_kind not in ("evaluations", "seconds"):
            raise ValueError(f"unknown budget kind {self.budget_kind!r}")


def _magnitude(args: tuple) -> int:
    total = 0
    for a in args:
        total += int(a) if isinstance(a, bool) else abs(a)
    return total


@dataclass(eq=False)
class Individual:
    test: TestCase
    trace: ExecutionTrace
    order: int
    fitness: dict[str, float] = field(default_factory=dict)
    rank: int = 0
    crowding: float = 0.0

    @property
    def magnitude(self) -> int:
        return _magnitude(self.test.args)


@dataclass(frozen=True)
class SuiteEntry:
    test: TestCase
    covered: frozenset[str]
    traps_hit: frozenset[str]


class Archive:
    """Best covering test per target; replaced only by a smaller one."""

    def __init__(self):
        self._by_target: dict[str, Individual] = {}

    def consider(self, ind: Individual, relevant: frozenset[str]) -> None:
        for tid in ind.trace.covered & relevant:
            held = self._by_target.get(tid)
            if held is None or ind.magnitude < held.magnitude:
                self._by_target[tid] = ind

    def covered_targets(self) -> set[str]:
        return set(self._by_target)

    def suite(self) -> list[SuiteEntry]:
        entries: list[SuiteEntry] = []
        seen: set[TestCase] = set()
        for tid in sorted(self._by_target):
            ind = self._by_target[tid]
            if ind.test in seen:
                continue
            seen.add(ind.test)
            entries.append(
                SuiteEntry(ind.test, ind.trace.covered, ind.trace.traps_hit)
            )
        return entries


# ---------------------------------------------------------------------------
# random test construction and variation


def _sample_int(rng: random.Random) -> int:
    roll = rng.random()
    if roll < 0.10:
        return 0
    if roll < 0.20:
        return rng.choice((1, -1))
    if roll < 0.50:
        return rng.randint(-1000, 1000)
    if roll < 0.75:
        return rng.choice(BOUNDARY_INTS)
    return rng.getrandbits(64) - 2**63


def _sample_args(meth: MethodUnit, rng: random.Random) -> tuple:
    return tuple(
        (rng.random() < 0.5) if p.type == "bool" else _sample_int(rng)
        for p in meth.params
    )


def _random_test(cls: ClassUnit, rng: random.Random) -> TestCase:
    meth = cls.methods[rng.randrange(len(cls.methods))]
    return TestCase(cls.name, meth.name, _sample_args(meth, rng))


def init_population(
    cls: ClassUnit, config: SearchConfig, rng: random.Random
) -> list[TestCase]:
    return [_random_test(cls, rng) for _ in range(config.population_size)]


def _wrap_arg(value: int) -> int:
    return (value + 2**63) % 2**64 - 2**63


def _mutate_int(value: int, rng: random.Random) -> int:
    roll = rng.random()
    if roll < 0.50:
        # log-uniform magnitude: as likely to nudge by 1 as to leap by
        # thousands, so equality targets converge geometrically
        magnitude = int(2 ** (rng.random() * 16.0))
        return _wrap_arg(value + rng.choice((magnitude, -magnitude)))
    if roll < 0.65:
        delta = round(rng.gauss(0.0, 64.0))
        if delta == 0:
            delta = rng.choice((1, -1))
        return _wrap_arg(value + delta)
    if roll < 0.75:
        # multiplicative contraction: additive steps cannot cross the
        # float-saturated plateau that astronomically large operands put
        # on a branch distance, halving chains can
        shift = rng.randrange(1, 17)
        shrunk = abs(value) >> shift
        return shrunk if value >= 0 else -shrunk
    if roll < 0.85:
        jump = 1 << rng.randrange(1, 63)
        return _wrap_arg(value + rng.choice((jump, -jump)))
    if roll < 0.925:
        return rng.choice(BOUNDARY_INTS + (0, 1, -1))
    return rng.getrandbits(64) - 2**63


def _mutate(test: TestCase, cls: ClassUnit, config: SearchConfig,
            rng: random.Random) -> TestCase:
    rate = config.mutation_rate
    if len(cls.methods) > 1 and rng.random() < rate * 0.2:
        return _random_test(cls, rng)
    meth = cls.method(test.method_name)
    args = list(test.args)
    for i, param in enumerate(meth.params):
        if rng.random() >= rate:
            continue
        if param.type == "bool":
            args[i] = not args[i]
        else:
            args[i] = _mutate_int(args[i], rng)
    return TestCase(test.class_name, test.method_name, tuple(args))


def _crossover(
    t1: TestCase, t2: TestCase, rng: random.Random
) -> tuple[TestCase, TestCase]:
    if t1.method_name != t2.method_name or len(t1.args) < 2:
        return t1, t2
    cut = rng.randrange(1, len(t1.args))
    c1 = TestCase(t1.class_name, t1.method_name, t1.args[:cut] + t2.args[cut:])
    c2 = TestCase(t2.class_name, t2.method_name, t2.args[:cut] + t1.args[cut:])
    return c1, c2


def _tournament(population: list[Individual], rng: random.Random) -> Individual:
    a = population[rng.randrange(len(population))]
    b = population[rng.randrange(len(population))]
    ka = (a.rank, -a.crowding, a.order)
    kb = (b.rank, -b.crowding, b.order)
    return a if ka <= kb else b


def vary(
    population: list[Individual],
    cls: ClassUnit,
    config: SearchConfig,
    rng: random.Random,
) -> list[TestCase]:
    """Produce population-size offspring tests by tournament, crossover
    and mutation. With both rates at zero the offspring are clones."""
    offspring: list[TestCase] = []
    while len(offspring) < config.population_size:
        p1 = _tournament(population, rng).test
        p2 = _tournament(population, rng).test
        if rng.random() < config.crossover_rate:
            c1, c2 = _crossover(p1, p2, rng)
        else:
            c1, c2 = p1, p2
        offspring.append(_mutate(c1, cls, config, rng))
        if len(offspring) < config.population_size:
            offspring.append(_mutate(c2, cls, config, rng))
    return offspring


# ---------------------------------------------------------------------------
# preference sorting


def _per_target_minima(
    population: list[Individual],
    targets: list[str],
    eligible: set[int] | None = None,
) -> list[Individual]:
    """One minimal-fitness individual per target, deduplicated, in
    insertion order. Ties go to smaller argument magnitude, then age."""
    chosen: dict[int, Individual] = {}
    for tid in targets:
        best: Individual | None = None
        best_key = None
        for ind in population:
            if eligible is not None and id(ind) not in eligible:
                continue
            key = (ind.fitness[tid], ind.magnitude, ind.order)
            if best_key is None or key < best_key:
                best, best_key = ind, key
        if best is not None:
            chosen[id(best)] = best
    return sorted(chosen.values(), key=lambda ind: ind.order)


def _nondominated_fronts(
    population: list[Individual], axes: list[str]
) -> list[list[Individual]]:
    if not population:
        return []
    vectors = np.array(
        [[ind.fitness[t] for t in axes] for ind in population], dtype=float
    )
    le = (vectors[:, None, :] <= vectors[None, :, :]).all(axis=2)
    lt = (vectors[:, None, :] < vectors[None, :, :]).any(axis=2)
    dominates = le & lt  # [i, j]: i dominates j
    counts = dominates.sum(axis=0)
    fronts: list[list[Individual]] = []
    remaining = np.ones(len(population), dtype=bool)
    while remaining.any():
        members = np.flatnonzero(remaining & (counts == 0))
        if members.size == 0:  # pragma: no cover - dominance is acyclic
            members = np.flatnonzero(remaining)
        fronts.append([population[i] for i in members])
        remaining[members] = False
        counts = counts - dominates[members].sum(axis=0)
    return fronts


def _crowding(front: list[Individual], axes: list[str]) -> None:
    for ind in front:
        ind.crowding = 0.0
    if len(front) <= 2:
        for ind in front:
            ind.crowding = float("inf")
        return
    for tid in axes:
        ordered = sorted(front, key=lambda ind: ind.fitness[tid])
        low = ordered[0].fitness[tid]
        high = ordered[-1].fitness[tid]
        ordered[0].crowding = float("inf")
        ordered[-1].crowding = float("inf")
        if high == low:
            continue
        for prev, mid, nxt in zip(ordered, ordered[1:], ordered[2:]):
            mid.crowding += (nxt.fitness[tid] - prev.fitness[tid]) / (high - low)


def _finish_fronts(
    fronts: list[list[Individual]], axes: list[str]
) -> list[list[Individual]]:
    for rank, front in enumerate(fronts):
        for ind in front:
            ind.rank = rank
        _crowding(front, axes)
    return fronts


def preference_sort(
    population: list[Individual], uncovered: set[str]
) -> list[list[Individual]]:
    """Front 0 holds the best individual per uncovered target; the rest
    are layered by fast non-dominated sorting over those objectives."""
    if not uncovered:
        ordered = sorted(population, key=lambda ind: ind.order)
        return _finish_fronts([ordered] if ordered else [], [])
    axes = sorted(uncovered)
    front0 = _per_target_minima(population, axes)
    placed = {id(ind) for ind in front0}
    rest = [ind for ind in population if id(ind) not in placed]
    fronts = [front0] if front0 else []
    fronts.extend(_nondominated_fronts(rest, axes))
    return _finish_fronts(fronts, axes)


def defect_aware_preference_sort(
    population: list[Individual],
    uncovered: set[str],
    buggy_targets: set[str],
) -> list[list[Individual]]:
    """Preference sorting that ranks minima for uncovered buggy targets
    ahead of minima for the remaining uncovered targets."""
    if not uncovered:
        return preference_sort(population, uncovered)
    axes = sorted(uncovered)
    buggy = sorted(uncovered & buggy_targets)
    clean = sorted(uncovered - buggy_targets)

    fronts: list[list[Individual]] = []
    placed: set[int] = set()
    front_buggy = _per_target_minima(population, buggy)
    if front_buggy:
        fronts.append(front_buggy)
        placed |= {id(ind) for ind in front_buggy}
    eligible = {id(ind) for ind in population} - placed
    front_clean = _per_target_minima(population, clean, eligible)
    if front_clean:
        fronts.append(front_clean)
        placed |= {id(ind) for ind in front_clean}
    rest = [ind for ind in population if id(ind) not in placed]
    fronts.extend(_nondominated_fronts(rest, axes))
    return _finish_fronts(fronts, axes)


def update_active_targets(
    covered: set[str], cdg: ControlDependencyGraph
) -> set[str]:
    """Uncovered targets whose parent is covered or absent."""
    return {
        tid
        for tid, parent in cdg.parents.items()
        if tid not in covered and (parent is None or parent in covered)
    }


# ---------------------------------------------------------------------------
# the generational loop


@dataclass(frozen=True)
class SearchStats:
    evaluations: int
    generations: int
    covered: frozenset[str]
    coverage: float
    traps_hit: frozenset[str]
    seed: int


def buggy_targets_for(
    cls: ClassUnit, method_scores: dict[str, float], threshold: float
) -> set[str]:
    """All targets of methods scoring at or above the buggy threshold."""
    buggy_methods = {m for m, s in method_scores.items() if s >= threshold}
    return {
        t.id
        for t in class_targets(cls)
        if t.method_name in buggy_methods
    }


def generate_tests(
    program: SubjectProgram,
    class_name: str,
    budget: int | float,
    config: SearchConfig,
    method_scores: dict[str, float] | None = None,
) -> tuple[list[SuiteEntry], SearchStats]:
    """Search one class under a budget; returns archive suite and run
    statistics. The budget is an evaluation count or, with budget_kind
    "seconds", a wall-clock allowance checked at generation granularity.
    Deterministic for a fixed seed in evaluation mode."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    if config.guidance == GUIDANCE_DEFECT_AWARE and method_scores is None:
        raise ValueError("defect-aware guidance needs method scores")

    cls = program.class_unit(class_name)
    targets = class_targets(cls)
    target_by_id = {t.id: t for t in targets}
    all_ids = frozenset(target_by_id)
    cdg = build_cdg(targets)
    buggy: set[str] = set()
    if config.guidance == GUIDANCE_DEFECT_AWARE:
        buggy = buggy_targets_for(cls, method_scores or {}, config.buggy_threshold)

    rng = random.Random(config.seed)
    archive = Archive()
    covered: set[str] = set()
    traps: set[str] = set()
    evals = 0
    order = 0
    deadline: float | None = None
    if config.budget_kind == "seconds":
        deadline = time.monotonic() + budget

    def exhausted() -> bool:
        if deadline is not None:
            return time.monotonic() >= deadline
        return evals >= budget

    def evaluate(test: TestCase) -> Individual:
        nonlocal evals, order
        trace = execute(program, test, config.limits)
        evals += 1
        ind = Individual(test, trace, order)
        order += 1
        covered.update(trace.covered & all_ids)
        traps.update(trace.traps_hit)
        archive.consider(ind, all_ids)
        return ind

    def refresh_fitness(pool: list[Individual], active: list[str]) -> None:
        for ind in pool:
            ind.fitness = {
                tid: target_fitness(ind.trace, target_by_id[tid], cdg)
                for tid in active
            }

    def sort_fronts(pool: list[Individual], active: set[str]):
        if config.guidance == GUIDANCE_DEFECT_AWARE:
            return defect_aware_preference_sort(pool, active, buggy)
        return preference_sort(pool, active)

    def select(fronts: list[list[Individual]], size: int) -> list[Individual]:
        chosen: list[Individual] = []
        for front in fronts:
            if len(chosen) + len(front) <= size:
                chosen.extend(front)
            else:
                by_spread = sorted(front, key=lambda i: (-i.crowding, i.order))
                chosen.extend(by_spread[: size - len(chosen)])
            if len(chosen) >= size:
                break
        return chosen

    init_cap = config.population_size
    if deadline is None:
        init_cap = min(init_cap, int(budget))
    initial = init_population(cls, config, rng)[:init_cap]
    population = [evaluate(t) for t in initial]
    generations = 0

    while not exhausted() and not all_ids <= covered and population:
        active = update_active_targets(covered, cdg)
        refresh_fitness(population, sorted(active))
        # reproduction ranks always come from the plain preference criterion;
        # defect-aware fronts decide survival only. Letting buggy-target
        # minima monopolise rank 0 in the parent tournament inbreeds the
        # population around a handful of elites and measurably slows the
        # very targets the guidance is meant to reach.
        preference_sort(population, active)
        offspring_tests = vary(population, cls, config, rng)
        if deadline is None:
            offspring_tests = offspring_tests[: int(budget) - evals]
        offspring = [evaluate(t) for t in offspring_tests]
        generations += 1
        if all_ids <= covered:
            break
        active = update_active_targets(covered, cdg)
        combined = population + offspring
        refresh_fitness(combined, sorted(active))
        fronts = sort_fronts(combined, active)
        population = select(fronts, config.population_size)

    coverage = len(covered) / len(all_ids) if all_ids else 1.0
    stats = SearchStats(
        evaluations=evals,
        generations=generations,
        covered=frozenset(covered),
        coverage=coverage,
        traps_hit=frozenset(traps),
        seed=config.seed,
    )
    return archive.suite(), stats
