"""End-to-end acceptance checks.

Nine criteria, one test each, every one printing a single PASS/FAIL
line with its measured numbers. Criteria with stated runtime bounds
assert them. Oracles are independent of the implementation under test:
exhaustive re-scans, brute-force dominance layering, and scipy's exact
Mann-Whitney path.
"""

import math
import random
import time

import scipy.stats

from sbst.allocate import allocate_budget
from sbst.corpus import builtin_corpus_root, load_corpus, validate_corpus
from sbst.executor import ExecutionTrace, TestCase
from sbst.harness import (
    ApproachSpec,
    ExperimentConfig,
    PredictorSpec,
    run_experiment,
)
from sbst.predict import mcc, simulate_predictor
from sbst.report import emit_report
from sbst.search import (
    Individual,
    SearchConfig,
    defect_aware_preference_sort,
    generate_tests,
    preference_sort,
)
from sbst.stats import a12, mann_whitney_u

ROOT = builtin_corpus_root()
MULTI_CLASS = ("codec", "ledger", "metrics", "parserlib", "router",
               "scheduler")
SINGLE_CLASS = {"math94": "Math94", "deepnest": "Filter"}
BASE_SEED = 7


def announce(capsys, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


# --- 1: corpus validity ---------------------------------------------------


def test_criterion_1_corpus_validity(capsys):
    started = time.monotonic()
    corpus = load_corpus(ROOT)
    entries = validate_corpus(corpus)
    passed = sum(1 for e in entries if e.passed)
    witness = next(
        m.witness for m in corpus.manifests if m.bug_id == "math94-overflow"
    )
    elapsed = time.monotonic() - started
    ok = (
        passed == len(entries) == len(corpus.manifests)
        and len(entries) >= 20
        and witness.args == (1073741824, 1032)
        and elapsed < 10.0
    )
    announce(
        capsys, 1, ok,
        f"{passed}/{len(entries)} witnesses validate, overflow witness "
        f"args {witness.args}, {elapsed:.1f}s (< 10s)",
    )


# --- 2: search competence -------------------------------------------------


def test_criterion_2_search_competence(capsys):
    started = time.monotonic()
    corpus = load_corpus(ROOT)
    counts = {}
    for program_name, class_name in SINGLE_CLASS.items():
        program = corpus.programs[program_name]
        full = 0
        for seed in range(20):
            _, stats = generate_tests(
                program, class_name, 5000, SearchConfig(seed=seed)
            )
            if stats.coverage == 1.0:
                full += 1
        counts[program_name] = full
    elapsed = time.monotonic() - started
    ok = all(v >= 18 for v in counts.values()) and elapsed < 120.0
    detail = ", ".join(f"{p} {v}/20 full coverage" for p, v in counts.items())
    announce(capsys, 2, ok, f"{detail}, {elapsed:.1f}s (< 2min)")


# --- 3: directional class-allocation result -------------------------------


def test_criterion_3_class_allocation_direction(capsys):
    started = time.monotonic()
    config = ExperimentConfig(
        corpus_root=str(ROOT),
        approaches=(
            ApproachSpec("baseline"),
            ApproachSpec("sbst_cl", PredictorSpec("ideal"),
                         label="cl_ideal"),
            ApproachSpec("sbst_cl", PredictorSpec("simulated", 0.0),
                         label="cl_mcc0"),
        ),
        per_class_factor=600,
        runs=20,
        base_seed=BASE_SEED,
        programs=MULTI_CLASS,
    )
    result = run_experiment(config)
    base = [float(x) for x in result.matrices["baseline"].bugs_per_run()]
    ideal = [float(x) for x in result.matrices["cl_ideal"].bugs_per_run()]
    mcc0 = [float(x) for x in result.matrices["cl_mcc0"].bugs_per_run()]
    a12_ideal = a12(ideal, base)
    a12_mcc0 = a12(mcc0, base)
    elapsed = time.monotonic() - started
    ok = (
        sum(ideal) >= sum(base)
        and a12_ideal >= 0.6
        and 0.4 <= a12_mcc0 <= 0.6
        and elapsed < 900.0
    )
    announce(
        capsys, 3, ok,
        f"ideal {sum(ideal):.0f} vs baseline {sum(base):.0f} bugs "
        f"(A12 {a12_ideal:.3f} >= 0.6), mcc0 A12 {a12_mcc0:.3f} in "
        f"[0.4, 0.6], {elapsed:.1f}s (< 15min)",
    )


# --- 4: directional method-guidance result --------------------------------


def test_criterion_4_method_guidance_direction(capsys):
    started = time.monotonic()
    outcomes = []
    for program, factor in (("math94", 300), ("deepnest", 5000)):
        config = ExperimentConfig(
            corpus_root=str(ROOT),
            approaches=(
                ApproachSpec("baseline"),
                ApproachSpec("sbst_ml", PredictorSpec("ideal"),
                             label="ml_ideal"),
            ),
            per_class_factor=factor,
            runs=20,
            base_seed=BASE_SEED,
            programs=(program,),
        )
        result = run_experiment(config)
        for bug, rate in result.success_rates["ml_ideal"].items():
            outcomes.append(
                (bug, rate, result.success_rates["baseline"][bug])
            )
    elapsed = time.monotonic() - started
    ok = (
        all(guided >= base for _, guided, base in outcomes)
        and elapsed < 600.0
    )
    detail = ", ".join(
        f"{bug} {guided:.2f} vs {base:.2f}" for bug, guided, base in outcomes
    )
    announce(capsys, 4, ok, f"trap success {detail}, {elapsed:.1f}s (< 10min)")


# --- 5: allocator properties ----------------------------------------------


def test_criterion_5_allocator_properties(capsys):
    rng = random.Random(90125)
    violations = 0
    checked = 0
    for i in range(10_000):
        n = rng.randint(1, 12)
        names = [f"c{j:02d}" for j in range(n)]
        integral = i % 2 == 0
        uniform_case = i % 10 == 0
        if uniform_case:
            value = rng.random()
            scores = {c: value for c in names}
            total = float(n * rng.randint(10, 400))
        else:
            scores = {c: rng.random() for c in names}
            total = float(rng.randint(10 * n, 4000))
        choice = rng.randrange(3)
        if choice == 0:
            lower = None
        elif integral:
            lower = float(rng.randint(0, int(total) // n))
        else:
            lower = rng.uniform(0.0, total / n)
        plan = allocate_budget(scores, total, lower, integral=integral)
        checked += 1

        budgets = plan.per_class
        if integral:
            conserved = sum(budgets.values()) == total
        else:
            conserved = abs(sum(budgets.values()) - total) <= 1e-9 * total
        floored = all(v >= plan.lower_bound for v in budgets.values())
        monotone = all(
            budgets[x] >= budgets[y]
            for x in names for y in names if scores[x] > scores[y]
        )
        uniform_ok = (not uniform_case) or len(set(budgets.values())) == 1
        if not (conserved and floored and monotone and uniform_ok):
            violations += 1
    ok = violations == 0 and checked == 10_000
    announce(
        capsys, 5, ok,
        f"{checked} random score vectors, {violations} violations of "
        "conservation / floor / monotonicity / uniform-plan",
    )


# --- 6: predictor simulator against re-scan oracle ------------------------


def _oracle_best_delta(n, d, target):
    best = None
    for fp in range(n - d + 1):
        for fn in range(d + 1):
            tp, tn = d - fn, n - d - fp
            num = tp * tn - fp * fn
            den = math.sqrt(
                (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
            )
            value = 0.0 if den == 0 else num / den
            delta = abs(value - target)
            if best is None or delta < best:
                best = delta
    return best


def test_criterion_6_mcc_simulator(capsys):
    worst = 0.0
    exact_at_one = True
    cases = 0
    for n in (10, 50, 200):
        d = math.ceil(0.2 * n)
        units = [f"u{i:03d}" for i in range(n)]
        truth = set(units[:d])
        for tenth in range(11):
            target = tenth / 10.0
            out = simulate_predictor(units, truth, target, seed=601 + tenth)
            achieved = abs(mcc(out.realized) - target)
            optimum = _oracle_best_delta(n, d, target)
            worst = max(worst, abs(achieved - optimum))
            if target == 1.0 and out.labels != {
                u: u in truth for u in units
            }:
                exact_at_one = False
            cases += 1
    ok = worst <= 1e-9 and exact_at_one and cases == 33
    announce(
        capsys, 6, ok,
        f"{cases} (target, N) cases match the exhaustive re-scan oracle "
        f"(worst gap {worst:.1e}), target 1.0 reproduces ground truth",
    )


# --- 7: statistics against scipy ------------------------------------------


def test_criterion_7_statistics_oracles(capsys):
    from itertools import combinations

    worst = 0.0
    patterns = 0
    for total in range(2, 11):
        ranks = list(range(1, total + 1))
        for size_a in range(1, total):
            for group in combinations(range(total), size_a):
                chosen = set(group)
                sample_a = [float(ranks[i]) for i in chosen]
                sample_b = [
                    float(ranks[i]) for i in range(total) if i not in chosen
                ]
                _, p_mine = mann_whitney_u(sample_a, sample_b)
                p_ref = scipy.stats.mannwhitneyu(
                    sample_a, sample_b, alternative="two-sided",
                    method="exact",
                ).pvalue
                worst = max(worst, abs(p_mine - p_ref))
                patterns += 1

    rng = random.Random(777)
    identity_ok = True
    for _ in range(1000):
        size_a = rng.randint(1, 12)
        size_b = rng.randint(1, 12)
        pool = [float(rng.randint(0, 6)) for _ in range(size_a + size_b)]
        sample_a, sample_b = pool[:size_a], pool[size_a:]
        forward = a12(sample_a, sample_b)
        if abs(forward + a12(sample_b, sample_a) - 1.0) > 1e-12:
            identity_ok = False
        if abs(a12(sample_a, sample_a) - 0.5) > 1e-12:
            identity_ok = False

    ok = worst <= 1e-12 and identity_ok
    announce(
        capsys, 7, ok,
        f"exact p equals scipy on all {patterns} tie-free rank patterns "
        f"of size <= 10 (worst gap {worst:.1e}), A12 identities hold on "
        "1000 random pairs",
    )


# --- 8: preference sorting against brute force ----------------------------


def _fake_individual(order, fitness, args):
    trace = ExecutionTrace({}, frozenset(), frozenset(), False, 0)
    ind = Individual(TestCase("C", "m", tuple(args)), trace, order)
    ind.fitness = dict(fitness)
    return ind


def _oracle_fronts(population, uncovered):
    if not uncovered:
        ordered = sorted(population, key=lambda ind: ind.order)
        return [[id(i) for i in ordered]] if ordered else []
    axes = sorted(uncovered)
    chosen = {}
    for tid in axes:
        best = None
        best_key = None
        for ind in population:
            key = (ind.fitness[tid], ind.magnitude, ind.order)
            if best_key is None or key < best_key:
                best, best_key = ind, key
        if best is not None:
            chosen[id(best)] = best
    first = sorted(chosen.values(), key=lambda ind: ind.order)
    fronts = [[id(i) for i in first]] if first else []

    def dominated(a, b):
        av = [a.fitness[t] for t in axes]
        bv = [b.fitness[t] for t in axes]
        return all(y <= x for x, y in zip(av, bv)) and any(
            y < x for x, y in zip(av, bv)
        )

    remaining = [ind for ind in population if id(ind) not in chosen]
    while remaining:
        layer = [
            ind for ind in remaining
            if not any(dominated(ind, other) for other in remaining)
        ]
        fronts.append([id(i) for i in layer])
        survivors = {id(i) for i in layer}
        remaining = [i for i in remaining if id(i) not in survivors]
    return fronts


def test_criterion_8_sorting_oracle(capsys):
    rng = random.Random(5150)
    mismatches = 0
    reductions_ok = True
    grid = [0.0, 0.25, 0.5, 1.0, 2.0]
    for _ in range(500):
        targets = [f"t{k}" for k in range(rng.randint(1, 6))]
        uncovered = {t for t in targets if rng.random() < 0.8}
        population = [
            _fake_individual(
                order,
                {
                    t: rng.choice(grid) if rng.random() < 0.7
                    else round(rng.uniform(0, 3), 3)
                    for t in targets
                },
                [rng.randint(-5, 5) for _ in range(rng.randint(0, 3))],
            )
            for order in range(rng.randint(0, 50))
        ]
        fronts = preference_sort(population, uncovered)
        if [[id(i) for i in f] for f in fronts] != _oracle_fronts(
            population, uncovered
        ):
            mismatches += 1

        plain = [
            [id(i) for i in f] for f in preference_sort(population, uncovered)
        ]
        for buggy in (set(), set(targets)):
            aware = defect_aware_preference_sort(
                population, uncovered, buggy
            )
            if [[id(i) for i in f] for f in aware] != plain:
                reductions_ok = False
    ok = mismatches == 0 and reductions_ok
    announce(
        capsys, 8, ok,
        f"500 random populations match the brute-force dominance oracle "
        f"({mismatches} mismatches), defect-aware sort reduces to plain "
        "sort for empty and total buggy sets",
    )


# --- 9: determinism -------------------------------------------------------


def test_criterion_9_determinism(capsys, tmp_path):
    config = ExperimentConfig(
        corpus_root=str(ROOT),
        approaches=(
            ApproachSpec("baseline"),
            ApproachSpec("sbst_cl", PredictorSpec("simulated", 0.5),
                         label="cl_sim"),
        ),
        per_class_factor=60,
        runs=2,
        base_seed=BASE_SEED,
        programs=("ledger", "router"),
    )
    blobs = []
    for tag, workers in (("first", 1), ("second", 1), ("pooled", 2)):
        result = run_experiment(config, workers=workers)
        out = tmp_path / tag
        emit_report(result, out)
        blobs.append((out / "detections.csv").read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2] and len(blobs[0]) > 0
    announce(
        capsys, 9, ok,
        "run matrices byte-identical across two invocations and across "
        f"worker counts 1 and 2 ({len(blobs[0])} bytes)",
    )
