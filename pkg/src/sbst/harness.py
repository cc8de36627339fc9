"""Experiment orchestration over the seeded-bug corpus.

Binds defect predictors, budget allocation, and the search engine into
named pipelines (baseline, score-driven allocation, defect-aware
guidance, or both), runs them for R seeded repetitions per program, and
collects per-bug detection matrices plus comparison statistics.

Seeding is split by role. Search seeds depend only on (program, run,
class), never on the approach, so two approaches facing the same class
with the same budget run the identical search and differ only where
their pipelines actually differ. Predictor seeds do include the approach
label, so simulated mispredictions are drawn independently per arm.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .allocate import BudgetPlan, allocate_budget
from .corpus import Corpus, CorpusError, load_corpus, validate_corpus
from .predict import simulate_predictor, twr_scores
from .search import (
    GUIDANCE_DEFECT_AWARE,
    GUIDANCE_NONE,
    SearchConfig,
    generate_tests,
)
from .stats import RunMatrix, a12, mann_whitney_u, success_rate, unique_bugs

APPROACH_NAMES = ("baseline", "sbst_cl", "sbst_ml", "sbst_cl+ml")
PREDICTOR_KINDS = ("ideal", "simulated", "twr")

# ideal method scores sit on either side of the default buggy threshold
IDEAL_DEFECTIVE_METHOD_SCORE = 0.9
IDEAL_CLEAN_METHOD_SCORE = 0.1


class InfeasibleBudgetError(ValueError):
    """Raised when a budget rule cannot fund every class at its floor."""


@dataclass(frozen=True)
class PredictorSpec:
    """Which defect scores an approach consumes.

    kind "ideal" reads ground truth from the bug manifests, "simulated"
    degrades ground truth to a target MCC, and "twr" scores classes from
    the commit history (class level only).
    """

    kind: str
    target_mcc: float | None = None

    def __post_init__(self):
        if self.kind not in PREDICTOR_KINDS:
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if self.kind == "simulated":
            if self.target_mcc is None:
                raise ValueError("simulated predictor needs a target_mcc")
            if not -1.0 <= self.target_mcc <= 1.0:
                raise ValueError("target_mcc must lie in [-1, 1]")
        elif self.target_mcc is not None:
            raise ValueError("target_mcc only applies to simulated predictors")


@dataclass(frozen=True)
class ApproachSpec:
    """One pipeline arm: a canonical approach name plus its predictor.

    `label` names the arm in results and defaults to the approach name;
    give explicit labels to run the same approach twice with different
    predictors in one experiment.
    """

    name: str
    predictor: PredictorSpec | None = None
    label: str = ""

    def __post_init__(self):
        if self.name not in APPROACH_NAMES:
            raise ValueError(f"unknown approach {self.name!r}")
        if not self.label:
            object.__setattr__(self, "label", self.name)
        if self.name == "baseline":
            if self.predictor is not None:
                raise ValueError("baseline takes no predictor")
        elif self.predictor is None:
            raise ValueError(f"approach {self.name!r} needs a predictor spec")
        if self.uses_method_scores and self.predictor.kind == "twr":
            raise ValueError(
                "history-based scores are class-level; method-guided "
                "approaches need an ideal or simulated predictor"
            )

    @property
    def uses_class_scores(self) -> bool:
        return self.name in ("sbst_cl", "sbst_cl+ml")

    @property
    def uses_method_scores(self) -> bool:
        return self.name in ("sbst_ml", "sbst_cl+ml")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment.

    The total budget for a program with N classes is per_class_factor
    * N, in the chosen budget unit. `programs` restricts the experiment
    to a subset of corpus programs; None means all of them.
    """

    corpus_root: str
    approaches: tuple[ApproachSpec, ...]
    per_class_factor: float = 600.0
    runs: int = 20
    base_seed: int = 0
    sharpness: float = 6.0
    lower_bound: float | None = None
    buggy_threshold: float = 0.5
    budget_kind: str = "evaluations"
    programs: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "corpus_root", str(self.corpus_root))
        object.__setattr__(self, "approaches", tuple(self.approaches))
        if self.programs is not None:
            object.__setattr__(self, "programs", tuple(self.programs))
        if not self.approaches:
            raise ValueError("experiment needs at least one approach")
        labels = [a.label for a in self.approaches]
        if len(set(labels)) != len(labels):
            raise ValueError(f"approach labels must be unique, got {labels}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.per_class_factor <= 0:
            raise ValueError("per_class_factor must be positive")
        if self.sharpness <= 0:
            raise ValueError("sharpness must be positive")
        if self.lower_bound is not None and self.lower_bound < 0:
            raise ValueError("lower_bound must be non-negative")
        if not 0.0 <= self.buggy_threshold <= 1.0:
            raise ValueError("buggy_threshold must lie in [0, 1]")
        if self.budget_kind not in ("evaluations", "seconds"):
            raise ValueError(f"unknown budget kind {self.budget_kind!r}")


@dataclass(frozen=True)
class SearchRecord:
    """Outcome of one class search inside one (approach, program, run)."""

    approach: str
    program: str
    run: int
    class_name: str
    seed: int
    budget: float
    evaluations: int
    generations: int
    coverage: float
    traps_hit: tuple[str, ...]


@dataclass(frozen=True)
class Comparison:
    """Pairwise statistics between two arms on bugs-found-per-run."""

    approach_a: str
    approach_b: str
    u_statistic: float
    p_value: float
    a12: float
    mean_a: float
    mean_b: float
    only_a: tuple[str, ...]
    only_b: tuple[str, ...]
    both: tuple[str, ...]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    matrices: dict[str, RunMatrix]
    plans: dict[tuple[str, str, int], BudgetPlan]
    records: tuple[SearchRecord, ...]
    comparisons: tuple[Comparison, ...]
    success_rates: dict[str, dict[str, float]]
    skipped: dict[str, str]

    def matrix(self, label: str) -> RunMatrix:
        return self.matrices[label]


def derive_seed(base: int, *parts: object) -> int:
    """Stable 64-bit seed from the base seed and a role path."""
    h = hashlib.sha256()
    h.update(str(int(base)).encode())
    for part in parts:
        h.update(b"\x00")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "big")


def search_seed(base: int, program: str, run: int, class_name: str) -> int:
    # approach deliberately absent: arms share search randomness
    return derive_seed(base, "search", program, run, class_name)


def predictor_seed(
    base: int, label: str, program: str, run: int, level: str
) -> int:
    return derive_seed(base, "predictor", label, program, run, level)


# --- predictor realisations -----------------------------------------------


def _defective_classes(corpus: Corpus, program: str) -> set[str]:
    return {m.defective_class for m in corpus.manifests_for(program)}


def _defective_methods(corpus: Corpus, program: str) -> set[str]:
    """Defective units as 'Class.method' strings."""
    out: set[str] = set()
    for m in corpus.manifests_for(program):
        for meth in m.defective_methods:
            out.add(f"{m.defective_class}.{meth}")
    return out


def _method_units(corpus: Corpus, program: str) -> list[str]:
    prog = corpus.programs[program]
    return [
        f"{cls.name}.{meth}"
        for cls in prog.classes
        for meth in cls.method_names()
    ]


def ideal_class_scores(corpus: Corpus, program: str) -> dict[str, float]:
    defective = _defective_classes(corpus, program)
    return {
        c: 1.0 if c in defective else 0.0
        for c in corpus.programs[program].class_names()
    }


def ideal_method_scores(
    corpus: Corpus, program: str
) -> dict[str, dict[str, float]]:
    """Per-class method score maps from manifest ground truth."""
    defective = _defective_methods(corpus, program)
    out: dict[str, dict[str, float]] = {}
    for cls in corpus.programs[program].classes:
        out[cls.name] = {
            meth: IDEAL_DEFECTIVE_METHOD_SCORE
            if f"{cls.name}.{meth}" in defective
            else IDEAL_CLEAN_METHOD_SCORE
            for meth in cls.method_names()
        }
    return out


def history_class_scores(corpus: Corpus, program: str) -> dict[str, float]:
    """Time-weighted risk scores; classes without events score zero.

    "Now" is pinned to the newest event in the program's history so the
    scores are a pure function of the shipped data.
    """
    history = corpus.histories.get(program, [])
    names = corpus.programs[program].class_names()
    if not history:
        return {c: 0.0 for c in names}
    now = max(r.ts for r in history)
    raw = twr_scores(history, now)
    return {c: raw.get(c, 0.0) for c in names}


def _simulated_class_scores(
    corpus: Corpus, program: str, target_mcc: float, seed: int
) -> dict[str, float]:
    units = corpus.programs[program].class_names()
    out = simulate_predictor(
        units, _defective_classes(corpus, program), target_mcc, seed
    )
    return out.scores


def _simulated_method_scores(
    corpus: Corpus, program: str, target_mcc: float, seed: int
) -> dict[str, dict[str, float]]:
    units = _method_units(corpus, program)
    out = simulate_predictor(
        units,
        _defective_methods(corpus, program),
        target_mcc,
        seed,
        level="method",
    )
    sliced: dict[str, dict[str, float]] = {}
    for cls in corpus.programs[program].classes:
        sliced[cls.name] = {
            meth: out.scores[f"{cls.name}.{meth}"]
            for meth in cls.method_names()
        }
    return sliced


def _degenerate_reasons(
    corpus: Corpus, program: str, approach: ApproachSpec
) -> list[str]:
    """Why a simulated predictor cannot run on this program, if at all.

    Mirrors the simulator's own rejection rule (no defective units, or
    nothing but defective units) so the decision can be made before any
    search budget is spent.
    """
    pred = approach.predictor
    if pred is None or pred.kind != "simulated":
        return []
    reasons = []
    if approach.uses_class_scores:
        units = corpus.programs[program].class_names()
        d = len(_defective_classes(corpus, program))
        if d in (0, len(units)):
            reasons.append(
                f"{approach.label}: class-level simulated predictor is "
                f"degenerate ({d} of {len(units)} classes defective)"
            )
    if approach.uses_method_scores:
        units = _method_units(corpus, program)
        d = sum(1 for u in units if u in _defective_methods(corpus, program))
        if d in (0, len(units)):
            reasons.append(
                f"{approach.label}: method-level simulated predictor is "
                f"degenerate ({d} of {len(units)} methods defective)"
            )
    return reasons


# --- worker side ----------------------------------------------------------


@dataclass(frozen=True)
class _ClassJob:
    corpus_root: str
    approach: str
    program: str
    run: int
    class_name: str
    budget: float
    config: SearchConfig
    method_scores: dict[str, float] | None


_corpus_cache: dict[str, Corpus] = {}


def _cached_corpus(root: str) -> Corpus:
    corpus = _corpus_cache.get(root)
    if corpus is None:
        corpus = load_corpus(root)
        _corpus_cache[root] = corpus
    return corpus


def _run_class_job(job: _ClassJob) -> SearchRecord:
    budget: float | int = job.budget
    if job.config.budget_kind == "evaluations":
        budget = int(budget)
    if budget <= 0:
        # a zero floor can starve a class entirely; record the no-op
        return SearchRecord(
            job.approach, job.program, job.run, job.class_name,
            job.config.seed, job.budget, 0, 0, 0.0, (),
        )
    corpus = _cached_corpus(job.corpus_root)
    program = corpus.programs[job.program]
    _, stats = generate_tests(
        program, job.class_name, budget, job.config, job.method_scores
    )
    return SearchRecord(
        job.approach, job.program, job.run, job.class_name, job.config.seed,
        job.budget, stats.evaluations, stats.generations, stats.coverage,
        tuple(sorted(stats.traps_hit)),
    )


# --- orchestration --------------------------------------------------------


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("SBST_WORKERS", "").strip()
        if env:
            workers = int(env)
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError("worker count must be at least 1")
    return workers


def _check_feasible(config: ExperimentConfig, corpus: Corpus,
                    selected: list[str]) -> None:
    needs_allocation = any(a.uses_class_scores for a in config.approaches)
    for program in selected:
        n = len(corpus.programs[program].classes)
        total = config.per_class_factor * n
        if config.budget_kind == "evaluations" and total != int(total):
            raise InfeasibleBudgetError(
                f"per_class_factor {config.per_class_factor} gives "
                f"non-integer total {total} for {program!r} in evaluation mode"
            )
        if not needs_allocation:
            continue
        lb = config.lower_bound
        if lb is None:
            lb = 0.1 * total / n
        if total < n * lb:
            raise InfeasibleBudgetError(
                f"total budget {total} for {program!r} cannot fund "
                f"{n} classes at lower bound {lb}"
            )


def _class_scores_for(
    corpus: Corpus, approach: ApproachSpec, program: str,
    base_seed: int, run: int,
) -> dict[str, float]:
    pred = approach.predictor
    assert pred is not None
    if pred.kind == "ideal":
        return ideal_class_scores(corpus, program)
    if pred.kind == "twr":
        return history_class_scores(corpus, program)
    seed = predictor_seed(base_seed, approach.label, program, run, "class")
    return _simulated_class_scores(corpus, program, pred.target_mcc, seed)


def _method_scores_for(
    corpus: Corpus, approach: ApproachSpec, program: str,
    base_seed: int, run: int,
) -> dict[str, dict[str, float]]:
    pred = approach.predictor
    assert pred is not None
    if pred.kind == "ideal":
        return ideal_method_scores(corpus, program)
    seed = predictor_seed(base_seed, approach.label, program, run, "method")
    return _simulated_method_scores(corpus, program, pred.target_mcc, seed)


def _plan_for(
    corpus: Corpus, config: ExperimentConfig, approach: ApproachSpec,
    program: str, run: int,
) -> BudgetPlan:
    names = corpus.programs[program].class_names()
    total = config.per_class_factor * len(names)
    integral = config.budget_kind == "evaluations"
    if approach.uses_class_scores:
        scores = _class_scores_for(
            corpus, approach, program, config.base_seed, run
        )
        return allocate_budget(
            scores, total, config.lower_bound, config.sharpness, integral
        )
    # uniform arms: equal scores collapse the allocation to total / N,
    # and a zero lower bound keeps them feasible under any config
    return allocate_budget(
        {c: 0.0 for c in names}, total, 0.0, config.sharpness, integral
    )


def run_experiment(
    config: ExperimentConfig, workers: int | None = None
) -> ExperimentResult:
    """Run every (approach, program, run, class) cell and collect results.

    Cells are independent; with more than one worker they execute in a
    process pool and are merged back in a fixed order, so the result is
    identical for any worker count in evaluation mode. Programs whose
    simulated predictor would be degenerate (all or none of the units
    defective) are skipped for every arm, keeping the matrices
    comparable, and the skip reason is recorded.
    """
    workers = _resolve_workers(workers)
    corpus = load_corpus(config.corpus_root)
    failures = [e for e in validate_corpus(corpus) if not e.passed]
    if failures:
        first = failures[0]
        raise CorpusError(
            f"corpus failed validation: {first.bug_id}: {first.detail}"
        )

    skipped: dict[str, str] = {}
    if config.programs is None:
        selected = sorted(corpus.programs)
    else:
        for p in config.programs:
            if p not in corpus.programs:
                raise CorpusError(f"unknown program {p!r} in experiment config")
        selected = sorted(set(config.programs))
        for p in sorted(set(corpus.programs) - set(selected)):
            skipped[p] = "excluded by program filter"

    _check_feasible(config, corpus, selected)

    active: list[str] = []
    for program in selected:
        reasons: list[str] = []
        for approach in config.approaches:
            reasons.extend(_degenerate_reasons(corpus, program, approach))
        if reasons:
            skipped[program] = "; ".join(reasons)
        else:
            active.append(program)

    plans: dict[tuple[str, str, int], BudgetPlan] = {}
    jobs: list[_ClassJob] = []
    for approach in config.approaches:
        guidance = (
            GUIDANCE_DEFECT_AWARE if approach.uses_method_scores
            else GUIDANCE_NONE
        )
        for program in active:
            names = corpus.programs[program].class_names()
            for run in range(config.runs):
                plan = _plan_for(corpus, config, approach, program, run)
                plans[(approach.label, program, run)] = plan
                method_scores: dict[str, dict[str, float]] | None = None
                if approach.uses_method_scores:
                    method_scores = _method_scores_for(
                        corpus, approach, program, config.base_seed, run
                    )
                for class_name in names:
                    search_config = SearchConfig(
                        budget_kind=config.budget_kind,
                        seed=search_seed(
                            config.base_seed, program, run, class_name
                        ),
                        guidance=guidance,
                        buggy_threshold=config.buggy_threshold,
                    )
                    jobs.append(_ClassJob(
                        corpus_root=config.corpus_root,
                        approach=approach.label,
                        program=program,
                        run=run,
                        class_name=class_name,
                        budget=plan.per_class[class_name],
                        config=search_config,
                        method_scores=(
                            method_scores[class_name]
                            if method_scores is not None else None
                        ),
                    ))

    if workers == 1 or len(jobs) <= 1:
        records = tuple(_run_class_job(job) for job in jobs)
    else:
        chunk = max(1, len(jobs) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = tuple(pool.map(_run_class_job, jobs, chunksize=chunk))

    hits: dict[tuple[str, str, int], set[str]] = {}
    for rec in records:
        key = (rec.approach, rec.program, rec.run)
        hits.setdefault(key, set()).update(rec.traps_hit)

    active_set = set(active)
    bug_program = {
        m.bug_id: corpus.program_for(m).name for m in corpus.manifests
    }
    universe = sorted(
        bug for bug, prog in bug_program.items() if prog in active_set
    )
    matrices: dict[str, RunMatrix] = {}
    for approach in config.approaches:
        detections = {
            bug: tuple(
                bug in hits.get(
                    (approach.label, bug_program[bug], run), set()
                )
                for run in range(config.runs)
            )
            for bug in universe
        }
        matrices[approach.label] = RunMatrix(approach.label, detections)

    comparisons: list[Comparison] = []
    if universe:
        labels = [a.label for a in config.approaches]
        for i, la in enumerate(labels):
            for lb in labels[i + 1:]:
                ma, mb = matrices[la], matrices[lb]
                sample_a = [float(x) for x in ma.bugs_per_run()]
                sample_b = [float(x) for x in mb.bugs_per_run()]
                u, p = mann_whitney_u(sample_a, sample_b)
                only_a, only_b, both = unique_bugs(ma, mb)
                comparisons.append(Comparison(
                    approach_a=la,
                    approach_b=lb,
                    u_statistic=u,
                    p_value=p,
                    a12=a12(sample_a, sample_b),
                    mean_a=sum(sample_a) / len(sample_a),
                    mean_b=sum(sample_b) / len(sample_b),
                    only_a=tuple(sorted(only_a)),
                    only_b=tuple(sorted(only_b)),
                    both=tuple(sorted(both)),
                ))

    return ExperimentResult(
        config=config,
        matrices=matrices,
        plans=plans,
        records=records,
        comparisons=tuple(comparisons),
        success_rates={
            label: success_rate(m) for label, m in matrices.items()
        },
        skipped=skipped,
    )


# --- declarative config files ---------------------------------------------


def config_to_dict(config: ExperimentConfig) -> dict:
    """Plain-data form of a config, for JSON files and result archives."""
    approaches = []
    for a in config.approaches:
        entry: dict = {"name": a.name}
        if a.label != a.name:
            entry["label"] = a.label
        if a.predictor is not None:
            pred: dict = {"kind": a.predictor.kind}
            if a.predictor.target_mcc is not None:
                pred["target_mcc"] = a.predictor.target_mcc
            entry["predictor"] = pred
        approaches.append(entry)
    return {
        "corpus_root": config.corpus_root,
        "approaches": approaches,
        "per_class_factor": config.per_class_factor,
        "runs": config.runs,
        "base_seed": config.base_seed,
        "sharpness": config.sharpness,
        "lower_bound": config.lower_bound,
        "buggy_threshold": config.buggy_threshold,
        "budget_kind": config.budget_kind,
        "programs": list(config.programs) if config.programs else None,
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    """Parse the declarative config format (inverse of config_to_dict)."""
    if not isinstance(data, dict):
        raise ValueError("experiment config must be a JSON object")
    known = {
        "corpus_root", "approaches", "per_class_factor", "runs", "base_seed",
        "sharpness", "lower_bound", "buggy_threshold", "budget_kind",
        "programs",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "corpus_root" not in data:
        raise ValueError("config needs a corpus_root")
    if "approaches" not in data or not isinstance(data["approaches"], list):
        raise ValueError("config needs an approaches list")

    approaches = []
    for entry in data["approaches"]:
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ValueError(f"bad approach entry: {entry!r}")
        bad = set(entry) - {"name", "label", "predictor"}
        if bad:
            raise ValueError(f"unknown approach keys: {sorted(bad)}")
        predictor = None
        if entry.get("predictor") is not None:
            p = entry["predictor"]
            if not isinstance(p, dict) or "kind" not in p:
                raise ValueError(f"bad predictor entry: {p!r}")
            extra = set(p) - {"kind", "target_mcc"}
            if extra:
                raise ValueError(f"unknown predictor keys: {sorted(extra)}")
            predictor = PredictorSpec(p["kind"], p.get("target_mcc"))
        approaches.append(ApproachSpec(
            name=entry["name"],
            predictor=predictor,
            label=entry.get("label", ""),
        ))

    kwargs = {}
    for key in known - {"corpus_root", "approaches", "programs"}:
        if key in data and data[key] is not None:
            kwargs[key] = data[key]
    programs = data.get("programs")
    return ExperimentConfig(
        corpus_root=data["corpus_root"],
        approaches=tuple(approaches),
        programs=tuple(programs) if programs else None,
        **kwargs,
    )
