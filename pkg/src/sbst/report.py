"""Experiment result persistence and report rendering.

Results round-trip through a single result.json archive. Reports are a
set of delimited files (per-run detections, per-bug statistics, budget
plans, search records), a plain-text summary, and a couple of rendered
figures. All outputs are byte-stable for identical results so reports
can be regenerated and diffed.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .allocate import BudgetPlan
from .harness import (
    Comparison,
    ExperimentResult,
    SearchRecord,
    config_from_dict,
    config_to_dict,
)
from .stats import RunMatrix, a12, mann_whitney_u

RESULT_FILE = "result.json"


# --- persistence ----------------------------------------------------------


def result_to_dict(result: ExperimentResult) -> dict:
    return {
        "config": config_to_dict(result.config),
        "matrices": {
            label: {
                bug: [1 if hit else 0 for hit in outcomes]
                for bug, outcomes in matrix.detections.items()
            }
            for label, matrix in result.matrices.items()
        },
        "plans": [
            {
                "approach": approach,
                "program": program,
                "run": run,
                **plan.as_json_dict(),
            }
            for (approach, program, run), plan in result.plans.items()
        ],
        "records": [
            {
                "approach": r.approach,
                "program": r.program,
                "run": r.run,
                "class": r.class_name,
                "seed": r.seed,
                "budget": r.budget,
                "evaluations": r.evaluations,
                "generations": r.generations,
                "coverage": r.coverage,
                "traps_hit": list(r.traps_hit),
            }
            for r in result.records
        ],
        "comparisons": [
            {
                "approach_a": c.approach_a,
                "approach_b": c.approach_b,
                "u_statistic": c.u_statistic,
                "p_value": c.p_value,
                "a12": c.a12,
                "mean_a": c.mean_a,
                "mean_b": c.mean_b,
                "only_a": list(c.only_a),
                "only_b": list(c.only_b),
                "both": list(c.both),
            }
            for c in result.comparisons
        ],
        "success_rates": result.success_rates,
        "skipped": result.skipped,
    }


def result_from_dict(data: dict) -> ExperimentResult:
    config = config_from_dict(data["config"])
    order = [a.label for a in config.approaches]
    matrices = {
        label: RunMatrix(
            label,
            {
                bug: tuple(bool(v) for v in outcomes)
                for bug, outcomes in sorted(data["matrices"][label].items())
            },
        )
        for label in order
    }
    plans = {}
    for entry in data["plans"]:
        key = (entry["approach"], entry["program"], entry["run"])
        plans[key] = BudgetPlan(
            total=entry["total"],
            per_class=dict(entry["per_class"]),
            lower_bound=entry["lower_bound"],
            sharpness=entry["sharpness"],
        )
    records = tuple(
        SearchRecord(
            approach=r["approach"],
            program=r["program"],
            run=r["run"],
            class_name=r["class"],
            seed=r["seed"],
            budget=r["budget"],
            evaluations=r["evaluations"],
            generations=r["generations"],
            coverage=r["coverage"],
            traps_hit=tuple(r["traps_hit"]),
        )
        for r in data["records"]
    )
    comparisons = tuple(
        Comparison(
            approach_a=c["approach_a"],
            approach_b=c["approach_b"],
            u_statistic=c["u_statistic"],
            p_value=c["p_value"],
            a12=c["a12"],
            mean_a=c["mean_a"],
            mean_b=c["mean_b"],
            only_a=tuple(c["only_a"]),
            only_b=tuple(c["only_b"]),
            both=tuple(c["both"]),
        )
        for c in data["comparisons"]
    )
    return ExperimentResult(
        config=config,
        matrices=matrices,
        plans=plans,
        records=records,
        comparisons=comparisons,
        success_rates={
            label: dict(rates)
            for label, rates in data["success_rates"].items()
        },
        skipped=dict(data["skipped"]),
    )


def save_result(result: ExperimentResult, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(result_to_dict(result), indent=2, sort_keys=True)
    path.write_text(text + "\n")
    return path


def load_result(path: Path | str) -> ExperimentResult:
    path = Path(path)
    if path.is_dir():
        path = path / RESULT_FILE
    return result_from_dict(json.loads(path.read_text()))


# --- delimited output -----------------------------------------------------


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _labels(result: ExperimentResult) -> list[str]:
    return [a.label for a in result.config.approaches]


def _bugs(result: ExperimentResult) -> list[str]:
    for matrix in result.matrices.values():
        return sorted(matrix.bug_ids())
    return []


def _detection_rows(result: ExperimentResult) -> list[list]:
    rows = []
    for label in _labels(result):
        matrix = result.matrices[label]
        for bug in sorted(matrix.detections):
            for run, hit in enumerate(matrix.detections[bug]):
                rows.append([label, bug, run, int(hit)])
    return rows


def _per_bug_test_rows(result: ExperimentResult) -> list[list]:
    """Pairwise tests on the per-run {0,1} detection samples of each bug."""
    rows = []
    labels = _labels(result)
    for i, la in enumerate(labels):
        for lb in labels[i + 1:]:
            ma, mb = result.matrices[la], result.matrices[lb]
            for bug in _bugs(result):
                sa = ma.detection_sample(bug)
                sb = mb.detection_sample(bug)
                u, p = mann_whitney_u(sa, sb)
                rows.append([bug, la, lb, u, p, a12(sa, sb)])
    return rows


def _plan_rows(result: ExperimentResult) -> list[list]:
    rows = []
    for (approach, program, run), plan in sorted(result.plans.items()):
        for class_name in sorted(plan.per_class):
            rows.append([
                approach, program, run, class_name,
                plan.per_class[class_name], plan.total,
            ])
    return rows


def _record_rows(result: ExperimentResult) -> list[list]:
    return [
        [
            r.approach, r.program, r.run, r.class_name, r.seed, r.budget,
            r.evaluations, r.generations, r.coverage, ";".join(r.traps_hit),
        ]
        for r in result.records
    ]


# --- summary --------------------------------------------------------------


def _format_summary(result: ExperimentResult) -> str:
    config = result.config
    labels = _labels(result)
    bugs = _bugs(result)
    lines: list[str] = []
    out = lines.append

    out("experiment summary")
    out("==================")
    out(f"corpus: {config.corpus_root}")
    out(
        f"budget: {config.per_class_factor:g} {config.budget_kind} per class"
        " (total = factor * class count)"
    )
    out(f"runs per approach: {config.runs}")
    out(f"base seed: {config.base_seed}")
    out(f"bugs in scope: {len(bugs)}")
    out("")

    out("approach totals")
    out("---------------")
    width = max((len(l) for l in labels), default=8)
    for label in labels:
        matrix = result.matrices[label]
        per_run = matrix.bugs_per_run()
        mean = sum(per_run) / len(per_run) if per_run else 0.0
        out(
            f"{label:<{width}}  mean bugs/run {mean:6.2f}   "
            f"detected ever {len(matrix.detected_bugs()):3d} / {len(bugs)}"
        )
    out("")

    if result.comparisons:
        out("pairwise comparisons (bugs per run)")
        out("-----------------------------------")
        for c in result.comparisons:
            out(
                f"{c.approach_a} vs {c.approach_b}: "
                f"mean {c.mean_a:.2f} vs {c.mean_b:.2f}, "
                f"U = {c.u_statistic:g}, p = {c.p_value:.4f}, "
                f"A12 = {c.a12:.3f}"
            )
            out(f"  only {c.approach_a}: {', '.join(c.only_a) or '-'}")
            out(f"  only {c.approach_b}: {', '.join(c.only_b) or '-'}")
            out(f"  both: {', '.join(c.both) or '-'}")
        out("")

    if bugs:
        out("success rates")
        out("-------------")
        bug_width = max(len(b) for b in bugs)
        header = " ".join(f"{l:>{max(len(l), 5)}}" for l in labels)
        out(f"{'bug':<{bug_width}}  {header}")
        for bug in bugs:
            cells = " ".join(
                f"{result.success_rates[l].get(bug, 0.0):>{max(len(l), 5)}.2f}"
                for l in labels
            )
            out(f"{bug:<{bug_width}}  {cells}")
        out("")

    if result.skipped:
        out("skipped programs")
        out("----------------")
        for program in sorted(result.skipped):
            out(f"{program}: {result.skipped[program]}")
        out("")

    return "\n".join(lines)


# --- figures --------------------------------------------------------------

_PNG_METADATA = {"Software": "sbst"}


def _render_bugs_per_run(result: ExperimentResult, path: Path) -> None:
    labels = _labels(result)
    data = [result.matrices[l].bugs_per_run() for l in labels]
    fig, ax = plt.subplots(figsize=(1.8 + 1.4 * len(labels), 4.0))
    ax.boxplot(data, tick_labels=labels)
    ax.set_ylabel("bugs found per run")
    ax.set_title("Detection counts by approach")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def _render_success_rates(result: ExperimentResult, path: Path) -> None:
    labels = _labels(result)
    bugs = _bugs(result)
    grid = [
        [result.success_rates[l].get(bug, 0.0) for l in labels]
        for bug in bugs
    ]
    fig, ax = plt.subplots(
        figsize=(2.0 + 1.1 * len(labels), 1.2 + 0.28 * len(bugs))
    )
    image = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(labels)), labels, rotation=30, ha="right")
    ax.set_yticks(range(len(bugs)), bugs, fontsize=7)
    ax.set_title("Per-bug success rate")
    fig.colorbar(image, ax=ax, label="success rate")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


# --- entry point ----------------------------------------------------------


def emit_report(result: ExperimentResult, out: Path | str) -> list[Path]:
    """Write delimited files, a text summary, and figures under `out`.

    Returns the written paths. Output bytes depend only on the result
    content, so regenerating a report from the same archive is a no-op
    diff-wise.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def csv_file(name: str, header: list[str], rows: list[list]) -> None:
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)

    csv_file(
        "detections.csv",
        ["approach", "bug", "run", "detected"],
        _detection_rows(result),
    )
    csv_file(
        "success_rates.csv",
        ["bug", "approach", "rate"],
        [
            [bug, label, result.success_rates[label].get(bug, 0.0)]
            for bug in _bugs(result)
            for label in _labels(result)
        ],
    )
    csv_file(
        "per_bug_tests.csv",
        ["bug", "approach_a", "approach_b", "u_statistic", "p_value", "a12"],
        _per_bug_test_rows(result),
    )
    csv_file(
        "comparisons.csv",
        [
            "approach_a", "approach_b", "mean_a", "mean_b",
            "u_statistic", "p_value", "a12", "only_a", "only_b", "both",
        ],
        [
            [
                c.approach_a, c.approach_b, c.mean_a, c.mean_b,
                c.u_statistic, c.p_value, c.a12,
                ";".join(c.only_a), ";".join(c.only_b), ";".join(c.both),
            ]
            for c in result.comparisons
        ],
    )
    csv_file(
        "plans.csv",
        ["approach", "program", "run", "class", "budget", "total"],
        _plan_rows(result),
    )
    csv_file(
        "search_records.csv",
        [
            "approach", "program", "run", "class", "seed", "budget",
            "evaluations", "generations", "coverage", "traps_hit",
        ],
        _record_rows(result),
    )

    summary = out / "summary.txt"
    summary.write_text(_format_summary(result))
    written.append(summary)

    if _bugs(result):
        figures = out / "figures"
        figures.mkdir(exist_ok=True)
        box = figures / "bugs_per_run.png"
        _render_bugs_per_run(result, box)
        written.append(box)
        heat = figures / "success_rates.png"
        _render_success_rates(result, heat)
        written.append(heat)

    return written
