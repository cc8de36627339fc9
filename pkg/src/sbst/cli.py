"""Command-line interface.

Subcommands:
  validate            check every bug manifest witness against its trap
  gen                 generate tests for one class of a program file
  simulate-predictor  realise a defect predictor at a target MCC
  experiment          run a configured experiment and write reports
  report              re-render report files from a result archive

Exit codes: 0 on success, 1 when validation fails (corpus, program, or
input files), 2 when a configuration is infeasible or malformed. The
SBST_WORKERS environment variable bounds experiment parallelism.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .corpus import (
    CorpusError,
    builtin_corpus_root,
    load_corpus,
    validate_corpus,
)
from .harness import config_from_dict, run_experiment
from .minilang import MiniLangError, parse_program
from .predict import mcc, simulate_predictor
from .report import RESULT_FILE, emit_report, load_result, save_result
from .search import GUIDANCE_DEFECT_AWARE, GUIDANCE_NONE, SearchConfig, generate_tests


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbst",
        description="defect-prediction-guided search-based test generation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "validate", help="validate a bug corpus (default: the shipped one)"
    )
    p.add_argument(
        "corpus", nargs="?", default=None,
        help="corpus root directory; omit for the built-in corpus",
    )

    p = sub.add_parser("gen", help="generate tests for one class")
    p.add_argument("program", help="path to a program source file")
    p.add_argument("--class", dest="class_name", required=True,
                   help="class to cover")
    p.add_argument("--budget", type=int, required=True,
                   help="evaluation budget")
    p.add_argument("--guidance", choices=[GUIDANCE_NONE, GUIDANCE_DEFECT_AWARE],
                   default=GUIDANCE_NONE)
    p.add_argument("--scores", default=None,
                   help="JSON file mapping method names to defect scores "
                        "(required with defect-aware guidance)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser(
        "simulate-predictor",
        help="realise a simulated defect predictor at a target MCC",
    )
    p.add_argument("--mcc", type=float, required=True, help="target MCC")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--units", type=int, default=10,
                   help="number of synthetic units (ignored with --program)")
    p.add_argument("--defective", type=int, default=None,
                   help="defective unit count, default ceil(units / 5)")
    p.add_argument("--corpus", default=None,
                   help="corpus root to read a real program from")
    p.add_argument("--program", default=None,
                   help="score this corpus program's classes instead of "
                        "synthetic units")

    p = sub.add_parser("experiment", help="run a configured experiment")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", default="experiment-out",
                   help="output directory for the result archive and report")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes, default SBST_WORKERS or CPU count")

    p = sub.add_parser("report", help="re-render reports from a result dir")
    p.add_argument("resultdir", help=f"directory containing {RESULT_FILE}")
    p.add_argument("--out", default=None,
                   help="where to write report files, default the result dir")

    return parser


def _cmd_validate(args) -> int:
    root = Path(args.corpus) if args.corpus else builtin_corpus_root()
    corpus = load_corpus(root)
    entries = validate_corpus(corpus)
    for entry in entries:
        status = "PASS" if entry.passed else "FAIL"
        print(f"{status}  {entry.bug_id}: {entry.detail}")
    passed = sum(1 for e in entries if e.passed)
    print(f"{passed} / {len(entries)} manifests validated")
    return 0 if passed == len(entries) else 1


def _cmd_gen(args) -> int:
    source = Path(args.program).read_text()
    program = parse_program(source)
    method_scores = None
    if args.scores is not None:
        method_scores = json.loads(Path(args.scores).read_text())
        if not isinstance(method_scores, dict):
            raise ValueError("scores file must map method names to numbers")
    if args.guidance == GUIDANCE_DEFECT_AWARE and method_scores is None:
        raise ValueError("defect-aware guidance needs --scores")
    config = SearchConfig(seed=args.seed, guidance=args.guidance)
    suite, stats = generate_tests(
        program, args.class_name, args.budget, config, method_scores
    )
    for entry in suite:
        call = ", ".join(str(a) for a in entry.test.args)
        print(f"{entry.test.class_name}.{entry.test.method_name}({call})")
    print(
        f"# coverage {stats.coverage:.1%} "
        f"({len(stats.covered)} targets) in {stats.evaluations} evaluations"
    )
    if stats.traps_hit:
        print(f"# traps hit: {', '.join(sorted(stats.traps_hit))}")
    return 0


def _cmd_simulate_predictor(args) -> int:
    if args.program is not None:
        root = Path(args.corpus) if args.corpus else builtin_corpus_root()
        corpus = load_corpus(root)
        if args.program not in corpus.programs:
            raise CorpusError(f"unknown program {args.program!r}")
        units = corpus.programs[args.program].class_names()
        defective = {
            m.defective_class for m in corpus.manifests_for(args.program)
        }
    else:
        if args.units < 1:
            raise ValueError("--units must be positive")
        count = args.defective
        if count is None:
            count = math.ceil(args.units / 5)
        if not 0 <= count <= args.units:
            raise ValueError("--defective must lie in [0, units]")
        units = [f"unit{i:03d}" for i in range(args.units)]
        defective = set(units[:count])

    out = simulate_predictor(units, defective, args.mcc, args.seed)
    m = out.realized
    print(f"target MCC {args.mcc:+.3f}  realized {mcc(m):+.3f}")
    print(f"confusion: tp={m.tp} fp={m.fp} tn={m.tn} fn={m.fn}")
    for unit in units:
        truth = "defective" if unit in defective else "clean"
        predicted = "defective" if out.labels[unit] else "clean"
        print(f"{unit}  truth={truth:<9}  predicted={predicted:<9}  "
              f"score={out.scores[unit]:.3f}")
    return 0


def _cmd_experiment(args) -> int:
    data = json.loads(Path(args.config).read_text())
    config = config_from_dict(data)
    result = run_experiment(config, workers=args.workers)
    out = Path(args.out)
    save_result(result, out / RESULT_FILE)
    emit_report(result, out)
    for label, matrix in result.matrices.items():
        per_run = matrix.bugs_per_run()
        mean = sum(per_run) / len(per_run) if per_run else 0.0
        print(f"{label}: mean bugs/run {mean:.2f}, "
              f"detected {len(matrix.detected_bugs())} bugs")
    for c in result.comparisons:
        print(f"{c.approach_a} vs {c.approach_b}: "
              f"p = {c.p_value:.4f}, A12 = {c.a12:.3f}")
    for program, reason in sorted(result.skipped.items()):
        print(f"skipped {program}: {reason}")
    print(f"report written to {out}")
    return 0


def _cmd_report(args) -> int:
    result = load_result(Path(args.resultdir))
    out = Path(args.out) if args.out else Path(args.resultdir)
    written = emit_report(result, out)
    for path in written:
        print(path)
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "gen": _cmd_gen,
    "simulate-predictor": _cmd_simulate_predictor,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CorpusError, MiniLangError, OSError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # covers infeasible budgets, degenerate predictors, bad configs
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
