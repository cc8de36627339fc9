"""Difficulty probe for corpus programs.

Runs the search engine over one class at several budgets and reports
per-trap hit rates and coverage, so bug difficulty can be tuned before
a program is frozen into the corpus.

Usage:
    python3 tools/probe.py path/to/prog.mini ClassName \
        --budgets 150,600,2600 --runs 20 [--pop 50] [--guidance defect-aware]
"""

import argparse
import pathlib
import statistics
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from sbst.minilang import class_targets, parse_program, trap_guards
from sbst.search import SearchConfig, generate_tests


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("program")
    ap.add_argument("class_name")
    ap.add_argument("--budgets", default="150,300,600,1200,2600")
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--pop", type=int, default=50)
    ap.add_argument("--guidance", default="none")
    ap.add_argument("--buggy-methods", default="")
    args = ap.parse_args()

    program = parse_program(pathlib.Path(args.program).read_text())
    cls = program.class_unit(args.class_name)
    n_targets = len(class_targets(cls))
    guards = {
        bug: tid
        for bug, tid in trap_guards(program).items()
        if tid is None or tid.startswith(args.class_name + ".")
    }
    traps = sorted(guards)
    print(f"{args.class_name}: {n_targets} targets, traps {traps}")

    method_scores = None
    if args.guidance == "defect-aware":
        buggy = set(args.buggy_methods.split(",")) if args.buggy_methods else set()
        method_scores = {
            m: (0.9 if m in buggy else 0.1) for m in cls.method_names()
        }

    for budget in [int(b) for b in args.budgets.split(",")]:
        full = 0
        hits = {t: 0 for t in traps}
        evals_used = []
        for seed in range(args.runs):
            config = SearchConfig(
                population_size=args.pop,
                seed=seed,
                guidance=args.guidance,
            )
            suite, stats = generate_tests(
                program, args.class_name, budget, config,
                method_scores=method_scores,
            )
            if stats.coverage >= 1.0:
                full += 1
            seen = set()
            for entry in suite:
                seen |= set(entry.traps_hit)
            for t in traps:
                if t in seen:
                    hits[t] += 1
            evals_used.append(stats.evaluations)
        med = statistics.median(evals_used)
        rate = " ".join(f"{t}={hits[t]}/{args.runs}" for t in traps)
        print(f"  budget {budget:6d}: full-cov {full}/{args.runs}  "
              f"median-evals {med:.0f}  {rate}")


if __name__ == "__main__":
    main()
