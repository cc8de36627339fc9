"""Seeded-bug benchmark: programs, bug manifests, commit histories.

A corpus directory holds `programs/*.mini`, one JSON manifest per bug
under `manifests/`, and per-program JSON-lines commit histories under
`history/`. Loading cross-checks every reference structurally; witness
execution is validation's job so a corpus with a stale witness still
loads and shows up as a failing report entry instead of an exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .executor import TestCase, execute
from .minilang import MiniLangError, parse_program
from .minilang.nodes import SubjectProgram
from .predict import HistoryRecord


class CorpusError(Exception):
    """A corpus file is missing, unparseable, or references unknown units."""


@dataclass(frozen=True)
class BugManifest:
    bug_id: str
    program: str
    defective_class: str
    defective_methods: tuple[str, ...]
    witness: TestCase
    description: str


@dataclass(frozen=True)
class ValidationEntry:
    bug_id: str
    passed: bool
    detail: str


@dataclass
class Corpus:
    root: Path
    programs: dict[str, SubjectProgram] = field(default_factory=dict)
    manifests: list[BugManifest] = field(default_factory=list)
    histories: dict[str, list[HistoryRecord]] = field(default_factory=dict)

    def program_for(self, manifest: BugManifest) -> SubjectProgram:
        return self.programs[Path(manifest.program).stem]

    def manifests_for(self, program_name: str) -> list[BugManifest]:
        return [
            m for m in self.manifests if Path(m.program).stem == program_name
        ]


def builtin_corpus_root() -> Path:
    """Directory of the corpus shipped inside the package."""
    return Path(resources.files("sbst") / "corpus_data")


def _load_manifest(path: Path, programs: dict[str, SubjectProgram]) -> BugManifest:
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CorpusError(f"manifest {path.name}: invalid JSON ({exc})") from exc
    try:
        witness_raw = raw["witness"]
        manifest = BugManifest(
            bug_id=raw["bug_id"],
            program=raw["program"],
            defective_class=raw["defective_class"],
            defective_methods=tuple(raw["defective_methods"]),
            witness=TestCase(
                witness_raw["class"],
                witness_raw["method"],
                tuple(witness_raw["args"]),
            ),
            description=raw.get("description", ""),
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"manifest {path.name}: missing field ({exc})") from exc

    prog_name = Path(manifest.program).stem
    program = programs.get(prog_name)
    if program is None:
        raise CorpusError(
            f"manifest {path.name}: references unknown program {manifest.program!r}"
        )
    class_names = {c.name for c in program.classes}
    if manifest.defective_class not in class_names:
        raise CorpusError(
            f"manifest {path.name}: unknown class {manifest.defective_class!r}"
        )
    cls = program.class_unit(manifest.defective_class)
    known_methods = set(cls.method_names())
    for meth in manifest.defective_methods:
        if meth not in known_methods:
            raise CorpusError(
                f"manifest {path.name}: unknown method "
                f"{manifest.defective_class}.{meth}"
            )
    if manifest.witness.class_name not in class_names:
        raise CorpusError(
            f"manifest {path.name}: witness class {manifest.witness.class_name!r}"
            " not in program"
        )
    wcls = program.class_unit(manifest.witness.class_name)
    if manifest.witness.method_name not in set(wcls.method_names()):
        raise CorpusError(
            f"manifest {path.name}: witness method "
            f"{manifest.witness.class_name}.{manifest.witness.method_name}"
            " not in program"
        )
    return manifest


def _load_history(path: Path, program: SubjectProgram) -> list[HistoryRecord]:
    records = []
    class_names = {c.name for c in program.classes}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            record = HistoryRecord(
                class_name=raw["class"],
                ts=int(raw["ts"]),
                author=raw["author"],
                fix=bool(raw["fix"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorpusError(
                f"history {path.name}:{lineno}: bad record ({exc})"
            ) from exc
        if record.class_name not in class_names:
            raise CorpusError(
                f"history {path.name}:{lineno}: unknown class "
                f"{record.class_name!r}"
            )
        records.append(record)
    return records


def load_corpus(root: Path | str) -> Corpus:
    """Load and structurally cross-check a corpus directory.

    An empty or partially populated directory is fine; what exists must
    be consistent. Witness behaviour is NOT checked here.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"corpus root {root} is not a directory")

    programs: dict[str, SubjectProgram] = {}
    prog_dir = root / "programs"
    if prog_dir.is_dir():
        for path in sorted(prog_dir.glob("*.mini")):
            try:
                program = parse_program(path.read_text())
            except MiniLangError as exc:
                raise CorpusError(f"program {path.name}: {exc}") from exc
            programs[path.stem] = program

    manifests: list[BugManifest] = []
    seen_ids: set[str] = set()
    man_dir = root / "manifests"
    if man_dir.is_dir():
        for path in sorted(man_dir.glob("*.json")):
            manifest = _load_manifest(path, programs)
            if manifest.bug_id in seen_ids:
                raise CorpusError(
                    f"manifest {path.name}: duplicate bug id {manifest.bug_id!r}"
                )
            seen_ids.add(manifest.bug_id)
            manifests.append(manifest)

    histories: dict[str, list[HistoryRecord]] = {}
    hist_dir = root / "history"
    if hist_dir.is_dir():
        for path in sorted(hist_dir.glob("*.jsonl")):
            program = programs.get(path.stem)
            if program is None:
                raise CorpusError(
                    f"history {path.name}: no program named {path.stem!r}"
                )
            histories[path.stem] = _load_history(path, program)

    return Corpus(root=root, programs=programs, manifests=manifests, histories=histories)


def validate_corpus(corpus: Corpus) -> list[ValidationEntry]:
    """Execute every witness; report per bug whether it hits exactly its trap."""
    report = []
    for manifest in corpus.manifests:
        program = corpus.program_for(manifest)
        trace = execute(program, manifest.witness)
        hit = trace.traps_hit
        if hit == {manifest.bug_id}:
            report.append(ValidationEntry(manifest.bug_id, True, "witness hits trap"))
        elif manifest.bug_id in hit:
            report.append(
                ValidationEntry(
                    manifest.bug_id,
                    False,
                    f"witness also hits {sorted(hit - {manifest.bug_id})}",
                )
            )
        else:
            report.append(
                ValidationEntry(
                    manifest.bug_id,
                    False,
                    f"witness hits {sorted(hit) or 'nothing'}, not its trap",
                )
            )
    return report
