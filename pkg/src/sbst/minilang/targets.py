"""Branch target enumeration and control-dependency construction.

Every `if` and `while` predicate contributes two targets, true side then
false side, in source order. A target's parent is the conditional side its
predicate is nested under, so the parent map forms a forest per method.
"""

from __future__ import annotations

from .nodes import (
    Block,
    BranchTarget,
    ClassUnit,
    ControlDependencyGraph,
    If,
    MethodUnit,
    Stmt,
    SubjectProgram,
    Trap,
    While,
    target_id,
)


def _walk_block(
    block: Block,
    cls: str,
    meth: str,
    parent: str | None,
    out: list[BranchTarget],
) -> None:
    for stmt in block.statements:
        _walk_stmt(stmt, cls, meth, parent, out)


def _walk_stmt(
    stmt: Stmt, cls: str, meth: str, parent: str | None, out: list[BranchTarget]
) -> None:
    if isinstance(stmt, If):
        t_id = target_id(stmt.site, True)
        f_id = target_id(stmt.site, False)
        out.append(BranchTarget(t_id, cls, meth, stmt.site, True, parent))
        out.append(BranchTarget(f_id, cls, meth, stmt.site, False, parent))
        _walk_block(stmt.then, cls, meth, t_id, out)
        if stmt.orelse is not None:
            _walk_block(stmt.orelse, cls, meth, f_id, out)
    elif isinstance(stmt, While):
        t_id = target_id(stmt.site, True)
        f_id = target_id(stmt.site, False)
        out.append(BranchTarget(t_id, cls, meth, stmt.site, True, parent))
        out.append(BranchTarget(f_id, cls, meth, stmt.site, False, parent))
        _walk_block(stmt.body, cls, meth, t_id, out)


def method_targets(cls: ClassUnit, meth: MethodUnit) -> list[BranchTarget]:
    out: list[BranchTarget] = []
    _walk_block(meth.body, cls.name, meth.name, None, out)
    return out


def class_targets(cls: ClassUnit) -> list[BranchTarget]:
    out: list[BranchTarget] = []
    for meth in cls.methods:
        out.extend(method_targets(cls, meth))
    return out


def enumerate_targets(program: SubjectProgram) -> list[BranchTarget]:
    """All branch targets of a program, in deterministic source order."""
    out: list[BranchTarget] = []
    for cls in program.classes:
        out.extend(class_targets(cls))
    return out


def build_cdg(targets: list[BranchTarget]) -> ControlDependencyGraph:
    return ControlDependencyGraph({t.id: t.parent_id for t in targets})


def _traps_in_block(block: Block, guard: str | None, out: dict[str, str | None]) -> None:
    for stmt in block.statements:
        if isinstance(stmt, Trap):
            out[stmt.bug_id] = guard
        elif isinstance(stmt, If):
            _traps_in_block(stmt.then, target_id(stmt.site, True), out)
            if stmt.orelse is not None:
                _traps_in_block(stmt.orelse, target_id(stmt.site, False), out)
        elif isinstance(stmt, While):
            _traps_in_block(stmt.body, target_id(stmt.site, True), out)


def trap_guards(program: SubjectProgram) -> dict[str, str | None]:
    """Map each trap id to the innermost conditional side enclosing it.

    A trap directly under a method body maps to None: it fires on any call.
    Reaching the guard target therefore implies the trap can fire, which is
    why full branch coverage of a class flushes out every reachable trap.
    """
    out: dict[str, str | None] = {}
    for cls in program.classes:
        for meth in cls.methods:
            _traps_in_block(meth.body, None, out)
    return out
