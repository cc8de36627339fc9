"""AST node types for MiniLang subject programs.

All nodes are frozen dataclasses: a parsed program is immutable and can be
shared freely between concurrent search workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class MiniLangError(Exception):
    """Base class for parse/resolution failures."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, col {col})" if line else message)


class ParseError(MiniLangError):
    pass


class TypeCheckError(MiniLangError):
    pass


class DuplicateNameError(MiniLangError):
    pass


class UnboundedLoopError(MiniLangError):
    """A `while` without a `@maxiter` guard."""


# ---------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "-" or "!"
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # + - * / % == != < <= > >= && ||
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    """Intra-class call; only legal as a statement right-hand side."""

    callee: str
    args: tuple[Expr, ...]


ARITH_OPS = frozenset({"+", "-", "*", "/", "%"})
CMP_OPS = frozenset({"==", "!=", "<", "<=", ">", ">="})
LOGIC_OPS = frozenset({"&&", "||"})


# ---------------------------------------------------------------------------
# Statements

@dataclass(frozen=True)
class Stmt:
    pass


@dataclass(frozen=True)
class Block:
    statements: tuple[Stmt, ...]


@dataclass(frozen=True)
class Let(Stmt):
    name: str
    value: Expr


@dataclass(frozen=True)
class Assign(Stmt):
    name: str
    value: Expr


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Block
    orelse: Block | None
    site: str  # predicate-site id, unique per program


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    max_iter: int
    body: Block
    site: str


@dataclass(frozen=True)
class Return(Stmt):
    value: Expr | None


@dataclass(frozen=True)
class Trap(Stmt):
    bug_id: str


@dataclass(frozen=True)
class CallStmt(Stmt):
    call: Call


# ---------------------------------------------------------------------------
# Program structure

@dataclass(frozen=True)
class Param:
    name: str
    type: str  # "int" | "bool"


@dataclass(frozen=True)
class MethodUnit:
    name: str
    params: tuple[Param, ...]
    return_type: str | None  # None = no value
    body: Block


@dataclass(frozen=True)
class ClassUnit:
    name: str
    methods: tuple[MethodUnit, ...]

    def method(self, name: str) -> MethodUnit:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(f"no method {name!r} in class {self.name!r}")

    def method_names(self) -> list[str]:
        return [m.name for m in self.methods]


@dataclass(frozen=True)
class SubjectProgram:
    name: str
    classes: tuple[ClassUnit, ...]

    def class_unit(self, name: str) -> ClassUnit:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(f"no class {name!r} in program {self.name!r}")

    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]


# ---------------------------------------------------------------------------
# Coverage targets

TRUE_SIDE = True
FALSE_SIDE = False


@dataclass(frozen=True)
class BranchTarget:
    """One side of a conditional: the unit of coverage the search optimises."""

    id: str
    class_name: str
    method_name: str
    site: str  # predicate-site id shared by the T and F targets
    polarity: bool  # True = true-side
    parent_id: str | None  # nearest enclosing conditional side, same method


def target_id(site: str, polarity: bool) -> str:
    return f"{site}:{'T' if polarity else 'F'}"


@dataclass(frozen=True)
class ControlDependencyGraph:
    """Forest of child -> parent control dependencies over target ids."""

    parents: dict[str, str | None] = field(default_factory=dict)

    def parent_of(self, tid: str) -> str | None:
        return self.parents[tid]

    def chain(self, tid: str) -> list[str]:
        """Target followed by its ancestors, innermost first."""
        out = [tid]
        cur = self.parents[tid]
        while cur is not None:
            out.append(cur)
            cur = self.parents[cur]
        return out

    def roots(self) -> list[str]:
        return [t for t, p in self.parents.items() if p is None]

    def merged_with(self, other: "ControlDependencyGraph") -> "ControlDependencyGraph":
        joined = dict(self.parents)
        joined.update(other.parents)
        return ControlDependencyGraph(joined)
