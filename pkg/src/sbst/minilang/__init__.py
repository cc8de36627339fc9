"""MiniLang: a tiny class-structured language for search-based testing.

Programs are integer/boolean only, every loop carries an explicit
iteration guard, and seeded bugs are marked with `trap` statements that
report a bug id when reached.
"""

from .nodes import (
    INT64_MAX,
    INT64_MIN,
    BranchTarget,
    ClassUnit,
    ControlDependencyGraph,
    DuplicateNameError,
    MethodUnit,
    MiniLangError,
    ParseError,
    SubjectProgram,
    TypeCheckError,
    UnboundedLoopError,
    target_id,
)
from .parser import parse_program, tokenize
from .printer import to_source
from .targets import (
    build_cdg,
    class_targets,
    enumerate_targets,
    method_targets,
    trap_guards,
)

__all__ = [
    "INT64_MAX",
    "INT64_MIN",
    "BranchTarget",
    "ClassUnit",
    "ControlDependencyGraph",
    "DuplicateNameError",
    "MethodUnit",
    "MiniLangError",
    "ParseError",
    "SubjectProgram",
    "TypeCheckError",
    "UnboundedLoopError",
    "build_cdg",
    "class_targets",
    "enumerate_targets",
    "method_targets",
    "parse_program",
    "target_id",
    "to_source",
    "tokenize",
    "trap_guards",
]
