"""Canonical source emission for parsed programs.

`to_source(parse_program(text))` reparses to an equal AST, which the tests
rely on to pin the grammar down.
"""

from __future__ import annotations

from .nodes import (
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    CallStmt,
    Expr,
    If,
    IntLit,
    Let,
    MethodUnit,
    Return,
    Stmt,
    SubjectProgram,
    Trap,
    Unary,
    Var,
    While,
)

# Higher binds tighter; comparisons are non-associative so they sit between
# the logical and additive tiers.
_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 3,
    "<=": 3,
    ">": 3,
    ">=": 3,
    "+": 4,
    "-": 4,
    "*": 5,
    "/": 5,
    "%": 5,
}


def expr_source(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        return f"{expr.op}{expr_source(expr.operand, 6)}"
    if isinstance(expr, Call):
        args = ", ".join(expr_source(a) for a in expr.args)
        return f"{expr.callee}({args})"
    if isinstance(expr, Binary):
        prec = _PREC[expr.op]
        # Comparisons do not chain, so both operands of one get a tighter
        # context; left-associative chains keep the left operand at prec.
        left_prec = prec + 1 if prec == 3 else prec
        left = expr_source(expr.left, left_prec)
        right = expr_source(expr.right, prec + 1)
        text = f"{left} {expr.op} {right}"
        if prec < parent_prec:
            return f"({text})"
        return text
    raise TypeError(f"unknown expression {expr!r}")


def _stmt_lines(stmt: Stmt, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    if isinstance(stmt, Let):
        out.append(f"{pad}let {stmt.name} = {expr_source(stmt.value)};")
    elif isinstance(stmt, Assign):
        out.append(f"{pad}{stmt.name} = {expr_source(stmt.value)};")
    elif isinstance(stmt, If):
        out.append(f"{pad}if ({expr_source(stmt.cond)}) {{")
        _block_lines(stmt.then, indent + 1, out)
        if stmt.orelse is None:
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}}} else {{")
            _block_lines(stmt.orelse, indent + 1, out)
            out.append(f"{pad}}}")
    elif isinstance(stmt, While):
        out.append(f"{pad}while ({expr_source(stmt.cond)}) @maxiter {stmt.max_iter} {{")
        _block_lines(stmt.body, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(stmt, Return):
        if stmt.value is None:
            out.append(f"{pad}return;")
        else:
            out.append(f"{pad}return {expr_source(stmt.value)};")
    elif isinstance(stmt, Trap):
        out.append(f'{pad}trap "{stmt.bug_id}";')
    elif isinstance(stmt, CallStmt):
        out.append(f"{pad}{expr_source(stmt.call)};")
    else:
        raise TypeError(f"unknown statement {stmt!r}")


def _block_lines(block: Block, indent: int, out: list[str]) -> None:
    for stmt in block.statements:
        _stmt_lines(stmt, indent, out)


def _method_lines(meth: MethodUnit, out: list[str]) -> None:
    params = ", ".join(f"{p.name} {p.type}" for p in meth.params)
    ret = f" -> {meth.return_type}" if meth.return_type is not None else ""
    out.append(f"    fn {meth.name}({params}){ret} {{")
    _block_lines(meth.body, 2, out)
    out.append("    }")


def to_source(program: SubjectProgram) -> str:
    out: list[str] = [f"program {program.name} {{"]
    for cls in program.classes:
        out.append(f"  class {cls.name} {{")
        for meth in cls.methods:
            _method_lines(meth, out)
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
