"""Instrumented MiniLang interpreter and branch-distance fitness.

Executing a test case yields an `ExecutionTrace` holding, per evaluated
predicate site, the observed outcome and the minimum raw distance toward
each side, plus covered targets and any bug traps reached. Fitness for a
branch target is the classic approach level plus normalized branch
distance at the deepest executed control-dependent ancestor.

Program arithmetic wraps at 64 bits; distances are computed on the exact
(widened) operand values so proximity is not distorted by wrapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from .minilang.nodes import (
    Assign,
    Binary,
    Block,
    BoolLit,
    BranchTarget,
    Call,
    CallStmt,
    ClassUnit,
    CMP_OPS,
    ControlDependencyGraph,
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
    target_id,
)

_U64 = 2**64
_BIAS = 2**63

# Stand-in for a normalized distance when no usable raw distance exists;
# fitness values built from it are clamped strictly below approach-level + 1.
MISSING_DISTANCE = math.nextafter(1.0, 0.0)


def wrap64(value: int) -> int:
    return (value + _BIAS) % _U64 - _BIAS


def trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def trunc_mod(a: int, b: int) -> int:
    return a - b * trunc_div(a, b)


_NEGATE = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def branch_distance(comparator: str, lhs: int, rhs: int, desired: bool) -> int:
    """Raw distance to making `lhs <comparator> rhs` take the desired outcome.

    Zero iff the comparison already has that outcome; the constant K is 1.
    """
    if not desired:
        return branch_distance(_NEGATE[comparator], lhs, rhs, True)
    if comparator == "==":
        return abs(lhs - rhs)
    if comparator == "!=":
        return 0 if lhs != rhs else 1
    if comparator == "<":
        return 0 if lhs < rhs else lhs - rhs + 1
    if comparator == "<=":
        return 0 if lhs <= rhs else lhs - rhs
    if comparator == ">":
        return 0 if lhs > rhs else rhs - lhs + 1
    if comparator == ">=":
        return 0 if lhs >= rhs else rhs - lhs
    raise ValueError(f"unknown comparator {comparator!r}")


def normalize(d: float) -> float:
    """Map a raw distance into [0, 1), monotone, 0 to 0.

    Clamped below 1.0: past 2**53 the quotient would round up to 1 exactly.
    """
    return min(d / (d + 1.0), MISSING_DISTANCE)


@dataclass(frozen=True)
class TestCase:
    class_name: str
    method_name: str
    args: tuple[int | bool, ...]


class PredicateObservation(NamedTuple):
    outcome: bool  # most recent evaluation
    d_true: int  # minimum over all evaluations
    d_false: int


@dataclass
class ExecutionTrace:
    executed: dict[str, PredicateObservation]
    covered: frozenset[str]
    traps_hit: frozenset[str]
    exhausted: bool
    steps: int
    fault: str | None = None


@dataclass(frozen=True)
class Limits:
    max_steps: int = 10_000
    max_call_depth: int = 64


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Exhausted(Exception):
    pass


class _Fault(Exception):
    def __init__(self, kind: str):
        self.kind = kind


class _Interp:
    def __init__(self, program: SubjectProgram, cls: ClassUnit, limits: Limits):
        self.cls = cls
        self.limits = limits
        self.steps = 0
        self.depth = 0
        self.executed: dict[str, PredicateObservation] = {}
        self.covered: set[str] = set()
        self.traps: set[str] = set()

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _Exhausted()

    def call(self, meth: MethodUnit, args: tuple):
        self.depth += 1
        if self.depth > self.limits.max_call_depth:
            raise _Exhausted()
        env = {p.name: v for p, v in zip(meth.params, args)}
        try:
            self.exec_block(meth.body, env)
        except _Return as ret:
            return ret.value
        finally:
            self.depth -= 1
        # falling off the end returns the type's default value
        if meth.return_type == "int":
            return 0
        if meth.return_type == "bool":
            return False
        return None

    def exec_block(self, block: Block, env: dict) -> None:
        for stmt in block.statements:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt: Stmt, env: dict) -> None:
        self.tick()
        if isinstance(stmt, Let) or isinstance(stmt, Assign):
            env[stmt.name] = self.eval_rhs(stmt.value, env)
        elif isinstance(stmt, If):
            outcome = self.eval_predicate(stmt.site, stmt.cond, env)
            if outcome:
                self.exec_block(stmt.then, env)
            elif stmt.orelse is not None:
                self.exec_block(stmt.orelse, env)
        elif isinstance(stmt, While):
            iters = 0
            while True:
                if not self.eval_predicate(stmt.site, stmt.cond, env):
                    break
                if iters >= stmt.max_iter:
                    raise _Exhausted()
                iters += 1
                self.exec_block(stmt.body, env)
        elif isinstance(stmt, Return):
            value = self.eval_rhs(stmt.value, env) if stmt.value is not None else None
            raise _Return(value)
        elif isinstance(stmt, Trap):
            self.traps.add(stmt.bug_id)
        elif isinstance(stmt, CallStmt):
            self.do_call(stmt.call, env)
        else:  # pragma: no cover
            raise TypeError(f"unknown statement {stmt!r}")

    def eval_rhs(self, expr: Expr, env: dict):
        if isinstance(expr, Call):
            return self.do_call(expr, env)
        return self.eval(expr, env)

    def do_call(self, call: Call, env: dict):
        meth = self.cls.method(call.callee)
        args = tuple(self.eval(a, env) for a in call.args)
        return self.call(meth, args)

    def eval_predicate(self, site: str, cond: Expr, env: dict) -> bool:
        self.tick()
        outcome, d_true, d_false = self.eval_dist(cond, env)
        prev = self.executed.get(site)
        if prev is None:
            self.executed[site] = PredicateObservation(outcome, d_true, d_false)
        else:
            self.executed[site] = PredicateObservation(
                outcome, min(prev.d_true, d_true), min(prev.d_false, d_false)
            )
        self.covered.add(target_id(site, outcome))
        return outcome

    def eval(self, expr: Expr, env: dict):
        if isinstance(expr, IntLit):
            return wrap64(expr.value)
        if isinstance(expr, BoolLit):
            return expr.value
        if isinstance(expr, Var):
            return env[expr.name]
        if isinstance(expr, Unary):
            operand = self.eval(expr.operand, env)
            if expr.op == "-":
                return wrap64(-operand)
            return not operand
        if isinstance(expr, Binary):
            if expr.op in ("&&", "||", *CMP_OPS):
                value, _, _ = self.eval_dist(expr, env)
                return value
            left = self.eval(expr.left, env)
            right = self.eval(expr.right, env)
            if expr.op == "+":
                return wrap64(left + right)
            if expr.op == "-":
                return wrap64(left - right)
            if expr.op == "*":
                return wrap64(left * right)
            if right == 0:
                raise _Fault("arithmetic")
            if expr.op == "/":
                return wrap64(trunc_div(left, right))
            return wrap64(trunc_mod(left, right))
        raise TypeError(f"unknown expression {expr!r}")

    def eval_dist(self, expr: Expr, env: dict) -> tuple[bool, int, int]:
        """Evaluate a boolean expression with both-side raw distances.

        Conjunction sums distances, disjunction takes the minimum, negation
        swaps the sides. Operands are evaluated fully even when the outcome
        is already decided; predicates are pure, so that is unobservable.
        """
        if isinstance(expr, Binary) and expr.op == "&&":
            lv, lt, lf = self.eval_dist(expr.left, env)
            rv, rt, rf = self.eval_dist(expr.right, env)
            return lv and rv, lt + rt, min(lf, rf)
        if isinstance(expr, Binary) and expr.op == "||":
            lv, lt, lf = self.eval_dist(expr.left, env)
            rv, rt, rf = self.eval_dist(expr.right, env)
            return lv or rv, min(lt, rt), lf + rf
        if isinstance(expr, Unary) and expr.op == "!":
            value, d_true, d_false = self.eval_dist(expr.operand, env)
            return not value, d_false, d_true
        if isinstance(expr, Binary) and expr.op in CMP_OPS:
            left = self.eval(expr.left, env)
            right = self.eval(expr.right, env)
            if isinstance(left, bool):
                left, right = int(left), int(right)
            d_true = branch_distance(expr.op, left, right, True)
            d_false = branch_distance(expr.op, left, right, False)
            return d_true == 0, d_true, d_false
        value = self.eval(expr, env)
        return value, (0 if value else 1), (1 if value else 0)


def execute(
    program: SubjectProgram, test: TestCase, limits: Limits = Limits()
) -> ExecutionTrace:
    """Run one test case; deterministic for fixed inputs.

    Resource exhaustion (step cap, @maxiter overrun, call depth) and
    arithmetic faults abort the run with partial coverage retained and no
    trap hits reported, so bad generated inputs never pose as seeded bugs.
    """
    cls = program.class_unit(test.class_name)
    meth = cls.method(test.method_name)
    if len(test.args) != len(meth.params):
        raise ValueError(
            f"{test.class_name}.{test.method_name} takes {len(meth.params)} args, "
            f"got {len(test.args)}"
        )
    args = []
    for param, arg in zip(meth.params, test.args):
        if param.type == "bool":
            if not isinstance(arg, bool):
                raise ValueError(f"argument {param.name!r} must be bool")
            args.append(arg)
        else:
            if isinstance(arg, bool) or not isinstance(arg, int):
                raise ValueError(f"argument {param.name!r} must be int")
            args.append(wrap64(arg))

    interp = _Interp(program, cls, limits)
    exhausted = False
    fault: str | None = None
    try:
        interp.call(meth, tuple(args))
    except _Exhausted:
        exhausted = True
        interp.traps.clear()
    except _Fault as f:
        fault = f.kind
        interp.traps.clear()
    return ExecutionTrace(
        executed=interp.executed,
        covered=frozenset(interp.covered),
        traps_hit=frozenset(interp.traps),
        exhausted=exhausted,
        steps=interp.steps,
        fault=fault,
    )


def _side_distance(obs: PredicateObservation, polarity: bool) -> int:
    return obs.d_true if polarity else obs.d_false


def target_fitness(
    trace: ExecutionTrace, target: BranchTarget, cdg: ControlDependencyGraph
) -> float:
    """Approach level plus normalized branch distance for one target.

    Zero iff the target is covered. The approach level is the number of
    unexecuted predicates on the dependency chain below the divergence
    point: 0 when the target's own predicate ran, 1 when execution
    diverged at the immediate parent, and so on, keeping each divergence
    depth in its own unit band so a test that penetrates deeper always
    outranks one that turned off earlier, whatever their distances. If no
    predicate on the chain ran at all, the fitness is the full chain
    length, strictly above every divergence band.
    """
    if target.id in trace.covered:
        return 0.0
    chain = cdg.chain(target.id)
    for j, tid in enumerate(chain):
        site, _, suffix = tid.rpartition(":")
        obs = trace.executed.get(site)
        if obs is not None:
            raw = _side_distance(obs, suffix == "T")
            if j > 0 and raw == 0:
                # Ancestor took the target-ward side, yet the next predicate
                # down never ran: execution died inside the block (exhaustion,
                # fault or an early return). Rank just under the tests that
                # reached that next predicate.
                return math.nextafter(float(j), 0.0)
            return j + normalize(raw)
    return float(len(chain))
