"""Tokenizer, recursive-descent parser and checker for MiniLang.

`parse_program` returns a fully resolved `SubjectProgram` or raises a
`MiniLangError` subclass with a source position:

* `ParseError` for malformed syntax (message names the expected tokens),
* `UnboundedLoopError` for a `while` missing its `@maxiter` guard,
* `DuplicateNameError` for name collisions (classes, methods, params,
  variables in enclosing scopes, trap ids),
* `TypeCheckError` for type mismatches, undefined or misused names.

Calls are intra-class only and may appear solely as the full right-hand
side of `let`/`=`/`return`, or as a bare call statement. That keeps every
predicate a pure expression over locals, so branch distances need no
side-effect handling.
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import (
    ARITH_OPS,
    CMP_OPS,
    INT64_MAX,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    CallStmt,
    ClassUnit,
    DuplicateNameError,
    Expr,
    If,
    IntLit,
    Let,
    MethodUnit,
    Param,
    ParseError,
    Return,
    Stmt,
    SubjectProgram,
    Trap,
    TypeCheckError,
    UnboundedLoopError,
    Unary,
    Var,
    While,
)

KEYWORDS = frozenset(
    {
        "program",
        "class",
        "fn",
        "let",
        "if",
        "else",
        "while",
        "return",
        "trap",
        "true",
        "false",
        "int",
        "bool",
    }
)

_PUNCT = (
    "&&",
    "||",
    "==",
    "!=",
    "<=",
    ">=",
    "->",
    "{",
    "}",
    "(",
    ")",
    ";",
    ",",
    "=",
    "<",
    ">",
    "+",
    "-",
    "*",
    "/",
    "%",
    "!",
    "@",
)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | "string" | "punct" | "kw" | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            start = i
            while i < n and source[i].isdigit():
                i += 1
            tokens.append(Token("int", source[start:i], line, col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
            col += i - start
            continue
        if ch == '"':
            start = i
            i += 1
            while i < n and source[i] not in '"\n':
                i += 1
            if i >= n or source[i] != '"':
                raise ParseError("unterminated string literal", line, col)
            i += 1
            tokens.append(Token("string", source[start + 1 : i - 1], line, col))
            col += i - start
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self._class: str = ""
        self._method: str = ""
        self._site_counter = 0

    # -- token plumbing ---------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else f"<{kind}>"
            got = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(f"expected {want!r}, got {got!r}", tok.line, tok.col)
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    # -- grammar ----------------------------------------------------------

    def parse_program(self) -> SubjectProgram:
        self.expect("kw", "program")
        name = self.expect("ident").text
        self.expect("punct", "{")
        classes: list[ClassUnit] = []
        seen: set[str] = set()
        while not self.accept("punct", "}"):
            tok = self.peek()
            cls = self.parse_class()
            if cls.name in seen:
                raise DuplicateNameError(f"duplicate class {cls.name!r}", tok.line, tok.col)
            seen.add(cls.name)
            classes.append(cls)
        self.expect("eof")
        if not classes:
            raise ParseError("program has no classes", 1, 1)
        return SubjectProgram(name, tuple(classes))

    def parse_class(self) -> ClassUnit:
        self.expect("kw", "class")
        name = self.expect("ident").text
        self._class = name
        self.expect("punct", "{")
        methods: list[MethodUnit] = []
        seen: set[str] = set()
        while not self.accept("punct", "}"):
            tok = self.peek()
            meth = self.parse_method()
            if meth.name in seen:
                raise DuplicateNameError(
                    f"duplicate method {meth.name!r} in class {name!r}", tok.line, tok.col
                )
            seen.add(meth.name)
            methods.append(meth)
        if not methods:
            raise ParseError(f"class {name!r} has no methods", 1, 1)
        return ClassUnit(name, tuple(methods))

    def parse_method(self) -> MethodUnit:
        self.expect("kw", "fn")
        name = self.expect("ident").text
        self._method = name
        self._site_counter = 0
        self.expect("punct", "(")
        params: list[Param] = []
        pseen: set[str] = set()
        if not self.accept("punct", ")"):
            while True:
                ptok = self.peek()
                pname = self.expect("ident").text
                if pname in pseen:
                    raise DuplicateNameError(f"duplicate parameter {pname!r}", ptok.line, ptok.col)
                pseen.add(pname)
                ptype = self.parse_type()
                params.append(Param(pname, ptype))
                if self.accept("punct", ")"):
                    break
                self.expect("punct", ",")
        return_type: str | None = None
        if self.accept("punct", "->"):
            return_type = self.parse_type()
        body = self.parse_block()
        return MethodUnit(name, tuple(params), return_type, body)

    def parse_type(self) -> str:
        tok = self.peek()
        if self.accept("kw", "int"):
            return "int"
        if self.accept("kw", "bool"):
            return "bool"
        raise ParseError(f"expected 'int' or 'bool', got {tok.text!r}", tok.line, tok.col)

    def fresh_site(self) -> str:
        site = f"{self._class}.{self._method}#{self._site_counter}"
        self._site_counter += 1
        return site

    def parse_block(self) -> Block:
        self.expect("punct", "{")
        stmts: list[Stmt] = []
        while not self.accept("punct", "}"):
            stmts.append(self.parse_stmt())
        return Block(tuple(stmts))

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        if self.accept("kw", "let"):
            name = self.expect("ident").text
            self.expect("punct", "=")
            value = self.parse_rhs()
            self.expect("punct", ";")
            return Let(name, value)
        if self.accept("kw", "if"):
            return self.parse_if()
        if self.accept("kw", "while"):
            return self.parse_while(tok)
        if self.accept("kw", "return"):
            if self.accept("punct", ";"):
                return Return(None)
            value = self.parse_rhs()
            self.expect("punct", ";")
            return Return(value)
        if self.accept("kw", "trap"):
            bug = self.expect("string").text
            self.expect("punct", ";")
            return Trap(bug)
        if tok.kind == "ident":
            name = self.next().text
            if self.accept("punct", "("):
                call = self.finish_call(name)
                self.expect("punct", ";")
                return CallStmt(call)
            self.expect("punct", "=")
            value = self.parse_rhs()
            self.expect("punct", ";")
            return Assign(name, value)
        raise ParseError(f"expected a statement, got {tok.text!r}", tok.line, tok.col)

    def parse_if(self) -> If:
        site = self.fresh_site()
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        then = self.parse_block()
        orelse: Block | None = None
        if self.accept("kw", "else"):
            if self.peek().text == "if" and self.peek().kind == "kw":
                self.next()
                orelse = Block((self.parse_if(),))
            else:
                orelse = self.parse_block()
        return If(cond, then, orelse, site)

    def parse_while(self, kw: Token) -> While:
        site = self.fresh_site()
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        if not self.accept("punct", "@"):
            raise UnboundedLoopError(
                "while loop missing '@maxiter' iteration guard", kw.line, kw.col
            )
        guard = self.expect("ident")
        if guard.text != "maxiter":
            raise UnboundedLoopError(
                "while loop missing '@maxiter' iteration guard", kw.line, kw.col
            )
        count = self.expect("int")
        max_iter = int(count.text)
        if max_iter < 1:
            raise UnboundedLoopError("@maxiter bound must be >= 1", count.line, count.col)
        body = self.parse_block()
        return While(cond, max_iter, body, site)

    def parse_rhs(self) -> Expr:
        # A call is only legal here, as the whole right-hand side.
        tok = self.peek()
        if tok.kind == "ident" and self._lookahead_is("(", 1):
            self.next()
            self.expect("punct", "(")
            return self.finish_call(tok.text)
        return self.parse_expr()

    def _lookahead_is(self, text: str, offset: int) -> bool:
        idx = self.pos + offset
        return idx < len(self.tokens) and self.tokens[idx].text == text

    def finish_call(self, callee: str) -> Call:
        args: list[Expr] = []
        if not self.accept("punct", ")"):
            while True:
                args.append(self.parse_expr())
                if self.accept("punct", ")"):
                    break
                self.expect("punct", ",")
        return Call(callee, tuple(args))

    # Precedence, loosest first: || < && < comparison < additive < term < unary.
    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.accept("punct", "||"):
            left = Binary("||", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_cmp()
        while self.accept("punct", "&&"):
            left = Binary("&&", left, self.parse_cmp())
        return left

    def parse_cmp(self) -> Expr:
        left = self.parse_add()
        tok = self.peek()
        if tok.kind == "punct" and tok.text in CMP_OPS:
            self.next()
            return Binary(tok.text, left, self.parse_add())
        return left

    def parse_add(self) -> Expr:
        left = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text in ("+", "-"):
                self.next()
                left = Binary(tok.text, left, self.parse_term())
            else:
                return left

    def parse_term(self) -> Expr:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text in ("*", "/", "%"):
                self.next()
                left = Binary(tok.text, left, self.parse_unary())
            else:
                return left

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("-", "!"):
            self.next()
            return Unary(tok.text, self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.next()
        if tok.kind == "int":
            value = int(tok.text)
            if value > INT64_MAX:
                raise TypeCheckError(
                    f"integer literal {tok.text} out of 64-bit range", tok.line, tok.col
                )
            return IntLit(value)
        if tok.kind == "kw" and tok.text in ("true", "false"):
            return BoolLit(tok.text == "true")
        if tok.kind == "ident":
            if self.peek().text == "(":
                raise ParseError(
                    "calls are only allowed as a statement right-hand side",
                    tok.line,
                    tok.col,
                )
            return Var(tok.text)
        if tok.kind == "punct" and tok.text == "(":
            inner = self.parse_expr()
            self.expect("punct", ")")
            return inner
        got = tok.text if tok.kind != "eof" else "end of input"
        raise ParseError(f"expected an expression, got {got!r}", tok.line, tok.col)


# ---------------------------------------------------------------------------
# Resolution and type checking


class _Checker:
    def __init__(self, program: SubjectProgram):
        self.program = program
        self.trap_ids: set[str] = set()

    def run(self) -> None:
        for cls in self.program.classes:
            for meth in cls.methods:
                self.check_method(cls, meth)

    def check_method(self, cls: ClassUnit, meth: MethodUnit) -> None:
        scope: dict[str, str] = {p.name: p.type for p in meth.params}
        self.check_block(cls, meth, meth.body, [scope])

    def check_block(
        self, cls: ClassUnit, meth: MethodUnit, block: Block, scopes: list[dict[str, str]]
    ) -> None:
        scopes.append({})
        for stmt in block.statements:
            self.check_stmt(cls, meth, stmt, scopes)
        scopes.pop()

    def lookup(self, scopes: list[dict[str, str]], name: str) -> str | None:
        for scope in reversed(scopes):
            if name in scope:
                return scope[name]
        return None

    def check_stmt(
        self, cls: ClassUnit, meth: MethodUnit, stmt: Stmt, scopes: list[dict[str, str]]
    ) -> None:
        where = f"{cls.name}.{meth.name}"
        if isinstance(stmt, Let):
            if self.lookup(scopes, stmt.name) is not None:
                raise DuplicateNameError(f"variable {stmt.name!r} redeclared in {where}")
            scopes[-1][stmt.name] = self.rhs_type(cls, stmt.value, scopes, where)
        elif isinstance(stmt, Assign):
            declared = self.lookup(scopes, stmt.name)
            if declared is None:
                raise TypeCheckError(f"undefined variable {stmt.name!r} in {where}")
            actual = self.rhs_type(cls, stmt.value, scopes, where)
            if actual != declared:
                raise TypeCheckError(
                    f"cannot assign {actual} to {declared} variable {stmt.name!r} in {where}"
                )
        elif isinstance(stmt, If):
            if self.expr_type(cls, stmt.cond, scopes, where) != "bool":
                raise TypeCheckError(f"if condition must be bool in {where}")
            self.check_block(cls, meth, stmt.then, scopes)
            if stmt.orelse is not None:
                self.check_block(cls, meth, stmt.orelse, scopes)
        elif isinstance(stmt, While):
            if self.expr_type(cls, stmt.cond, scopes, where) != "bool":
                raise TypeCheckError(f"while condition must be bool in {where}")
            self.check_block(cls, meth, stmt.body, scopes)
        elif isinstance(stmt, Return):
            if stmt.value is None:
                if meth.return_type is not None:
                    raise TypeCheckError(f"{where} must return a {meth.return_type}")
            else:
                if meth.return_type is None:
                    raise TypeCheckError(f"{where} returns no value")
                actual = self.rhs_type(cls, stmt.value, scopes, where)
                if actual != meth.return_type:
                    raise TypeCheckError(
                        f"{where} returns {actual}, declared {meth.return_type}"
                    )
        elif isinstance(stmt, Trap):
            if stmt.bug_id in self.trap_ids:
                raise DuplicateNameError(f"duplicate trap id {stmt.bug_id!r}")
            self.trap_ids.add(stmt.bug_id)
        elif isinstance(stmt, CallStmt):
            self.call_type(cls, stmt.call, scopes, where, allow_void=True)
        else:  # pragma: no cover - parser emits no other kinds
            raise TypeCheckError(f"unknown statement {stmt!r}")

    def rhs_type(
        self, cls: ClassUnit, expr: Expr, scopes: list[dict[str, str]], where: str
    ) -> str:
        if isinstance(expr, Call):
            return self.call_type(cls, expr, scopes, where, allow_void=False)
        return self.expr_type(cls, expr, scopes, where)

    def call_type(
        self,
        cls: ClassUnit,
        call: Call,
        scopes: list[dict[str, str]],
        where: str,
        allow_void: bool,
    ) -> str:
        try:
            callee = cls.method(call.callee)
        except KeyError:
            raise TypeCheckError(
                f"call to unknown method {call.callee!r} from {where}"
            ) from None
        if len(call.args) != len(callee.params):
            raise TypeCheckError(
                f"{where} calls {call.callee} with {len(call.args)} args, expected "
                f"{len(callee.params)}"
            )
        for arg, param in zip(call.args, callee.params):
            actual = self.expr_type(cls, arg, scopes, where)
            if actual != param.type:
                raise TypeCheckError(
                    f"argument {param.name!r} of {call.callee} expects {param.type}, "
                    f"got {actual} in {where}"
                )
        if callee.return_type is None and not allow_void:
            raise TypeCheckError(f"{call.callee} returns no value, cannot use in {where}")
        return callee.return_type or "void"

    def expr_type(
        self, cls: ClassUnit, expr: Expr, scopes: list[dict[str, str]], where: str
    ) -> str:
        if isinstance(expr, IntLit):
            return "int"
        if isinstance(expr, BoolLit):
            return "bool"
        if isinstance(expr, Var):
            declared = self.lookup(scopes, expr.name)
            if declared is None:
                raise TypeCheckError(f"undefined variable {expr.name!r} in {where}")
            return declared
        if isinstance(expr, Unary):
            inner = self.expr_type(cls, expr.operand, scopes, where)
            want = "int" if expr.op == "-" else "bool"
            if inner != want:
                raise TypeCheckError(f"operator {expr.op!r} expects {want} in {where}")
            return want
        if isinstance(expr, Binary):
            left = self.expr_type(cls, expr.left, scopes, where)
            right = self.expr_type(cls, expr.right, scopes, where)
            if expr.op in ARITH_OPS:
                if left != "int" or right != "int":
                    raise TypeCheckError(f"operator {expr.op!r} expects ints in {where}")
                return "int"
            if expr.op in ("==", "!="):
                if left != right:
                    raise TypeCheckError(
                        f"operator {expr.op!r} compares {left} with {right} in {where}"
                    )
                return "bool"
            if expr.op in CMP_OPS:
                if left != "int" or right != "int":
                    raise TypeCheckError(f"operator {expr.op!r} expects ints in {where}")
                return "bool"
            if left != "bool" or right != "bool":
                raise TypeCheckError(f"operator {expr.op!r} expects bools in {where}")
            return "bool"
        if isinstance(expr, Call):
            raise TypeCheckError(
                f"calls are only allowed as a statement right-hand side, in {where}"
            )
        raise TypeCheckError(f"unknown expression {expr!r} in {where}")


def parse_program(source: str) -> SubjectProgram:
    """Parse, resolve and type-check MiniLang source."""
    program = _Parser(tokenize(source)).parse_program()
    _Checker(program).run()
    return program
