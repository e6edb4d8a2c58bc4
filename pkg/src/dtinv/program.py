"""Single-loop integer programs: AST, parser, printer and concrete semantics.

Concrete syntax::

    var x, y: Int;
    assume x = 0 && y != 0;
    while (y != 0) {
      if (y < 0) { x := x - 1; y := y + 1; }
      else { x := x + 1; y := y - 1; }
    }
    assert x != 0;

Statements are assignments, ``if``/``else`` and ``choice { ... } or { ... }``
(bounded nondeterminism). ``//`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Iterator, Union

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

State = tuple  # tuple[int, ...], one value per variable in declaration order


class DslError(ValueError):
    pass


class ParseError(DslError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class SemanticError(DslError):
    pass


class EvaluationError(RuntimeError):
    pass


class ArithmeticOverflow(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class UMinus:
    arg: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mod:
    arg: "Expr"
    divisor: int


Expr = Union[Const, Var, UMinus, Add, Sub, Mul, Mod]


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str  # one of CMP_OPS
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And:
    left: "Pred"
    right: "Pred"


@dataclass(frozen=True)
class Or:
    left: "Pred"
    right: "Pred"


@dataclass(frozen=True)
class Not:
    arg: "Pred"


Pred = Union[BoolLit, Cmp, And, Or, Not]

CMP_OPS = ("<=", "<", "=", "!=", ">=", ">")


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Seq:
    stmts: tuple


@dataclass(frozen=True)
class If:
    cond: Pred
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class Choice:
    first: "Stmt"
    second: "Stmt"


Stmt = Union[Assign, Seq, If, Choice]


def conj(*preds: Pred) -> Pred:
    """Left-nested conjunction; ``conj()`` is ``true``."""
    preds = [p for p in preds if p != BoolLit(True)]
    if not preds:
        return BoolLit(True)
    out = preds[0]
    for p in preds[1:]:
        out = And(out, p)
    return out


def disj(*preds: Pred) -> Pred:
    preds = [p for p in preds if p != BoolLit(False)]
    if not preds:
        return BoolLit(False)
    out = preds[0]
    for p in preds[1:]:
        out = Or(out, p)
    return out


def variables(node) -> Iterator[str]:
    if isinstance(node, Var):
        yield node.name
    elif isinstance(node, Assign):
        yield node.name
        yield from variables(node.expr)
    elif isinstance(node, Seq):
        for s in node.stmts:
            yield from variables(s)
    elif isinstance(node, (Const, BoolLit)):
        return
    else:
        for field in node.__dataclass_fields__:
            child = getattr(node, field)
            if not isinstance(child, (int, str)):
                yield from variables(child)


def literals(node) -> Iterator[int]:
    """Integer literals occurring in ``node`` (mod divisors included)."""
    if isinstance(node, Const):
        yield node.value
    elif isinstance(node, Mod):
        yield node.divisor
        yield from literals(node.arg)
    elif isinstance(node, Seq):
        for s in node.stmts:
            yield from literals(s)
    elif isinstance(node, (Var, BoolLit)):
        return
    else:
        for field in node.__dataclass_fields__:
            child = getattr(node, field)
            if not isinstance(child, (int, str)):
                yield from literals(child)


def subterms(node) -> Iterator:
    yield node
    if isinstance(node, Seq):
        for s in node.stmts:
            yield from subterms(s)
        return
    if isinstance(node, (Const, Var, BoolLit)):
        return
    for field in node.__dataclass_fields__:
        child = getattr(node, field)
        if not isinstance(child, (int, str)):
            yield from subterms(child)


def is_constant(e: Expr) -> bool:
    return next(iter(variables(e)), None) is None


def const_value(e: Expr) -> int:
    return _compile_expr(e, ())(())


@dataclass(frozen=True)
class TransitionSystem:
    vars: tuple
    pre: Pred
    guard: Pred
    body: Stmt
    post: Pred

    def __post_init__(self):
        if not self.vars:
            raise SemanticError("at least one variable is required")
        if len(set(self.vars)) != len(self.vars):
            raise SemanticError("duplicate variable declaration")
        known = set(self.vars)
        for part in (self.pre, self.guard, self.body, self.post):
            for name in variables(part):
                if name not in known:
                    raise SemanticError(f"undeclared variable '{name}'")

    @property
    def dim(self) -> int:
        return len(self.vars)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vars)}

    @cached_property
    def _pre(self):
        return compile_pred(self.pre, self.vars)

    @cached_property
    def _guard(self):
        return compile_pred(self.guard, self.vars)

    @cached_property
    def _post(self):
        return compile_pred(self.post, self.vars)

    @cached_property
    def _body(self):
        return _compile_stmt(self.body, self.index)

    def literals(self) -> set:
        out = set()
        for part in (self.pre, self.guard, self.body, self.post):
            out.update(abs(v) for v in literals(part))
        out.discard(0)
        return out

    def mod_terms(self) -> list:
        """(variable, divisor) pairs for every ``v mod k`` pattern in the program."""
        seen = {}
        for part in (self.pre, self.guard, self.body, self.post):
            for node in subterms(part):
                if isinstance(node, Mod):
                    for name in variables(node.arg):
                        seen[(name, node.divisor)] = None
        return sorted(seen, key=lambda t: (self.index[t[0]], t[1]))

    def is_deterministic(self) -> bool:
        return not any(isinstance(n, Choice) for n in subterms(self.body))

    def __str__(self) -> str:
        return unparse_program(self)


# ---------------------------------------------------------------------------
# Lexer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+|//[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|<=|>=|!=|==|&&|\|\||[-+*%(){};,:<>=!]|[≤≥≠∧∨¬])
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "var", "Int", "assume", "while", "assert", "if", "else", "choice", "or",
    "and", "not", "mod", "true", "false", "skip",
}
_OP_ALIASES = {"==": "=", "≤": "<=", "≥": ">=", "≠": "!=", "∧": "&&", "∨": "||", "¬": "!",
               "and": "&&", "not": "!"}


@dataclass
class _Tok:
    kind: str  # 'int', 'id', 'kw', 'op', 'eof'
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list:
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "id" and text in _KEYWORDS:
            if text in ("and", "not"):
                toks.append(_Tok("op", _OP_ALIASES[text], line, col))
            else:
                toks.append(_Tok("kw", text, line, col))
        elif kind == "op":
            toks.append(_Tok("op", _OP_ALIASES.get(text, text), line, col))
        elif kind in ("int", "id"):
            toks.append(_Tok(kind, text, line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, src: str, nonlinear: bool = False):
        self.toks = _tokenize(src)
        self.pos = 0
        self.nonlinear = nonlinear

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', got '{got}'")
        tok = self.tok
        self.pos += 1
        return tok

    def ident(self) -> str:
        if self.tok.kind != "id":
            raise self.error(f"expected identifier, got '{self.tok.text or 'end of input'}'")
        name = self.tok.text
        self.pos += 1
        return name

    def eof(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected '{self.tok.text}'")

    # program ---------------------------------------------------------------

    def program(self) -> TransitionSystem:
        names = []
        while self.accept("var"):
            names.append(self.ident())
            while self.accept(","):
                names.append(self.ident())
            self.expect(":")
            self.expect("Int")
            self.expect(";")
        if not names:
            raise self.error("expected 'var' declaration")
        self.expect("assume")
        pre = self.pred()
        self.expect(";")
        self.expect("while")
        self.expect("(")
        guard = self.pred()
        self.expect(")")
        body = self.block()
        self.expect("assert")
        post = self.pred()
        self.expect(";")
        self.eof()
        return TransitionSystem(tuple(names), pre, guard, body, post)

    def block(self) -> Stmt:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            stmts.append(self.stmt())
        self.expect("}")
        return stmts[0] if len(stmts) == 1 else Seq(tuple(stmts))

    def stmt(self) -> Stmt:
        tok = self.tok
        if self.at("while"):
            raise SemanticError(f"{tok.line}:{tok.col}: nested loop unsupported")
        if self.accept("skip"):
            self.expect(";")
            return Seq(())
        if self.accept("if"):
            self.expect("(")
            cond = self.pred()
            self.expect(")")
            then = self.block()
            orelse: Stmt = Seq(())
            if self.accept("else"):
                orelse = self.stmt() if self.at("if") else self.block()
            return If(cond, then, orelse)
        if self.accept("choice"):
            first = self.block()
            self.expect("or")
            return Choice(first, self.block())
        name = self.ident()
        self.expect(":=")
        expr = self.expr(linear=True)
        self.expect(";")
        return Assign(name, expr)

    # predicates ------------------------------------------------------------

    def pred(self) -> Pred:
        p = self.conj()
        while self.accept("||") or self.accept("or"):
            p = Or(p, self.conj())
        return p

    def conj(self) -> Pred:
        p = self.unary()
        while self.accept("&&"):
            p = And(p, self.unary())
        return p

    def unary(self) -> Pred:
        if self.accept("!"):
            return Not(self.unary())
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        start = self.pos
        if self.at("("):
            # Either a parenthesised predicate or an arithmetic operand.
            try:
                return self.comparison()
            except DslError:
                self.pos = start
            self.expect("(")
            p = self.pred()
            self.expect(")")
            return p
        return self.comparison()

    def comparison(self) -> Pred:
        left = self.expr(linear=not self.nonlinear)
        if self.tok.kind == "op" and self.tok.text in CMP_OPS:
            op = self.tok.text
            self.pos += 1
            return Cmp(op, left, self.expr(linear=not self.nonlinear))
        raise self.error("expected comparison operator")

    # expressions -----------------------------------------------------------

    def expr(self, linear: bool) -> Expr:
        e = self.term(linear)
        while True:
            if self.accept("+"):
                e = Add(e, self.term(linear))
            elif self.accept("-"):
                e = Sub(e, self.term(linear))
            else:
                return e

    def term(self, linear: bool) -> Expr:
        e = self.factor(linear)
        while True:
            tok = self.tok
            if self.accept("*"):
                rhs = self.factor(linear)
                if linear and not (is_constant(e) or is_constant(rhs)):
                    raise SemanticError(
                        f"{tok.line}:{tok.col}: non-constant multiplier (multiplication needs a constant operand)"
                    )
                e = Mul(e, rhs)
            elif self.accept("mod") or self.accept("%"):
                k = self.tok
                if k.kind != "int" or int(k.text) <= 0:
                    raise SemanticError(f"{k.line}:{k.col}: mod divisor must be a positive integer literal")
                self.pos += 1
                e = Mod(e, int(k.text))
            else:
                return e

    def factor(self, linear: bool) -> Expr:
        tok = self.tok
        if self.accept("-"):
            return UMinus(self.factor(linear))
        if tok.kind == "int":
            self.pos += 1
            return Const(int(tok.text))
        if tok.kind == "id":
            self.pos += 1
            return Var(tok.text)
        if self.accept("("):
            e = self.expr(linear)
            self.expect(")")
            return e
        raise self.error(f"expected expression, got '{tok.text or 'end of input'}'")


def parse(source: str) -> TransitionSystem:
    """Parse a DSL program. Variable order is declaration order.

    Assignments must be affine (plus ``mod``); predicates may multiply
    variables, e.g. ``assert s = n*n``.
    """
    return _Parser(source, nonlinear=True).program()


def parse_file(path) -> TransitionSystem:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def parse_pred(text: str, nonlinear: bool = True) -> Pred:
    """Parse a standalone predicate. Products of variables are allowed by default."""
    p = _Parser(text, nonlinear=nonlinear)
    out = p.pred()
    p.eof()
    return out


def parse_expr(text: str, nonlinear: bool = True) -> Expr:
    p = _Parser(text, nonlinear=nonlinear)
    out = p.expr(linear=not nonlinear)
    p.eof()
    return out


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

_EXPR_PREC = {Add: 1, Sub: 1, Mul: 2, Mod: 2, UMinus: 3, Const: 4, Var: 4}
_PRED_PREC = {Or: 1, And: 2, Not: 3, Cmp: 4, BoolLit: 4}


def unparse_expr(e: Expr) -> str:
    if isinstance(e, Const):
        return str(e.value) if e.value >= 0 else f"({e.value})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, UMinus):
        inner = unparse_expr(e.arg)
        if _EXPR_PREC[type(e.arg)] < 3 or isinstance(e.arg, UMinus):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Mod):
        return f"{_wrap(e.arg, 2, False)} mod {e.divisor}"
    prec = _EXPR_PREC[type(e)]
    if isinstance(e, Mul):
        return f"{_wrap(e.left, prec, False)}*{_wrap(e.right, prec, True)}"
    op = "+" if isinstance(e, Add) else "-"
    return f"{_wrap(e.left, prec, False)} {op} {_wrap(e.right, prec, True)}"


def _wrap(e: Expr, prec: int, right: bool) -> str:
    s = unparse_expr(e)
    p = _EXPR_PREC[type(e)]
    if p < prec or (right and p == prec):
        return f"({s})"
    return s


def unparse_pred(p: Pred) -> str:
    if isinstance(p, BoolLit):
        return "true" if p.value else "false"
    if isinstance(p, Cmp):
        return f"{unparse_expr(p.left)} {p.op} {unparse_expr(p.right)}"
    if isinstance(p, Not):
        inner = unparse_pred(p.arg)
        if isinstance(p.arg, (And, Or, Cmp)):
            inner = f"({inner})"
        return f"!{inner}"
    op, prec = ("&&", 2) if isinstance(p, And) else ("||", 1)
    return f"{_pwrap(p.left, prec, False)} {op} {_pwrap(p.right, prec, True)}"


def _pwrap(p: Pred, prec: int, right: bool) -> str:
    s = unparse_pred(p)
    q = _PRED_PREC[type(p)]
    if q < prec or (right and q == prec):
        return f"({s})"
    return s


def unparse_stmt(s: Stmt, indent: int = 1) -> str:
    pad = "  " * indent
    if isinstance(s, Assign):
        return f"{pad}{s.name} := {unparse_expr(s.expr)};\n"
    if isinstance(s, Seq):
        return "".join(unparse_stmt(t, indent) for t in s.stmts)
    if isinstance(s, If):
        out = f"{pad}if ({unparse_pred(s.cond)}) {{\n{unparse_stmt(s.then, indent + 1)}{pad}}}"
        if s.orelse != Seq(()):
            out += f" else {{\n{unparse_stmt(s.orelse, indent + 1)}{pad}}}"
        return out + "\n"
    return (
        f"{pad}choice {{\n{unparse_stmt(s.first, indent + 1)}{pad}}} or {{\n"
        f"{unparse_stmt(s.second, indent + 1)}{pad}}}\n"
    )


def unparse_program(ts: TransitionSystem) -> str:
    return (
        f"var {', '.join(ts.vars)}: Int;\n"
        f"assume {unparse_pred(ts.pre)};\n"
        f"while ({unparse_pred(ts.guard)}) {{\n{unparse_stmt(ts.body)}}}\n"
        f"assert {unparse_pred(ts.post)};\n"
    )


# ---------------------------------------------------------------------------
# Concrete semantics
# ---------------------------------------------------------------------------


def _expr_src(e: Expr, index: dict) -> str:
    if isinstance(e, Const):
        return f"({e.value})"
    if isinstance(e, Var):
        return f"v[{index[e.name]}]"
    if isinstance(e, UMinus):
        return f"(-{_expr_src(e.arg, index)})"
    if isinstance(e, Mod):
        # Python's % with a positive divisor is the Euclidean remainder.
        return f"({_expr_src(e.arg, index)} % {e.divisor})"
    op = {Add: "+", Sub: "-", Mul: "*"}[type(e)]
    return f"({_expr_src(e.left, index)} {op} {_expr_src(e.right, index)})"


_PY_CMP = {"<=": "<=", "<": "<", "=": "==", "!=": "!=", ">=": ">=", ">": ">"}


def _pred_src(p: Pred, index: dict) -> str:
    if isinstance(p, BoolLit):
        return "True" if p.value else "False"
    if isinstance(p, Cmp):
        return f"({_expr_src(p.left, index)} {_PY_CMP[p.op]} {_expr_src(p.right, index)})"
    if isinstance(p, Not):
        return f"(not {_pred_src(p.arg, index)})"
    op = "and" if isinstance(p, And) else "or"
    return f"({_pred_src(p.left, index)} {op} {_pred_src(p.right, index)})"


@lru_cache(maxsize=4096)
def _compile_expr(e: Expr, names: tuple) -> Callable:
    index = {n: i for i, n in enumerate(names)}
    return eval(f"lambda v: {_expr_src(e, index)}")  # noqa: S307 - generated from a checked AST


@lru_cache(maxsize=4096)
def compile_pred(p: Pred, names: tuple) -> Callable:
    """Compile ``p`` into a function of a state tuple ordered as ``names``."""
    index = {n: i for i, n in enumerate(names)}
    return eval(f"lambda v: {_pred_src(p, index)}")  # noqa: S307


def _checked(value: int, name: str) -> int:
    if value < INT64_MIN or value > INT64_MAX:
        raise ArithmeticOverflow(f"64-bit overflow assigning {name} = {value}")
    return value


def _compile_stmt(s: Stmt, index: dict) -> Callable:
    names = tuple(index)
    if isinstance(s, Assign):
        f = _compile_expr(s.expr, names)
        i = index[s.name]
        name = s.name
        return lambda v: [v[:i] + (_checked(f(v), name),) + v[i + 1:]]
    if isinstance(s, Seq):
        parts = [_compile_stmt(t, index) for t in s.stmts]

        def run_seq(v):
            states = [v]
            for part in parts:
                states = [w for u in states for w in part(u)]
            return states

        return run_seq
    if isinstance(s, If):
        c = compile_pred(s.cond, names)
        a = _compile_stmt(s.then, index)
        b = _compile_stmt(s.orelse, index)
        return lambda v: a(v) if c(v) else b(v)
    a = _compile_stmt(s.first, index)
    b = _compile_stmt(s.second, index)
    return lambda v: a(v) + b(v)


def eval_expr(e: Expr, s: State, names: tuple) -> int:
    return _compile_expr(e, tuple(names))(tuple(s))


def eval_pred(p: Pred, s: State, names: tuple) -> bool:
    """Evaluate a predicate on a state with integer semantics (Euclidean mod)."""
    return bool(compile_pred(p, tuple(names))(tuple(s)))


def step(ts: TransitionSystem, s: State) -> list:
    """All successors of ``s`` under one body execution.

    Successors are deduplicated and listed in syntactic choice order.
    Raises EvaluationError if the guard is false at ``s``.
    """
    s = tuple(s)
    if not ts._guard(s):
        raise EvaluationError(f"guard is false at {s}")
    return list(dict.fromkeys(ts._body(s)))


def successors(ts: TransitionSystem, s: State) -> list:
    """Like step() but without the guard check (caller already knows it holds)."""
    return list(dict.fromkeys(ts._body(s)))


def holds_pre(ts: TransitionSystem, s: State) -> bool:
    return bool(ts._pre(s))


def holds_guard(ts: TransitionSystem, s: State) -> bool:
    return bool(ts._guard(s))


def holds_post(ts: TransitionSystem, s: State) -> bool:
    return bool(ts._post(s))
