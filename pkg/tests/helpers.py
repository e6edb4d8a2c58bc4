"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's vectorized or cached code
paths: they interpret the AST directly with Python integers.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from pathlib import Path

from dtinv import formula as fm
from dtinv import program as pm

ROOT = Path(__file__).resolve().parent.parent
BENCHMARKS = ROOT / "benchmarks"

# Running example: x + y is preserved and starts nonzero.
RUNNING_SRC = """\
var x, y: Int;
assume x = 0 && y != 0;
while (y != 0) {
  if (y < 0) {
    x := x - 1; y := y + 1;
  } else {
    x := x + 1; y := y - 1;
  }
}
assert x != 0;
"""

UNSAFE_SRC = "var x: Int; assume x = 0; while (false) {} assert x = 1;"


def running():
    return pm.parse(RUNNING_SRC)


# ---------------------------------------------------------------------------
# Naive AST interpreter (independent of program.compile_* and verifier)
# ---------------------------------------------------------------------------


def n_expr(e, env):
    if isinstance(e, pm.Const):
        return e.value
    if isinstance(e, pm.Var):
        return env[e.name]
    if isinstance(e, pm.UMinus):
        return -n_expr(e.arg, env)
    if isinstance(e, pm.Add):
        return n_expr(e.left, env) + n_expr(e.right, env)
    if isinstance(e, pm.Sub):
        return n_expr(e.left, env) - n_expr(e.right, env)
    if isinstance(e, pm.Mul):
        return n_expr(e.left, env) * n_expr(e.right, env)
    if isinstance(e, pm.Mod):
        return n_expr(e.arg, env) % e.divisor  # Python % is Euclidean for k > 0
    raise TypeError(e)


def n_pred(p, env):
    if isinstance(p, pm.BoolLit):
        return p.value
    if isinstance(p, pm.Cmp):
        a, b = n_expr(p.left, env), n_expr(p.right, env)
        return {"<=": a <= b, "<": a < b, "=": a == b, "!=": a != b, ">=": a >= b, ">": a > b}[p.op]
    if isinstance(p, pm.And):
        return n_pred(p.left, env) and n_pred(p.right, env)
    if isinstance(p, pm.Or):
        return n_pred(p.left, env) or n_pred(p.right, env)
    if isinstance(p, pm.Not):
        return not n_pred(p.arg, env)
    raise TypeError(p)


def n_stmt(s, env):
    """All environments after executing ``s`` (list, syntactic order)."""
    if isinstance(s, pm.Assign):
        out = dict(env)
        out[s.name] = n_expr(s.expr, env)
        return [out]
    if isinstance(s, pm.Seq):
        envs = [env]
        for t in s.stmts:
            envs = [e2 for e1 in envs for e2 in n_stmt(t, e1)]
        return envs
    if isinstance(s, pm.If):
        return n_stmt(s.then if n_pred(s.cond, env) else s.orelse, env)
    if isinstance(s, pm.Choice):
        return n_stmt(s.first, env) + n_stmt(s.second, env)
    raise TypeError(s)


def n_step(ts, state):
    env = dict(zip(ts.vars, state))
    return sorted({tuple(e[v] for v in ts.vars) for e in n_stmt(ts.body, env)})


def naive_check(ts, inv, B):
    """Triple-nested scan: conditions in order init, induction, safety; the
    lexicographically first state within the first violated condition.
    Returns (status, state, successor)."""
    box = list(itertools.product(range(-B, B + 1), repeat=ts.dim))

    def env(s):
        return dict(zip(ts.vars, s))

    for s in box:
        if n_pred(ts.pre, env(s)) and not n_pred(inv, env(s)):
            return ("InitViolation", s, None)
    for s in box:
        if n_pred(inv, env(s)) and n_pred(ts.guard, env(s)):
            for t in n_step(ts, s):
                if not n_pred(inv, env(t)):
                    return ("InductionViolation", s, t)
    for s in box:
        if n_pred(inv, env(s)) and not n_pred(ts.guard, env(s)) and not n_pred(ts.post, env(s)):
            return ("SafetyViolation", s, None)
    return ("Valid", None, None)


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------

_OPS = ("<=", "<", "=", "!=", ">=", ">")


def rand_linear(rng: random.Random, vars, max_coef=2, max_const=4) -> str:
    parts = []
    for v in vars:
        c = rng.randint(-max_coef, max_coef)
        if c:
            parts.append(f"{c}*{v}" if abs(c) != 1 else (v if c == 1 else f"-{v}"))
    if not parts:
        parts.append(rng.choice(vars))
    k = rng.randint(-max_const, max_const)
    text = " + ".join(parts)
    return f"{text} + {k}" if k else text


def rand_pred(rng: random.Random, vars, depth=2) -> str:
    if depth == 0 or rng.random() < 0.4:
        return f"{rand_linear(rng, vars)} {rng.choice(_OPS)} {rng.randint(-3, 3)}"
    kind = rng.choice(("&&", "||", "!"))
    if kind == "!":
        return f"!({rand_pred(rng, vars, depth - 1)})"
    return f"({rand_pred(rng, vars, depth - 1)}) {kind} ({rand_pred(rng, vars, depth - 1)})"


def rand_stmt(rng: random.Random, vars, depth=1) -> str:
    r = rng.random()
    if depth > 0 and r < 0.2:
        return (f"if ({rand_pred(rng, vars, 1)}) {{ {rand_stmt(rng, vars, depth - 1)} }} "
                f"else {{ {rand_stmt(rng, vars, depth - 1)} }}")
    if depth > 0 and r < 0.35:
        return f"choice {{ {rand_stmt(rng, vars, depth - 1)} }} or {{ {rand_stmt(rng, vars, depth - 1)} }}"
    v = rng.choice(vars)
    return f"{v} := {rand_linear(rng, vars, 1, 2)};"


def rand_program(rng: random.Random, d: int) -> str:
    vars = ["x", "y", "z"][:d] if d <= 3 else [f"v{i}" for i in range(d)]
    body = " ".join(rand_stmt(rng, vars) for _ in range(rng.randint(1, 3)))
    return (f"var {', '.join(vars)}: Int;\nassume {rand_pred(rng, vars)};\n"
            f"while ({rand_pred(rng, vars, 1)}) {{ {body} }}\nassert {rand_pred(rng, vars)};\n")


def rand_formula(rng: random.Random, d: int, depth=3):
    """Random formula AST over d integer columns with rational bounds."""
    if depth == 0 or rng.random() < 0.3:
        w = [rng.randint(-2, 2) for _ in range(d)]
        if not any(w):
            w[rng.randrange(d)] = 1
        c = Fraction(rng.randint(-12, 12), rng.choice((1, 2)))
        return fm.Atom(tuple(w), rng.choice(fm.RELS), c)
    kind = rng.choice(("and", "or", "not", "const"))
    if kind == "const":
        return rng.choice((fm.TRUE, fm.FALSE))
    if kind == "not":
        return fm.Not(rand_formula(rng, d, depth - 1))
    args = tuple(rand_formula(rng, d, depth - 1) for _ in range(rng.randint(2, 3)))
    return fm.And(args) if kind == "and" else fm.Or(args)
