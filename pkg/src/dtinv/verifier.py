"""IsInvariant: bounded exhaustive checking and SMT-LIB2 emission.

A candidate ``inv`` (a program predicate) is a safe inductive invariant when

1. every state satisfying the precondition satisfies ``inv``;
2. ``inv`` and the guard at ``s`` imply ``inv`` at every successor of ``s``;
3. ``inv`` and the negated guard imply the assertion.

``check_bounded`` checks all three over the box [-B, B]^d, vectorized with
numpy. Conditions are scanned in that order; the witness returned is the
lexicographically first state violating the first violated condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import program as pm

VALID = "Valid"
INIT = "InitViolation"
INDUCTION = "InductionViolation"
SAFETY = "SafetyViolation"
ERROR = "Error"

_CHUNK = 1 << 21


@dataclass(frozen=True)
class Verdict:
    status: str
    bound: int | None = None
    state: tuple | None = None
    successor: tuple | None = None
    message: str = ""

    @property
    def is_valid(self) -> bool:
        return self.status == VALID

    @property
    def is_violation(self) -> bool:
        return self.status in (INIT, INDUCTION, SAFETY)

    def to_json(self) -> dict:
        out = {"status": self.status, "bound": self.bound}
        if self.state is not None:
            out["state"] = list(self.state)
        if self.successor is not None:
            out["successor"] = list(self.successor)
        if self.message:
            out["message"] = self.message
        return out

    def __str__(self) -> str:
        if self.status == VALID:
            return f"Valid(B={self.bound})"
        if self.status == INDUCTION:
            return f"{self.status}({self.state} -> {self.successor})"
        if self.status == ERROR:
            return f"Error({self.message})"
        return f"{self.status}({self.state})"


# ---------------------------------------------------------------------------
# Vectorized evaluation with overflow detection
# ---------------------------------------------------------------------------


def _ovf(mask) -> None:
    if np.any(mask):
        raise pm.ArithmeticOverflow("64-bit overflow during bounded verification")


def _add(a, b):
    a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    with np.errstate(over="ignore"):
        r = a + b
    _ovf(((a > 0) & (b > 0) & (r < 0)) | ((a < 0) & (b < 0) & (r >= 0)))
    return r


def _sub(a, b):
    a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    with np.errstate(over="ignore"):
        r = a - b
    _ovf(((a >= 0) & (b < 0) & (r < 0)) | ((a < 0) & (b > 0) & (r >= 0)))
    return r


def _neg(a):
    a = np.asarray(a, dtype=np.int64)
    _ovf(a == np.iinfo(np.int64).min)
    return -a


def _mul(a, b):
    a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    big = np.abs(a.astype(np.float64) * b.astype(np.float64)) >= 2.0**62
    if np.any(big):
        exact = np.frompyfunc(lambda x, y: int(x) * int(y), 2, 1)(a, b)
        _ovf(np.frompyfunc(lambda v: v > pm.INT64_MAX or v < pm.INT64_MIN, 1, 1)(exact).astype(bool))
    with np.errstate(over="ignore"):
        return a * b


def _expr_np(e: pm.Expr, index: dict) -> str:
    if isinstance(e, pm.Const):
        return f"({e.value})"
    if isinstance(e, pm.Var):
        return f"v[{index[e.name]}]"
    if isinstance(e, pm.UMinus):
        return f"_neg({_expr_np(e.arg, index)})"
    if isinstance(e, pm.Mod):
        return f"np.mod({_expr_np(e.arg, index)}, {e.divisor})"
    fn = {pm.Add: "_add", pm.Sub: "_sub", pm.Mul: "_mul"}[type(e)]
    return f"{fn}({_expr_np(e.left, index)}, {_expr_np(e.right, index)})"


_NP_CMP = {"<=": "<=", "<": "<", "=": "==", "!=": "!=", ">=": ">=", ">": ">"}


def _pred_np(p: pm.Pred, index: dict) -> str:
    if isinstance(p, pm.BoolLit):
        return "True" if p.value else "False"
    if isinstance(p, pm.Cmp):
        return f"({_expr_np(p.left, index)} {_NP_CMP[p.op]} {_expr_np(p.right, index)})"
    if isinstance(p, pm.Not):
        return f"np.logical_not({_pred_np(p.arg, index)})"
    fn = "np.logical_and" if isinstance(p, pm.And) else "np.logical_or"
    return f"{fn}({_pred_np(p.left, index)}, {_pred_np(p.right, index)})"


_NS = {"np": np, "_add": _add, "_sub": _sub, "_mul": _mul, "_neg": _neg}


def compile_pred_np(p: pm.Pred, names: tuple):
    """Vectorized predicate: list of equal-length int64 arrays -> bool array."""
    index = {n: i for i, n in enumerate(names)}
    f = eval(f"lambda v: {_pred_np(p, index)}", dict(_NS))  # noqa: S307 - generated from a checked AST

    def run(v):
        return np.broadcast_to(np.asarray(f(v), dtype=bool), v[0].shape)

    return run


def _compile_expr_np(e: pm.Expr, names: tuple):
    index = {n: i for i, n in enumerate(names)}
    f = eval(f"lambda v: {_expr_np(e, index)}", dict(_NS))  # noqa: S307

    def run(v):
        return np.broadcast_to(np.asarray(f(v), dtype=np.int64), v[0].shape).copy()

    return run


def compile_body_np(s: pm.Stmt, names: tuple):
    """Vectorized body: list of arrays -> list of successor variants.

    Each variant is a list of arrays; for every state, the set of its
    successors is the set of its rows across variants.
    """
    index = {n: i for i, n in enumerate(names)}
    if isinstance(s, pm.Assign):
        f = _compile_expr_np(s.expr, names)
        i = index[s.name]
        return lambda v: [v[:i] + [f(v)] + v[i + 1:]]
    if isinstance(s, pm.Seq):
        parts = [compile_body_np(t, names) for t in s.stmts]

        def run_seq(v):
            variants = [v]
            for part in parts:
                variants = [w for u in variants for w in part(u)]
            return variants

        return run_seq
    if isinstance(s, pm.Choice):
        a = compile_body_np(s.first, names)
        b = compile_body_np(s.second, names)
        return lambda v: a(v) + b(v)
    c = compile_pred_np(s.cond, names)
    a = compile_body_np(s.then, names)
    b = compile_body_np(s.orelse, names)

    def run_if(v):
        mask = c(v)
        va = a([x[mask] for x in v]) if mask.any() else None
        vb = b([x[~mask] for x in v]) if (~mask).any() else None
        k = max(len(va) if va else 1, len(vb) if vb else 1)
        out = []
        for i in range(k):
            row = [x.copy() for x in v]
            for j in range(len(v)):
                if va:
                    row[j][mask] = va[i % len(va)][j]
                if vb:
                    row[j][~mask] = vb[i % len(vb)][j]
            out.append(row)
        return out

    return run_if


# ---------------------------------------------------------------------------
# Bounded check
# ---------------------------------------------------------------------------


def _chunks(d: int, B: int):
    """Lexicographically ordered slabs of the box, as lists of flat arrays."""
    side = 2 * B + 1
    rest = side ** (d - 1)
    per = max(1, _CHUNK // rest)
    axes = [np.arange(-B, B + 1, dtype=np.int64)] * (d - 1)
    for start in range(-B, B + 1, per):
        first = np.arange(start, min(start + per, B + 1), dtype=np.int64)
        grids = np.meshgrid(first, *axes, indexing="ij")
        yield [g.ravel() for g in grids]


def check_bounded(ts: pm.TransitionSystem, inv: pm.Pred, B: int) -> Verdict:
    """Check the three invariant conditions on every state of [-B, B]^d.

    Successors that leave the box are still checked against ``inv``.
    """
    if B < 1:
        raise ValueError("bound must be >= 1")
    names = ts.vars
    pre = compile_pred_np(ts.pre, names)
    guard = compile_pred_np(ts.guard, names)
    post = compile_pred_np(ts.post, names)
    f = compile_pred_np(inv, names)
    body = compile_body_np(ts.body, names)
    found = {}
    try:
        for v in _chunks(ts.dim, B):
            fv = f(v)
            if INIT not in found:
                bad = pre(v) & ~fv
                if bad.any():
                    i = int(np.argmax(bad))
                    found[INIT] = (tuple(int(x[i]) for x in v), None)
                    break
            g = guard(v)
            if INDUCTION not in found:
                mask = fv & g
                if mask.any():
                    sub = [x[mask] for x in v]
                    variants = body(sub)
                    viol = np.zeros(len(sub[0]), dtype=bool)
                    for w in variants:
                        viol |= ~f(w)
                    if viol.any():
                        i = int(np.argmax(viol))
                        s = tuple(int(x[i]) for x in sub)
                        succ = min(tuple(int(x[i]) for x in w) for w in variants if not f([x[i:i + 1] for x in w])[0])
                        found[INDUCTION] = (s, succ)
            if SAFETY not in found:
                bad = fv & ~g & ~post(v)
                if bad.any():
                    i = int(np.argmax(bad))
                    found[SAFETY] = (tuple(int(x[i]) for x in v), None)
    except pm.ArithmeticOverflow as exc:
        return Verdict(ERROR, B, message=str(exc))
    for status in (INIT, INDUCTION, SAFETY):
        if status in found:
            s, succ = found[status]
            return Verdict(status, B, s, succ)
    return Verdict(VALID, B)


def replay_witness(ts: pm.TransitionSystem, inv: pm.Pred, verdict: Verdict) -> bool:
    """Re-check a violation with the scalar interpreter only."""
    s = verdict.state
    if s is None or len(s) != ts.dim:
        return False
    names = ts.vars
    f_s = pm.eval_pred(inv, s, names)
    if verdict.status == INIT:
        return pm.eval_pred(ts.pre, s, names) and not f_s
    if verdict.status == SAFETY:
        return f_s and not pm.eval_pred(ts.guard, s, names) and not pm.eval_pred(ts.post, s, names)
    if verdict.status == INDUCTION:
        if not (f_s and pm.eval_pred(ts.guard, s, names)):
            return False
        succ = tuple(verdict.successor or ())
        return succ in pm.step(ts, s) and not pm.eval_pred(inv, succ, names)
    return False


# ---------------------------------------------------------------------------
# SMT-LIB2
# ---------------------------------------------------------------------------


def _q(name: str) -> str:
    return f"|{name}|"


def _smt_int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def smt_expr(e: pm.Expr, env: dict) -> str:
    if isinstance(e, pm.Const):
        return _smt_int(e.value)
    if isinstance(e, pm.Var):
        return env[e.name]
    if isinstance(e, pm.UMinus):
        return f"(- {smt_expr(e.arg, env)})"
    if isinstance(e, pm.Mod):
        # SMT-LIB Int mod is the Euclidean remainder.
        return f"(mod {smt_expr(e.arg, env)} {e.divisor})"
    op = {pm.Add: "+", pm.Sub: "-", pm.Mul: "*"}[type(e)]
    return f"({op} {smt_expr(e.left, env)} {smt_expr(e.right, env)})"


def smt_pred(p: pm.Pred, env: dict) -> str:
    if isinstance(p, pm.BoolLit):
        return "true" if p.value else "false"
    if isinstance(p, pm.Cmp):
        a, b = smt_expr(p.left, env), smt_expr(p.right, env)
        if p.op == "!=":
            return f"(not (= {a} {b}))"
        return f"({p.op} {a} {b})"
    if isinstance(p, pm.Not):
        return f"(not {smt_pred(p.arg, env)})"
    op = "and" if isinstance(p, pm.And) else "or"
    return f"({op} {smt_pred(p.left, env)} {smt_pred(p.right, env)})"


class _Encoder:
    def __init__(self, names):
        self.names = names
        self.counter = {}
        self.decls = []

    def fresh(self, base: str, sort: str = "Int") -> str:
        k = self.counter.get(base, 0) + 1
        self.counter[base] = k
        sym = _q(f"{base}@{k}")
        self.decls.append((sym, sort))
        return sym

    def stmt(self, s: pm.Stmt, env: dict):
        """(constraint, env after s)."""
        if isinstance(s, pm.Assign):
            sym = self.fresh(s.name)
            out = dict(env)
            out[s.name] = sym
            return f"(= {sym} {smt_expr(s.expr, env)})", out
        if isinstance(s, pm.Seq):
            parts = []
            for t in s.stmts:
                c, env = self.stmt(t, env)
                parts.append(c)
            return _and(parts), env
        if isinstance(s, pm.If):
            cond = smt_pred(s.cond, env)
            a, b = s.then, s.orelse
        else:
            cond = self.fresh("choice", "Bool")
            a, b = s.first, s.second
        ca, ea = self.stmt(a, env)
        cb, eb = self.stmt(b, env)
        merged = dict(env)
        eqa, eqb = [], []
        for name in self.names:
            if ea[name] != eb[name]:
                sym = self.fresh(name)
                merged[name] = sym
                eqa.append(f"(= {sym} {ea[name]})")
                eqb.append(f"(= {sym} {eb[name]})")
        left = _and([cond, ca] + eqa)
        right = _and([f"(not {cond})", cb] + eqb)
        return f"(or {left} {right})", merged


def _and(parts) -> str:
    parts = [p for p in parts if p != "true"]
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"


def _is_nonlinear(node) -> bool:
    for t in pm.subterms(node):
        if isinstance(t, pm.Mul) and not (pm.is_constant(t.left) or pm.is_constant(t.right)):
            return True
    return False


def emit_smt(ts: pm.TransitionSystem, inv: pm.Pred) -> str:
    """SMT-LIB2 script with one push/pop block per invariant condition.

    Each block asserts the negation of its condition, so ``unsat`` on all
    three means ``inv`` is a safe inductive invariant.
    """
    names = ts.vars
    nonlinear = any(_is_nonlinear(p) for p in (ts.pre, ts.guard, ts.body, ts.post, inv))
    logic = "QF_NIA" if nonlinear else "QF_LIA"
    cur = {n: n if _plain(n) else _q(n) for n in names}
    nxt = {n: _q(f"{n}'") for n in names}
    enc = _Encoder(names)
    trans, final = enc.stmt(ts.body, cur)
    frame = _and([trans] + [f"(= {nxt[n]} {final[n]})" for n in names])
    params = " ".join(f"({cur[n]} Int)" for n in names)
    args_cur = " ".join(cur[n] for n in names)
    args_nxt = " ".join(nxt[n] for n in names)

    lines = ["; invariant verification conditions", f"; logic: {logic}"]
    if nonlinear:
        lines.append("; product terms present: nonlinear integer arithmetic (QF_NIA)")
    lines += ["(set-option :produce-models true)", f"(set-logic {logic})"]
    lines += [f"(declare-const {cur[n]} Int)" for n in names]
    lines += [f"(declare-const {nxt[n]} Int)" for n in names]
    lines += [f"(declare-const {sym} {sort})" for sym, sort in enc.decls]
    for fn, pred in (("pre", ts.pre), ("guard", ts.guard), ("post", ts.post), ("inv", inv)):
        lines.append(f"(define-fun {fn} ({params}) Bool {smt_pred(pred, cur)})")
    blocks = [
        ("init => inv", f"(and (pre {args_cur}) (not (inv {args_cur})))"),
        ("inv && guard && body => inv'",
         f"(and (inv {args_cur}) (guard {args_cur}) {frame} (not (inv {args_nxt})))"),
        ("inv && !guard => post", f"(and (inv {args_cur}) (not (guard {args_cur})) (not (post {args_cur})))"),
    ]
    for i, (title, body) in enumerate(blocks, 1):
        lines += [f"; condition {i}: {title}", "(push 1)", f"(assert {body})", "(check-sat)",
                  "(get-model)", "(pop 1)"]
    return "\n".join(lines) + "\n"


_RESERVED = {"pre", "guard", "post", "inv", "and", "or", "not", "mod", "div", "abs", "true", "false",
             "let", "ite", "distinct", "forall", "exists", "assert", "Int", "Bool"}


def _plain(name: str) -> bool:
    return name not in _RESERVED
