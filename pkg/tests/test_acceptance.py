"""Acceptance criteria 1-9.

Each criterion is one test named ``test_criterion_<n>_<label>``; the conftest
hook prints one PASS/FAIL line per criterion after the run. The file can also
be executed directly (``python3 tests/test_acceptance.py``).
"""

from __future__ import annotations

import itertools
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from dtinv import dtlearn as D  # noqa: E402
from dtinv import features as F  # noqa: E402
from dtinv import formula as fm  # noqa: E402
from dtinv import pac  # noqa: E402
from dtinv import pipeline as pl  # noqa: E402
from dtinv import program as pm  # noqa: E402
from dtinv import sampler as S  # noqa: E402
from dtinv import verifier as V  # noqa: E402
from helpers import BENCHMARKS, naive_check, rand_formula, rand_pred, rand_program, running  # noqa: E402


# ---------------------------------------------------------------------------
# 1. Golden path on the running example
# ---------------------------------------------------------------------------


def test_criterion_1_golden_path():
    ts = running()
    res = S.sample(ts)
    H = F.octagon_slopes(ts.vars)
    assert H.H[3] == (1, 1)  # feature 3 is x + y
    tree = D.learn(F.transform(res.X, H), res.y, "gini", 63)
    root = tree.root
    assert (root.feature, root.threshold) == (3, Fraction(-1, 2))
    assert isinstance(root.left, D.Leaf) and root.left.label == D.GOOD
    right = root.right
    assert (right.feature, right.threshold) == (3, Fraction(1, 2))
    assert (right.left.label, right.right.label) == (D.BAD, D.GOOD)
    f = fm.simplify(fm.dt_to_form(tree, H), H.terms)
    assert fm.format_formula(f, H.terms) == "x + y != 0"
    t = time.perf_counter()
    verdict = V.check_bounded(ts, fm.to_pred(f, H.terms), 50)
    elapsed = time.perf_counter() - t
    assert verdict.status == V.VALID and verdict.bound == 50
    assert elapsed < 1.0, elapsed


# ---------------------------------------------------------------------------
# 2. Transform fidelity
# ---------------------------------------------------------------------------


def test_criterion_2_transform_fidelity():
    H = F.octagon_slopes(["x", "y"])
    Z = F.transform(np.array([[0, 1], [2, -2]]), H)
    assert Z.tolist() == [[0, 1, -1, 1], [2, -2, 4, 0]]


# ---------------------------------------------------------------------------
# 3. Octagon slope counts
# ---------------------------------------------------------------------------


def test_criterion_3_slope_counts():
    for d in range(1, 7):
        brute = set()
        for v in itertools.product((-1, 0, 1), repeat=d):
            if 1 <= sum(1 for a in v if a) <= 2 and tuple(-a for a in v) not in brute:
                brute.add(v)
        H = F.octagon_slopes(d).H
        assert len(H) == d * d == len(brute)
        assert {F.canonical(v) for v in brute} == set(H)


# ---------------------------------------------------------------------------
# 4. Impurity identities
# ---------------------------------------------------------------------------


def test_criterion_4_impurity_identities():
    G, B = D.GOOD, D.BAD
    rng = np.random.default_rng(4)
    for _ in range(50):
        n_bad, n_good = rng.integers(1, 20, size=2)
        Z = np.concatenate([rng.integers(-10, 0, size=n_bad), rng.integers(1, 10, size=n_good)])[:, None]
        y = np.array([B] * n_bad + [G] * n_good)
        assert abs(D.conditional_impurity(Z, y, 0, Fraction(1, 2), "entropy")) <= 1e-12
        assert D.conditional_impurity(Z, y, 0, Fraction(1, 2), "gini") == 0
    assert abs(D.entropy([G, B]) - 1.0) <= 1e-12
    assert abs(D.entropy([G] * 7 + [B] * 7) - 1.0) <= 1e-12
    assert abs(float(D.gini([G, B])) - 0.5) <= 1e-12
    assert D.gini([G] * 7 + [B] * 7) == Fraction(1, 2)


# ---------------------------------------------------------------------------
# 5. Tree / formula / sample consistency
# ---------------------------------------------------------------------------


def _holds_np(f, X):
    """Vectorized truth values of a formula over the rows of X (test oracle)."""
    if isinstance(f, fm.Const):
        return np.full(len(X), f.value)
    if isinstance(f, fm.Atom):
        lhs = X @ np.array(f.w, dtype=np.int64)
        # lhs REL p/q  <=>  lhs*q REL p  (q > 0)
        a, c = lhs * f.c.denominator, f.c.numerator
        return {"<=": a <= c, "<": a < c, "=": a == c, "!=": a != c, ">=": a >= c, ">": a > c}[f.rel]
    if isinstance(f, fm.Not):
        return ~_holds_np(f.arg, X)
    parts = [_holds_np(g, X) for g in f.args]
    return np.logical_and.reduce(parts) if isinstance(f, fm.And) else np.logical_or.reduce(parts)


def _random_sample(rng: random.Random, d: int, n: int):
    """Either a sampler-produced sample of a random program, or random
    distinct points labeled by a random formula with label noise."""
    if rng.random() < 0.3:
        ts = pm.parse(rand_program(rng, min(d, 3)))
        try:
            res = S.sample(ts, S.SamplerConfig(((2, 8, 1), (3, 8, 1)), max_states=500))
        except S.SamplerError:
            res = None
        if isinstance(res, S.SampleSet) and len(res) <= 500:
            return res.X, res.y
    pts = np.array(sorted({tuple(rng.randint(-8, 8) for _ in range(d)) for _ in range(n)}), dtype=np.int64)
    f = rand_formula(rng, d)
    y = _holds_np(f, pts).astype(np.int64)
    flips = np.array([rng.random() < 0.1 for _ in range(len(pts))])
    y = np.where(flips, 1 - y, y)
    return pts, y


def test_criterion_5_consistency():
    rng = random.Random(5)
    for trial in range(200):
        d, n = rng.randint(1, 4), rng.randint(2, 500)
        X, y = _random_sample(rng, d, n)
        d = X.shape[1]
        H = F.octagon_slopes(d)
        Z = F.transform(X, H)
        tree = D.learn(Z, y, "gini" if trial % 2 == 0 else "entropy", max_nodes=2 * len(X) + 1)
        assert np.array_equal(tree.predict(Z), y), trial
        f = fm.dt_to_form(tree, H)
        assert np.array_equal(_holds_np(f, X).astype(np.int64), y), trial
        s = fm.simplify(f, H.terms)
        grid = np.array(list(itertools.product(range(-8, 9), repeat=d)), dtype=np.int64)
        assert np.array_equal(_holds_np(f, grid), _holds_np(s, grid)), trial


# ---------------------------------------------------------------------------
# 6. Verifier oracle agreement
# ---------------------------------------------------------------------------


def test_criterion_6_verifier_oracle():
    rng = random.Random(6)
    statuses = set()
    for _ in range(50):
        d = rng.randint(1, 3)
        ts = pm.parse(rand_program(rng, d))
        inv = pm.parse_pred(rand_pred(rng, list(ts.vars)))
        if rng.random() < 0.6:
            # Candidates that contain the initial states reach the induction
            # and safety checks instead of failing init immediately.
            inv = pm.Or(ts.pre, inv)
        v = V.check_bounded(ts, inv, 8)
        assert (v.status, v.state, v.successor) == naive_check(ts, inv, 8)
        statuses.add(v.status)
    assert len(statuses) >= 3  # the random pairs exercise several outcomes


# ---------------------------------------------------------------------------
# 7. Nonlinear features
# ---------------------------------------------------------------------------


def _infer_file(name):
    source = (BENCHMARKS / f"{name}.dtinv").read_text()
    t = time.perf_counter()
    res = pl.infer_invariant(pm.parse(source), pl.config_for_source(source))
    return res, time.perf_counter() - t


def test_criterion_7_nonlinear_features():
    parity, t1 = _infer_file("parity")
    assert parity.status == pl.VERIFIED and "x mod 2" in parity.text and t1 < 30
    square, t2 = _infer_file("square")
    assert square.status == pl.VERIFIED and t2 < 30
    conjuncts = [pm.unparse_pred(c) for c in _conjuncts(square.predicate)]
    assert "s = i*i" in conjuncts, square.text


def _conjuncts(p):
    if isinstance(p, pm.And):
        return _conjuncts(p.left) + _conjuncts(p.right)
    return [p]


# ---------------------------------------------------------------------------
# 8. Learning scalability
# ---------------------------------------------------------------------------


def _scaling_data(n, seed=8):
    rng = np.random.default_rng(seed)
    Z = rng.integers(-100, 101, size=(n, 16))
    y = (((Z[:, 3] <= 10) & (Z[:, 7] > -20)) | (Z[:, 1] > 50)).astype(np.int64)
    return Z, y


def _best_time(Z, y, reps=3):
    best = float("inf")
    for _ in range(reps):
        t = time.perf_counter()
        D.learn(Z, y, "gini", max_nodes=10 ** 6)
        best = min(best, time.perf_counter() - t)
    return best


def test_criterion_8_learning_scalability():
    Z, y = _scaling_data(100_000)
    t_half = _best_time(Z[:50_000], y[:50_000])
    t_full = _best_time(Z, y)
    assert t_full < 10.0, t_full
    assert t_full <= 3 * t_half, (t_half, t_full)


# ---------------------------------------------------------------------------
# 9. PAC calculator
# ---------------------------------------------------------------------------


def test_criterion_9_pac_calculator():
    mpmath.mp.dps = 50
    rng = random.Random(9)
    for _ in range(1000):
        eps, delta = rng.uniform(1e-4, 0.9999), rng.uniform(1e-4, 0.9999)
        K, d = rng.randint(2, 500), rng.randint(1, 20)
        vc_mp = int(mpmath.ceil(K * d * mpmath.log(K, 2)))
        vc = pac.dt_vc_bound(K, d)
        assert abs(vc - vc_mp) <= 1
        e, dl = mpmath.mpf(eps), mpmath.mpf(delta)
        exact = mpmath.ceil(max(4 / e * mpmath.log(2 / dl), 8 * vc / e * mpmath.log(13 / e)))
        assert abs(pac.blumer_bound(eps, delta, vc) - int(exact)) <= 1
        exact_q = mpmath.ceil(max(4 / e * mpmath.log(2 / dl), 8 * vc_mp / e * mpmath.log(13 / e)))
        assert abs(pac.sample_size_for(pac.PacQuery(eps, delta, K, d)) - int(exact_q)) <= 1


if __name__ == "__main__":
    tests = sorted((name, fn) for name, fn in globals().items() if name.startswith("test_criterion_"))
    failed = 0
    for name, fn in sorted(tests, key=lambda kv: int(kv[0].split("_")[2])):
        num, label = name.split("_")[2], " ".join(name.split("_")[3:])
        try:
            fn()
            print(f"criterion {num} ({label}): PASS")
        except Exception as exc:  # noqa: BLE001
            failed += 1
            print(f"criterion {num} ({label}): FAIL {type(exc).__name__}: {exc}")
    sys.exit(1 if failed else 0)
