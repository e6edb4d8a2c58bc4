"""Greedy top-down decision-tree learning with exact rational thresholds.

Inner nodes route a row left iff ``z[feature] <= threshold``. Thresholds are
midpoints of consecutive distinct integer feature values, so they always have
denominator 2 (or 1) and ``<`` / ``<=`` partition the data identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

GOOD = 1
BAD = 0
CRITERIA = ("gini", "entropy")


class LearnError(RuntimeError):
    pass


class NodeBudgetExhausted(LearnError):
    pass


class InseparableSample(LearnError):
    pass


@dataclass
class Leaf:
    label: int

    def size(self) -> int:
        return 1


@dataclass
class Inner:
    feature: int
    threshold: Fraction
    left: "Node" = None
    right: "Node" = None

    def size(self) -> int:
        return 1 + self.left.size() + self.right.size()


Node = Leaf | Inner


@dataclass
class DecisionTree:
    root: Node

    @property
    def size(self) -> int:
        return self.root.size()

    def evaluate(self, z) -> int:
        node = self.root
        while isinstance(node, Inner):
            node = node.left if z[node.feature] <= node.threshold else node.right
        return node.label

    def predict(self, Z) -> np.ndarray:
        Z = np.asarray(Z)
        out = np.empty(len(Z), dtype=np.int64)
        stack = [(self.root, np.arange(len(Z)))]
        while stack:
            node, idx = stack.pop()
            if isinstance(node, Leaf):
                out[idx] = node.label
                continue
            t = node.threshold
            # Integer data: z <= p/q  <=>  z*q <= p, exact.
            mask = Z[idx, node.feature] * t.denominator <= t.numerator
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        return out

    def leaves(self):
        """(path, label) for every leaf; path is a list of (feature, threshold, went_left)."""
        stack = [(self.root, [])]
        while stack:
            node, path = stack.pop()
            if isinstance(node, Leaf):
                yield path, node.label
            else:
                stack.append((node.right, path + [(node.feature, node.threshold, False)]))
                stack.append((node.left, path + [(node.feature, node.threshold, True)]))

    def to_json(self) -> dict:
        return _node_json(self.root)

    @classmethod
    def from_json(cls, data: dict) -> "DecisionTree":
        return cls(_node_from_json(data))


def _node_json(node: Node) -> dict:
    if isinstance(node, Leaf):
        return {"label": "good" if node.label == GOOD else "bad"}
    return {"feature": node.feature, "threshold": str(node.threshold),
            "left": _node_json(node.left), "right": _node_json(node.right)}


def _node_from_json(data: dict) -> Node:
    if "label" in data:
        return Leaf(GOOD if data["label"] in ("good", 1, True) else BAD)
    return Inner(int(data["feature"]), Fraction(data["threshold"]),
                 _node_from_json(data["left"]), _node_from_json(data["right"]))


# ---------------------------------------------------------------------------
# Impurity
# ---------------------------------------------------------------------------


def gini(labels) -> Fraction:
    labels = list(labels)
    n = len(labels)
    g = sum(1 for v in labels if v == GOOD)
    return 1 - Fraction(g, n) ** 2 - Fraction(n - g, n) ** 2


def entropy(labels) -> float:
    labels = list(labels)
    n = len(labels)
    g = sum(1 for v in labels if v == GOOD)
    return _h(g, n)


def _h(g: int, n: int) -> float:
    out = 0.0
    for c in (g, n - g):
        if c:
            p = c / n
            out -= p * math.log2(p)
    return out


def node_impurity(y, criterion: str = "gini"):
    return gini(y) if criterion == "gini" else entropy(y)


def conditional_impurity(Z, y, feature: int, threshold, criterion: str = "gini"):
    """Weighted impurity of the two sides of ``z[feature] <= threshold``.

    Gini is returned as an exact Fraction, entropy (log base 2) as a float.
    """
    Z = np.asarray(Z)
    y = np.asarray(y)
    t = Fraction(threshold)
    col = Z[:, feature] if Z.ndim == 2 else Z
    mask = np.array([Fraction(int(v)) <= t for v in col], dtype=bool)
    left, right = y[mask], y[~mask]
    if len(left) == 0 or len(right) == 0:
        raise ValueError("empty side: threshold does not split the samples")
    n = len(y)
    if criterion == "gini":
        return Fraction(len(left), n) * gini(left) + Fraction(len(right), n) * gini(right)
    if criterion == "entropy":
        return len(left) / n * entropy(left) + len(right) / n * entropy(right)
    raise ValueError(f"unknown criterion {criterion!r}")


# ---------------------------------------------------------------------------
# Split search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: Fraction
    score: object  # weighted impurity: Fraction for gini, float for entropy


def best_split(Z, y, criterion: str = "gini"):
    """Minimizing (feature, threshold) over midpoints of consecutive distinct
    values; ties go to the lowest feature, then the smallest threshold.
    Returns None when every feature is constant."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    Z = np.asarray(Z, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    n, m = Z.shape
    if n < 2:
        return None
    order = np.argsort(Z, axis=0, kind="stable")
    sv = np.take_along_axis(Z, order, axis=0)
    valid = sv[1:] != sv[:-1]
    if not valid.any():
        return None
    sy = y[order]
    g_left = np.cumsum(sy, axis=0)[:-1].astype(np.float64)
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    total_g = float(y.sum())
    g_right = total_g - g_left
    n_right = n - n_left
    b_left = n_left - g_left
    b_right = n_right - g_right
    if criterion == "gini":
        # Proportional to the weighted Gini index: 2/n * (gL bL/nL + gR bR/nR).
        score = g_left * b_left / n_left + g_right * b_right / n_right
    else:
        score = (n_left * _hv(g_left, n_left) + n_right * _hv(g_right, n_right)) / n
    score = np.where(valid, score, np.inf)
    best = score.min()
    tol = 1e-9 * max(1.0, abs(best))
    rows, cols = np.nonzero(score <= best + tol)
    cands = []
    for i, j in zip(rows.tolist(), cols.tolist()):
        thr = Fraction(int(sv[i, j]) + int(sv[i + 1, j]), 2)
        if criterion == "gini":
            gl, nl = int(g_left[i, j]), i + 1
            gr, nr = int(total_g) - gl, n - nl
            exact = Fraction(gl * (nl - gl) * nr + gr * (nr - gr) * nl, nl * nr)
        else:
            exact = float(score[i, j])
        cands.append((exact, j, thr))
    if criterion == "gini":
        lo = min(c[0] for c in cands)
        cands = [c for c in cands if c[0] == lo]
        score_out = lo * 2 / n
    else:
        score_out = float(best)
    _, j, thr = min(cands, key=lambda c: (c[1], c[2]))
    return Split(j, thr, score_out)


def _hv(g, n):
    with np.errstate(divide="ignore", invalid="ignore"):
        p = g / n
        q = 1 - p
        h = -(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1)), 0)
              + np.where(q > 0, q * np.log2(np.where(q > 0, q, 1)), 0))
    return h


def learn(Z, y, criterion: str = "gini", max_nodes: int = 63) -> DecisionTree:
    """Grow a tree to purity, depth-first and leftmost first.

    Raises NodeBudgetExhausted instead of returning a tree that misclassifies
    a training row, and InseparableSample if identical rows carry both labels.
    """
    Z = np.asarray(Z, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if Z.ndim != 2 or len(Z) == 0:
        raise ValueError("learn needs a nonempty 2-D sample")
    if len(y) != len(Z):
        raise ValueError("label count does not match sample count")
    if max_nodes < 1:
        raise ValueError("max_nodes must be positive")
    count = 1
    holder = Inner(-1, Fraction(0))  # root is attached as holder.left
    stack = [(np.arange(len(Z)), holder, "left")]
    while stack:
        idx, parent, side = stack.pop()
        labels = y[idx]
        first = labels[0]
        if (labels == first).all():
            setattr(parent, side, Leaf(int(first)))
            continue
        split = best_split(Z[idx], labels, criterion)
        if split is None:
            raise InseparableSample("identical feature vectors carry both labels")
        if count + 2 > max_nodes:
            raise NodeBudgetExhausted(f"node budget exhausted: tree needs more than {max_nodes} nodes")
        count += 2
        node = Inner(split.feature, split.threshold)
        setattr(parent, side, node)
        t = split.threshold
        mask = Z[idx, split.feature] * t.denominator <= t.numerator
        stack.append((idx[~mask], node, "right"))
        stack.append((idx[mask], node, "left"))
    return DecisionTree(holder.left)
