"""Good/bad state sampling by bounded forward execution."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .program import TransitionSystem, holds_guard, holds_post, holds_pre, successors

GOOD = 1
BAD = 0


class SamplerError(RuntimeError):
    pass


class InsufficientSamples(SamplerError):
    pass


@dataclass(frozen=True)
class Unsafe:
    """A state that is both reachable and able to violate the assertion."""

    witness: tuple


def default_schedule() -> tuple:
    """(2,16,1) up to (32,512,3): L and I double and M grows by one per
    round, each component stopping at its cap."""
    out = [(2, 16, 1)]
    while out[-1] != (32, 512, 3):
        L, I, M = out[-1]
        out.append((min(2 * L, 32), min(2 * I, 512), min(M + 1, 3)))
    return tuple(out)


@dataclass
class SamplerConfig:
    """Sampler bounds: box radius L, iteration budget I, perturbation margin M.

    ``schedule`` lists the (L, I, M) rounds tried in order; ``L``/``I``/``M``
    hold the first round for single-round calls.
    """

    schedule: tuple = field(default_factory=default_schedule)
    max_states: int = 200_000

    def __post_init__(self):
        self.schedule = tuple(tuple(int(v) for v in r) for r in self.schedule)
        if not self.schedule:
            raise ValueError("empty escalation schedule")
        for L, I, M in self.schedule:
            if L < 1 or I < 1 or M < 1:
                raise ValueError(f"sampler bounds must be >= 1, got L={L} I={I} M={M}")
        if self.max_states < 1:
            raise ValueError("max_states must be positive")

    @classmethod
    def single(cls, L: int, I: int, M: int, max_states: int = 200_000) -> "SamplerConfig":
        return cls(schedule=((L, I, M),), max_states=max_states)

    @property
    def L(self) -> int:
        return self.schedule[0][0]

    @property
    def I(self) -> int:  # noqa: E743
        return self.schedule[0][1]

    @property
    def M(self) -> int:
        return self.schedule[0][2]


@dataclass
class SampleSet:
    X: np.ndarray  # n x d, int64
    y: np.ndarray  # n, 1 = good, 0 = bad
    vars: tuple = ()
    bounds: tuple = ()  # (L, I, M) of the round that produced the sample

    @property
    def good(self) -> list:
        return [tuple(int(v) for v in r) for r in self.X[self.y == GOOD]]

    @property
    def bad(self) -> list:
        return [tuple(int(v) for v in r) for r in self.X[self.y == BAD]]

    def __len__(self) -> int:
        return len(self.y)

    def to_json(self) -> dict:
        return {"vars": list(self.vars), "good": [list(s) for s in self.good],
                "bad": [list(s) for s in self.bad]}

    @classmethod
    def from_states(cls, good, bad, vars=(), bounds=()) -> "SampleSet":
        good = sorted(set(map(tuple, good)))
        bad = sorted(set(map(tuple, bad)))
        overlap = set(good) & set(bad)
        if overlap:
            raise ValueError(f"state labelled both good and bad: {min(overlap)}")
        rows = good + bad
        d = len(vars) if vars else (len(rows[0]) if rows else 0)
        X = np.array(rows, dtype=np.int64).reshape(len(rows), d)
        y = np.array([GOOD] * len(good) + [BAD] * len(bad), dtype=np.int64)
        return cls(X, y, tuple(vars), tuple(bounds))

    @classmethod
    def from_json(cls, data: dict) -> "SampleSet":
        return cls.from_states(data["good"], data["bad"], data.get("vars", ()))


def _box(d: int, radius: int):
    return itertools.product(range(-radius, radius + 1), repeat=d)


def _run_good(ts: TransitionSystem, s0: tuple, iters: int, out: dict):
    frontier = [s0]
    out.setdefault(s0, None)
    for _ in range(iters):
        nxt = {}
        for s in frontier:
            if holds_guard(ts, s):
                for t in successors(ts, s):
                    if t not in out:
                        out[t] = None
                        nxt[t] = None
        if not nxt:
            return
        frontier = list(nxt)


def sample_good(ts: TransitionSystem, cfg: SamplerConfig) -> set:
    """Loop-head states reached from pre-states in [-L, L]^d within I iterations."""
    L, I, _ = cfg.schedule[0]
    out: dict = {}
    for s0 in _box(ts.dim, L):
        if holds_pre(ts, s0):
            _run_good(ts, s0, I, out)
    return set(out)


def failing_path(ts: TransitionSystem, s0: tuple, iters: int):
    """A run from ``s0`` that exits within ``iters`` iterations and violates
    the assertion, as a list of loop-head states; None if there is none.

    Choice resolutions are explored breadth-first in syntactic order.
    """
    parent = {s0: None}
    frontier = [s0]
    for depth in range(iters + 1):
        nxt = []
        for s in frontier:
            if not holds_guard(ts, s):
                if not holds_post(ts, s):
                    path = [s]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    return path[::-1]
                continue
            if depth == iters:
                continue
            for t in successors(ts, s):
                if t not in parent:
                    parent[t] = s
                    nxt.append(t)
        if not nxt:
            break
        frontier = nxt
    return None


def _neighbours(s: tuple, margin: int):
    for delta in _box(len(s), margin):
        yield tuple(a + b for a, b in zip(s, delta))


def sample_bad(ts: TransitionSystem, good: set, cfg: SamplerConfig) -> set:
    """States on failing runs started within L-inf distance M of a good state."""
    _, I, M = cfg.schedule[0]
    good = set(good)
    starts = set()
    for g in good:
        starts.update(_neighbours(g, M))
    starts -= good
    bad: dict = {}
    for b in sorted(starts):
        if b in bad:
            continue
        path = failing_path(ts, b, I)
        if path is not None:
            for s in path:
                bad.setdefault(s, None)
    return set(bad)


def sample(ts: TransitionSystem, cfg: SamplerConfig | None = None):
    """Sample good and bad states, escalating through ``cfg.schedule``.

    Returns a SampleSet, or Unsafe when some state is both reachable and bad.
    Raises InsufficientSamples when no round yields both classes within
    ``cfg.max_states``.
    """
    cfg = cfg or SamplerConfig()
    last = None
    for L, I, M in cfg.schedule:
        rnd = SamplerConfig.single(L, I, M, cfg.max_states)
        good = sample_good(ts, rnd)
        failing = sorted(s for s in good if not holds_guard(ts, s) and not holds_post(ts, s))
        if failing:
            return Unsafe(failing[0])
        bad = sample_bad(ts, good, rnd) if good else set()
        clash = good & bad
        if clash:
            return Unsafe(min(clash))
        if len(good) + len(bad) > cfg.max_states:
            break
        last = (good, bad, (L, I, M))
        if good and bad:
            return SampleSet.from_states(good, bad, ts.vars, (L, I, M))
    if last is None:
        raise InsufficientSamples(f"insufficient samples: even the first round exceeds max_states={cfg.max_states}")
    good, bad, _ = last
    raise InsufficientSamples(f"insufficient samples: {len(good)} good, {len(bad)} bad after escalation")
