"""Sample-size bounds for consistent learners of bounded decision trees.

Logs in the Blumer bound are natural logs. The VC bound for trees with at
most K nodes over d features is only known asymptotically, O(K d log K);
``dt_vc_bound`` uses the constant 1 and log base 2, a heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

VC_CONSTANT = 1.0
VC_NOTE = "VC bound K*d*log2(K) uses constant 1: heuristic, only the asymptotic form is known"
LOG_NOTE = "Blumer bound uses natural logarithms"


@dataclass(frozen=True)
class PacQuery:
    epsilon: float
    delta: float
    K: int
    d: int

    def __post_init__(self):
        _check_unit("epsilon", self.epsilon)
        _check_unit("delta", self.delta)
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.d < 1:
            raise ValueError("d must be >= 1")


def _check_unit(name: str, v: float) -> None:
    if not 0 < v < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {v}")


def blumer_terms(epsilon: float, delta: float, vc: int) -> tuple:
    """The two terms of max(4/eps ln(2/delta), 8 VC/eps ln(13/eps))."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    if vc < 1:
        raise ValueError("VC dimension must be >= 1")
    return (4 / epsilon * math.log(2 / delta), 8 * vc / epsilon * math.log(13 / epsilon))


def blumer_bound(epsilon: float, delta: float, vc: int) -> int:
    return math.ceil(max(blumer_terms(epsilon, delta, vc)))


def dt_vc_bound(K: int, d: int) -> int:
    if K < 2:
        raise ValueError("K must be >= 2")
    if d < 1:
        raise ValueError("d must be >= 1")
    return math.ceil(VC_CONSTANT * K * d * math.log2(K))


def sample_size_for(q: PacQuery) -> int:
    return blumer_bound(q.epsilon, q.delta, dt_vc_bound(q.K, q.d))
