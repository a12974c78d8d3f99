"""Synchronous Warning Propagation on r-uniform factor graphs.

Messages live on incidences (factor-major order, see :class:`FactorGraph`):
``v2f[i]`` is the message from variable ``inc_var[i]`` to factor ``i // r``
and ``f2v[i]`` the message in the opposite direction. One step computes both
families from the previous state only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import FactorGraph

__all__ = [
    "MessageState",
    "WpMarks",
    "WpResult",
    "MonotonicityError",
    "wp_init",
    "wp_step",
    "wp_marks",
    "wp_run",
    "wp_run_t",
    "default_max_t",
    "trace_csv",
    "trace_row",
]

TRACE_HEADER = "t,v2f_ones,f2v_ones,var_marks,fac_marks"


class MonotonicityError(AssertionError):
    pass


@dataclass(frozen=True)
class MessageState:
    t: int
    v2f: np.ndarray
    f2v: np.ndarray

    def same_messages(self, other: "MessageState") -> bool:
        return np.array_equal(self.v2f, other.v2f) and np.array_equal(self.f2v, other.f2v)


@dataclass(frozen=True)
class WpMarks:
    t: int
    var_mark: np.ndarray
    fac_mark: np.ndarray


@dataclass
class WpResult:
    marks: WpMarks
    t_fix: int
    converged: bool
    trace: list[tuple[int, int, int, int, int]] = field(default_factory=list)


def wp_init(f: FactorGraph) -> MessageState:
    ones = np.ones(f.m * f.r, dtype=bool)
    return MessageState(0, ones, ones.copy())


def _incoming_var_sums(f: FactorGraph, f2v: np.ndarray) -> np.ndarray:
    return np.bincount(f.inc_var, weights=f2v, minlength=f.n).astype(np.int64)


def wp_step(s: MessageState, f: FactorGraph, k: int, check: bool = False) -> MessageState:
    """One synchronous round.

    ``v2f(t+1) = 1{sum of f2v(t) into v from factors other than a >= k-1}`` and
    ``f2v(t+1) = 1{sum of v2f(t) into a from members other than v == r-1}``.
    """
    r = f.r
    var_sum = _incoming_var_sums(f, s.f2v)
    v2f = (var_sum[f.inc_var] - s.f2v) >= k - 1
    per_fac = s.v2f.reshape(-1, r)
    f2v = ((per_fac.sum(axis=1, keepdims=True) - per_fac) == r - 1).reshape(-1)
    if check and (np.any(v2f & ~s.v2f) or np.any(f2v & ~s.f2v)):
        raise MonotonicityError(f"a message increased between t={s.t} and t={s.t + 1}")
    return MessageState(s.t + 1, v2f, f2v)


def wp_marks(s: MessageState, f: FactorGraph, k: int) -> WpMarks:
    var_mark = _incoming_var_sums(f, s.f2v) >= k
    fac_mark = s.v2f.reshape(-1, f.r).sum(axis=1) == f.r
    return WpMarks(s.t, var_mark, fac_mark)


def default_max_t(n: int) -> int:
    return 4 * (2 + math.ceil(math.log2(n + 1)))


def trace_row(s: MessageState, m: WpMarks) -> tuple[int, int, int, int, int]:
    return (s.t, int(s.v2f.sum()), int(s.f2v.sum()), int(m.var_mark.sum()), int(m.fac_mark.sum()))


def wp_run(f: FactorGraph, k: int, max_t: int | None = None, check: bool = False) -> WpResult:
    """Iterate to the fixed point.

    ``t_fix`` is the first ``t`` whose state equals the state at ``t - 1``; the
    fixed point is therefore already in place at ``t_fix - 1``. With ``check``
    every message and mark bit is asserted nonincreasing step by step.
    """
    if max_t is None:
        max_t = default_max_t(f.n)
    if max_t < 1:
        raise ValueError("max_t must be >= 1")
    s = wp_init(f)
    marks = wp_marks(s, f, k)
    trace = [trace_row(s, marks)]
    for _ in range(max_t):
        nxt = wp_step(s, f, k, check=check)
        nxt_marks = wp_marks(nxt, f, k)
        if check and (
            np.any(nxt_marks.var_mark & ~marks.var_mark) or np.any(nxt_marks.fac_mark & ~marks.fac_mark)
        ):
            raise MonotonicityError(f"a mark increased between t={s.t} and t={nxt.t}")
        trace.append(trace_row(nxt, nxt_marks))
        if nxt.same_messages(s):
            return WpResult(nxt_marks, nxt.t, True, trace)
        s, marks = nxt, nxt_marks
    return WpResult(marks, s.t, False, trace)


def wp_run_t(f: FactorGraph, k: int, t: int) -> WpMarks:
    """Marks after exactly ``t`` synchronous rounds."""
    if t < 0:
        raise ValueError("t must be >= 0")
    s = wp_init(f)
    for _ in range(t):
        nxt = wp_step(s, f, k)
        if nxt.same_messages(s):
            s = MessageState(t, s.v2f, s.f2v)
            break
        s = nxt
    return wp_marks(s, f, k)


def trace_csv(trace: list[tuple[int, int, int, int, int]]) -> str:
    lines = [TRACE_HEADER]
    lines.extend(",".join(map(str, row)) for row in trace)
    return "\n".join(lines) + "\n"
