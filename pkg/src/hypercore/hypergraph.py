"""Random r-uniform hypergraphs, their factor graphs, and k-core peeling."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytic import ModelParams

__all__ = [
    "Hypergraph",
    "FactorGraph",
    "CoreMarking",
    "HypergraphFormatError",
    "sample_hypergraph",
    "to_factor_graph",
    "peel_core",
    "core_fraction",
    "read_hypergraph",
    "write_hypergraph",
    "complete_hypergraph",
]

MAX_REDRAW_ROUNDS = 100


class HypergraphFormatError(ValueError):
    """Malformed hypergraph text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class Hypergraph:
    """``n`` vertices ``0..n-1`` and an ``(m, r)`` array of edges, rows sorted."""

    n: int
    r: int
    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, self.r)
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def validate(self) -> None:
        e = self.edges
        if len(e) == 0:
            return
        if e.min() < 0 or e.max() >= self.n:
            raise HypergraphFormatError("vertex index out of range")
        s = np.sort(e, axis=1)
        if np.any(s[:, 1:] == s[:, :-1]):
            raise HypergraphFormatError("edge with repeated vertex")
        if len(np.unique(s, axis=0)) != len(s):
            raise HypergraphFormatError("duplicate edge")


@dataclass(frozen=True)
class FactorGraph:
    """Bipartite incidence structure of an r-uniform hypergraph.

    Incidences are stored once as parallel arrays ``inc_var`` / ``inc_fac``
    (factor-major: incidence ``a*r + j`` is member ``j`` of factor ``a``).
    ``var_ptr`` / ``var_inc`` give, for each variable, the positions of its
    incidences in CSR form.
    """

    n: int
    r: int
    fac_adj: np.ndarray  # (m, r) member variables of each factor
    var_ptr: np.ndarray  # (n+1,)
    var_inc: np.ndarray  # (m*r,) incidence ids grouped by variable

    @property
    def m(self) -> int:
        return len(self.fac_adj)

    @property
    def inc_var(self) -> np.ndarray:
        return self.fac_adj.reshape(-1)

    @property
    def inc_fac(self) -> np.ndarray:
        return np.repeat(np.arange(self.m, dtype=np.int64), self.r)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    def var_adj(self, v: int) -> np.ndarray:
        """Factors incident to variable ``v``."""
        return self.var_inc[self.var_ptr[v] : self.var_ptr[v + 1]] // self.r

    def var_adj_lists(self) -> list[list[int]]:
        return [self.var_adj(v).tolist() for v in range(self.n)]

    def induced(self, var_mask: np.ndarray) -> "FactorGraph":
        """Subgraph on the marked variables, keeping factors whose members all survive."""
        keep = var_mask[self.fac_adj].all(axis=1) if self.m else np.zeros(0, bool)
        return to_factor_graph(Hypergraph(self.n, self.r, self.fac_adj[keep]))


@dataclass(frozen=True)
class CoreMarking:
    """Membership bits of the k-core: one per variable and one per factor."""

    k: int
    var_mark: np.ndarray
    fac_mark: np.ndarray
    rounds: int = 0

    @property
    def size(self) -> int:
        return int(self.var_mark.sum())


def sample_hypergraph(n: int, params: ModelParams, seed=None) -> Hypergraph:
    """Draw ``H_r(n, d/n^(r-1))``.

    The edge count is ``Bin(C(n, r), p)``; that many distinct r-subsets are then
    taken as the first distinct draws of an i.i.d. stream of uniform r-subsets,
    which is a uniform random m-set of r-subsets.
    """
    r = params.r
    if n < r:
        raise ValueError(f"need n >= r, got n={n}, r={r}")
    p = params.d / float(n) ** (r - 1)
    if p >= 1.0:
        raise ValueError(f"edge probability d/n^(r-1) = {p:.4g} is not below 1")
    rng = np.random.default_rng(seed)
    total = math.comb(n, r)
    if total < 2**62:
        m = int(rng.binomial(total, p))
    else:
        # beyond int64 the count is indistinguishable from its Poisson limit
        m = int(rng.poisson(total * p))
    if m > total:
        raise ValueError("more edges requested than r-subsets exist")
    return Hypergraph(n, r, _distinct_subsets(rng, n, r, m))


def _distinct_subsets(rng: np.random.Generator, n: int, r: int, m: int) -> np.ndarray:
    if m == 0:
        return np.zeros((0, r), dtype=np.int64)
    if n == r:
        return np.arange(r, dtype=np.int64).reshape(1, r)
    if m > math.comb(n, r) // 2:
        # dense regime (tiny n): enumerate and choose
        from itertools import combinations

        allsets = np.array(list(combinations(range(n), r)), dtype=np.int64)
        idx = np.sort(rng.choice(len(allsets), size=m, replace=False))
        return allsets[idx]
    kept = np.zeros((0, r), dtype=np.int64)
    for _ in range(MAX_REDRAW_ROUNDS):
        need = m - len(kept)
        batch = rng.integers(0, n, size=(need + need // 8 + 16, r), dtype=np.int64)
        batch.sort(axis=1)
        batch = batch[np.all(batch[:, 1:] != batch[:, :-1], axis=1)]
        stream = np.concatenate([kept, batch])
        _, first = np.unique(stream, axis=0, return_index=True)
        first.sort()
        kept = stream[first[:m]]
        if len(kept) == m:
            order = np.lexsort(kept.T[::-1])
            return kept[order]
    raise RuntimeError(f"could not draw {m} distinct {r}-subsets of {n} vertices")


def to_factor_graph(h: Hypergraph) -> FactorGraph:
    fac_adj = np.ascontiguousarray(h.edges, dtype=np.int64)
    inc_var = fac_adj.reshape(-1)
    var_inc = np.argsort(inc_var, kind="stable").astype(np.int64)
    counts = np.bincount(inc_var, minlength=h.n)
    var_ptr = np.zeros(h.n + 1, dtype=np.int64)
    np.cumsum(counts, out=var_ptr[1:])
    return FactorGraph(h.n, h.r, fac_adj, var_ptr, var_inc)


def peel_core(f: FactorGraph, k: int, lifo: bool = False) -> CoreMarking:
    """k-core by peeling: remove every factor touching a variable of degree < k.

    Each factor is removed at most once, so the work is linear in the number of
    incidences. ``rounds`` is the number of parallel peeling rounds (the depth
    of the removal cascade under FIFO processing; reported as 0 with ``lifo``).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    r = f.r
    deg = f.degrees.astype(np.int64).tolist()
    fac_alive = [True] * f.m
    var_ptr = f.var_ptr.tolist()
    var_inc = f.var_inc.tolist()
    members = f.fac_adj.tolist()
    removed = [False] * f.n
    level = [0] * f.n

    queue = deque(v for v in range(f.n) if deg[v] < k)
    for v in queue:
        removed[v] = True
        level[v] = 1
    rounds = 1 if queue else 0
    pop = queue.pop if lifo else queue.popleft
    while queue:
        v = pop()
        for i in range(var_ptr[v], var_ptr[v + 1]):
            a = var_inc[i] // r
            if not fac_alive[a]:
                continue
            fac_alive[a] = False
            for w in members[a]:
                deg[w] -= 1
                if not removed[w] and deg[w] < k:
                    removed[w] = True
                    level[w] = level[v] + 1
                    rounds = max(rounds, level[w])
                    queue.append(w)
    var_mark = ~np.array(removed, dtype=bool)
    fac_mark = np.array(fac_alive, dtype=bool)
    return CoreMarking(k, var_mark, fac_mark, 0 if lifo else rounds)


def core_fraction(m: CoreMarking) -> float:
    n = len(m.var_mark)
    return float(m.var_mark.sum()) / n if n else 0.0


def complete_hypergraph(n: int, r: int) -> Hypergraph:
    from itertools import combinations

    return Hypergraph(n, r, np.array(list(combinations(range(n), r)), dtype=np.int64))


def write_hypergraph(h: Hypergraph, path: str | Path) -> None:
    lines = [f"{h.n} {h.r} {h.m}"]
    lines.extend(" ".join(map(str, row)) for row in h.edges.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_hypergraph(path: str | Path) -> Hypergraph:
    """Parse ``n r m`` followed by ``m`` lines of ``r`` 0-based vertex indices."""
    text = Path(path).read_text().splitlines()
    rows = [(i + 1, line.split()) for i, line in enumerate(text) if line.strip()]
    if not rows:
        raise HypergraphFormatError("empty file", 1)
    lineno, head = rows[0]
    try:
        n, r, m = (int(x) for x in head)
    except ValueError:
        raise HypergraphFormatError("header must be three integers 'n r m'", lineno) from None
    if n < 0 or r < 1 or m < 0:
        raise HypergraphFormatError("header values out of range", lineno)
    if len(rows) - 1 != m:
        raise HypergraphFormatError(f"header announces {m} edges, found {len(rows) - 1}", lineno)
    edges = []
    seen = set()
    for lineno, tok in rows[1:]:
        if len(tok) != r:
            raise HypergraphFormatError(f"expected {r} vertices, got {len(tok)}", lineno)
        try:
            e = [int(x) for x in tok]
        except ValueError:
            raise HypergraphFormatError("non-integer vertex index", lineno) from None
        if any(v < 0 or v >= n for v in e):
            raise HypergraphFormatError(f"vertex index out of range [0, {n})", lineno)
        if len(set(e)) != r:
            raise HypergraphFormatError("edge with repeated vertex", lineno)
        key = tuple(sorted(e))
        if key in seen:
            raise HypergraphFormatError("duplicate edge", lineno)
        seen.add(key)
        edges.append(key)
    return Hypergraph(n, r, np.array(edges, dtype=np.int64).reshape(-1, r))
