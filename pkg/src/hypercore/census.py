"""Neighbourhood censuses of factor graphs and tree samplers.

A census maps canonical codes of depth-``s`` marked rooted balls to masses.
Radius counts factor-graph edges: a variable's incident factors are at
distance 1 and its hypergraph neighbours at distance 2::

    s=0   v
    s=1   v - a - ...            (factors of v)
    s=2   v - a - {w1, w2}       (other members of those factors)

Codes are the UTF-8 bytes of the canonical text of
:class:`~hypercore.trees.CodeInterner`, so they are content-derived and stable
across runs. Balls that contain a cycle are pooled under ``NONTREE:<s>``.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .hypergraph import FactorGraph
from .trees import CodeInterner, Forest, StructureError

__all__ = [
    "Ball",
    "NeighborhoodDistribution",
    "ComparisonReport",
    "DomainError",
    "nontree_code",
    "expand_balls",
    "truncate_neighborhood",
    "canonical_code",
    "forest_codes",
    "empirical_distribution",
    "mc_distribution",
    "tv_distance",
    "tv_null_samples",
    "compare",
    "ball_match_fraction",
    "DEFAULT_BATCH",
]

DEFAULT_BATCH = 10**4


class DomainError(ValueError):
    pass


def nontree_code(s: int) -> bytes:
    return f"NONTREE:{s}".encode()


@dataclass
class Ball:
    forest: Forest
    is_tree: bool


def _has_duplicates(keys: np.ndarray) -> np.ndarray:
    """Mask of keys that occur more than once."""
    if len(keys) == 0:
        return np.zeros(0, dtype=bool)
    _, inv, counts = np.unique(keys, return_inverse=True, return_counts=True)
    return counts[inv] > 1


def expand_balls(f: FactorGraph, roots: np.ndarray, s: int,
                 var_marks: np.ndarray | None = None, fac_marks: np.ndarray | None = None) -> tuple[Forest, np.ndarray]:
    """Non-backtracking expansion of depth ``s`` around each root, as a forest.

    Returns the forest (bit labels when marks are given) and a boolean mask of
    roots whose ball is a tree. In a bipartite graph no edge joins two nodes
    at the same distance, so the ball is a tree exactly when no node is
    reached twice by the expansion.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    roots = np.asarray(roots, dtype=np.int64)
    if var_marks is None and fac_marks is not None:
        raise ValueError("factor marks without variable marks")
    r = f.r
    deg = f.degrees
    ent = roots
    parent_ent = np.full(len(roots), -1, dtype=np.int64)
    root_of = np.arange(len(roots), dtype=np.int64)
    parents = [np.full(len(roots), -1, dtype=np.int64)]
    entities = [ent]
    roots_of = [root_of]
    for j in range(s):
        idx = np.arange(len(ent), dtype=np.int64)
        if j % 2 == 0:
            counts = deg[ent]
            par = np.repeat(idx, counts)
            start = np.repeat(f.var_ptr[ent], counts)
            offs = np.arange(len(par)) - np.repeat(np.cumsum(counts) - counts, counts)
            child = f.var_inc[start + offs] // r
        else:
            par = np.repeat(idx, r)
            child = f.fac_adj[ent].reshape(-1)
        keep = child != parent_ent[par]
        par, child = par[keep], child[keep]
        parents.append(par)
        entities.append(child)
        roots_of.append(root_of[par])
        parent_ent = ent[par]
        ent, root_of = child, root_of[par]
    is_tree = np.ones(len(roots), dtype=bool)
    for parity in (0, 1):
        levels = range(parity, s + 1, 2)
        if not len(levels):
            continue
        n_ent = f.n if parity == 0 else max(f.m, 1)
        keys = np.concatenate([roots_of[j] * n_ent + entities[j] for j in levels])
        owners = np.concatenate([roots_of[j] for j in levels])
        is_tree[owners[_has_duplicates(keys)]] = False
    if var_marks is None:
        return Forest(r, parents, None, "none", s), is_tree
    labels = []
    for j, e in enumerate(entities):
        if j % 2 == 0:
            labels.append(np.asarray(var_marks)[e].astype(np.int8))
        elif fac_marks is None:
            raise ValueError("factor marks are required for marked balls of radius >= 1")
        else:
            labels.append(np.asarray(fac_marks)[e].astype(np.int8))
    return Forest(r, parents, labels, "bit", s), is_tree


def truncate_neighborhood(f: FactorGraph, v: int, s: int, var_marks=None, fac_marks=None) -> Ball:
    """Depth-``s`` ball around variable ``v`` with its marks and a tree flag."""
    if not 0 <= v < f.n:
        raise ValueError(f"variable {v} out of range")
    forest, is_tree = expand_balls(f, np.array([v]), s, var_marks, fac_marks)
    return Ball(forest, bool(is_tree[0]))


def forest_codes(forest: Forest, interner: CodeInterner | None = None) -> list[bytes]:
    interner = interner or CodeInterner()
    return [interner.text(c).encode() for c in interner.codes(forest)]


def canonical_code(tree: Forest | Ball) -> bytes:
    """Code of a single rooted marked tree; equal codes iff isomorphic."""
    if isinstance(tree, Ball):
        if not tree.is_tree:
            raise StructureError("neighbourhood contains a cycle")
        tree = tree.forest
    if tree.n_trees != 1:
        raise StructureError(f"expected a single rooted tree, got {tree.n_trees}")
    return forest_codes(tree)[0]


@dataclass
class NeighborhoodDistribution:
    s: int
    weights: dict[bytes, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.weights.values()))

    def add(self, code: bytes, weight: float = 1.0) -> None:
        self.weights[code] = self.weights.get(code, 0.0) + weight

    def normalized(self) -> dict[bytes, float]:
        tot = self.total
        if tot <= 0:
            raise DomainError("distribution has zero total mass")
        return {c: w / tot for c, w in self.weights.items()}

    def mass(self, code: bytes) -> float:
        return self.normalized().get(code, 0.0)

    def merge(self, other: "NeighborhoodDistribution") -> "NeighborhoodDistribution":
        if other.s != self.s:
            raise DomainError(f"cannot merge depth {self.s} with depth {other.s}")
        out = NeighborhoodDistribution(self.s, dict(self.weights))
        for c, w in other.weights.items():
            out.add(c, w)
        return out

    def to_json(self) -> dict:
        weights = {c.hex(): self.weights[c] for c in sorted(self.weights)}
        return {"s": self.s, "total": self.total, "weights": weights}

    @classmethod
    def from_json(cls, obj: dict) -> "NeighborhoodDistribution":
        try:
            s = int(obj["s"])
            weights = {bytes.fromhex(k): float(v) for k, v in obj["weights"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed distribution: {exc}") from None
        return cls(s, weights)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "NeighborhoodDistribution":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: {exc}") from None
        return cls.from_json(obj)


def _count(codes: list[bytes], s: int) -> NeighborhoodDistribution:
    dist = NeighborhoodDistribution(s)
    for c, w in Counter(codes).items():
        dist.add(c, float(w))
    return dist


def empirical_distribution(f: FactorGraph, s: int, var_marks=None, fac_marks=None,
                           batch: int = 10**5) -> NeighborhoodDistribution:
    """One unit of mass per variable at the code of its depth-``s`` ball."""
    dist = NeighborhoodDistribution(s)
    interner = CodeInterner()
    nt = nontree_code(s)
    for lo in range(0, f.n, batch):
        roots = np.arange(lo, min(lo + batch, f.n))
        forest, is_tree = expand_balls(f, roots, s, var_marks, fac_marks)
        codes = forest_codes(forest, interner)
        codes = [c if t else nt for c, t in zip(codes, is_tree.tolist())]
        dist = dist.merge(_count(codes, s))
    return dist


Sampler = Callable[[np.random.SeedSequence, int], Forest]


def mc_distribution(sampler: Sampler, s: int, n_samples: int, seed=None,
                    batch: int = DEFAULT_BATCH) -> NeighborhoodDistribution:
    """Census of ``n_samples`` i.i.d. trees truncated at depth ``s``.

    ``sampler(seed_sequence, n_trees)`` must return a forest of depth ``>= s``.
    Batch ``i`` always uses child ``i`` of ``SeedSequence(seed)``, so the
    result depends only on ``(seed, n_samples, batch)``.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    if batch < 1:
        raise ValueError("batch must be >= 1")
    n_batches = -(-n_samples // batch)
    seeds = np.random.SeedSequence(seed).spawn(n_batches)
    interner = CodeInterner()
    dist = NeighborhoodDistribution(s)
    for i, ss in enumerate(seeds):
        size = min(batch, n_samples - i * batch)
        forest = sampler(ss, size)
        if forest.depth_cap < s:
            raise DomainError(f"sampler produced trees of depth {forest.depth_cap} < {s}")
        dist = dist.merge(_count(forest_codes(forest.truncate(s), interner), s))
    return dist


def tv_distance(a: NeighborhoodDistribution, b: NeighborhoodDistribution) -> float:
    na, nb = a.normalized(), b.normalized()
    keys = set(na) | set(nb)
    return 0.5 * sum(abs(na.get(c, 0.0) - nb.get(c, 0.0)) for c in keys)


def tv_null_samples(a: NeighborhoodDistribution, b: NeighborhoodDistribution, n_boot: int = 1000,
                    seed=None) -> np.ndarray:
    """TV values of resampled pairs drawn from the pooled law with the same totals.

    Under the hypothesis that ``a`` and ``b`` are samples of one law, the
    observed TV is one more draw from this distribution, so its quantiles give
    the Monte Carlo noise floor of the comparison.
    """
    if a.total <= 0 or b.total <= 0:
        raise DomainError("distribution has zero total mass")
    keys = sorted(set(a.weights) | set(b.weights))
    pooled = np.array([a.weights.get(c, 0.0) + b.weights.get(c, 0.0) for c in keys])
    pooled /= pooled.sum()
    na, nb = int(round(a.total)), int(round(b.total))
    rng = np.random.default_rng(seed)
    xa = rng.multinomial(na, pooled, size=n_boot) / na
    xb = rng.multinomial(nb, pooled, size=n_boot) / nb
    return 0.5 * np.abs(xa - xb).sum(axis=1)


@dataclass
class ComparisonReport:
    tv: float
    n_classes: int
    top_discrepancies: list[tuple[bytes, float, float]]

    def to_json(self) -> dict:
        return {
            "tv": self.tv,
            "n_classes": self.n_classes,
            "top_discrepancies": [
                {"code": c.hex(), "text": c.decode(), "mass_a": x, "mass_b": y}
                for c, x, y in self.top_discrepancies
            ],
        }


def compare(a: NeighborhoodDistribution, b: NeighborhoodDistribution, top: int = 10) -> ComparisonReport:
    if a.s != b.s:
        raise DomainError(f"depth mismatch: {a.s} vs {b.s}")
    na, nb = a.normalized(), b.normalized()
    keys = sorted(set(na) | set(nb))
    rows = [(c, na.get(c, 0.0), nb.get(c, 0.0)) for c in keys]
    rows.sort(key=lambda x: (-abs(x[1] - x[2]), x[0]))
    return ComparisonReport(tv_distance(a, b), len(keys), rows[:top])


def ball_match_fraction(f: FactorGraph, tau: Forest, s: int, var_marks=None, fac_marks=None) -> float:
    """Fraction of variables whose depth-``s`` marked ball is isomorphic to that of ``tau``."""
    if f.n == 0:
        raise DomainError("graph without variables")
    target = canonical_code(tau.truncate(s))
    dist = empirical_distribution(f, s, var_marks, fac_marks)
    return dist.weights.get(target, 0.0) / f.n
