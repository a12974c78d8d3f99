"""Samplers for the tree processes describing neighbourhoods of core-marked random hypergraphs.

All samplers return a :class:`~hypercore.trees.Forest` of ``n_trees``
independent trees grown level by level to exactly ``depth_cap``:

* :func:`sample_T` -- the Poisson tree: variables have ``Po(c)`` factor
  children, factors have ``r-1`` variable children;
* :func:`tree_wp` / :func:`sample_Tt` -- Warning Propagation run on a sampled
  tree (bottom-up marks);
* :func:`truncated_messages` -- upward messages with frozen ``Be(p*)``
  boundary bits;
* :func:`sample_T_star` -- the top-down two-type process of upward messages;
* :func:`topdown_decorate` -- adds top-down messages and marks, giving
  9-type labels;
* :func:`sample_hatT` -- the 9-type process sampled directly from its
  offspring laws, and :func:`project_to_binary` -- its first-bit projection.

Type9 labels pack (mark, up, down) as ``4*mark + 2*up + down``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import ModelParams, coefficients
from .sampling import binomial_trunc, poisson_trunc
from .trees import Forest, StructureError

__all__ = [
    "NodeBudgetError",
    "TreeWp",
    "DEFAULT_NODE_BUDGET",
    "sample_T",
    "tree_wp",
    "sample_Tt",
    "truncated_messages",
    "boundary_level",
    "sample_truncated",
    "sample_T_star",
    "topdown_decorate",
    "sample_hatT_star",
    "sample_hatT",
    "project_to_binary",
    "T000", "T001", "T010", "T110", "T111",
]

DEFAULT_NODE_BUDGET = 10**7

T000, T001, T010, T110, T111 = 0b000, 0b001, 0b010, 0b110, 0b111


class NodeBudgetError(RuntimeError):
    pass


def _assemble(pieces: list[tuple[np.ndarray, np.ndarray, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Children of one level from ``(parent_idx, counts, child_label)`` pieces.

    The result is sorted by parent so every parent's children are contiguous.
    """
    pars, labs = [], []
    for idx, counts, label in pieces:
        counts = np.asarray(counts, dtype=np.int64)
        if len(idx) == 0 or not counts.any():
            continue
        par = np.repeat(idx, counts)
        pars.append(par)
        labs.append(np.full(len(par), label, dtype=np.int8))
    if not pars:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8)
    par = np.concatenate(pars)
    lab = np.concatenate(labs)
    order = np.argsort(par, kind="stable")
    return par[order], lab[order]


def _grow(r, root_labels, depth_cap, offspring, label_kind, budget):
    if depth_cap < 0:
        raise ValueError("depth_cap must be >= 0")
    parents = [np.full(len(root_labels), -1, dtype=np.int64)]
    labels = [np.asarray(root_labels, dtype=np.int8)]
    total = len(root_labels)
    for j in range(depth_cap):
        par, lab = offspring(j, labels[-1])
        total += len(par)
        if total > budget:
            raise NodeBudgetError(f"tree batch exceeded the node budget of {budget} at depth {j + 1}")
        parents.append(par)
        labels.append(lab)
    return Forest(r, parents, None if label_kind == "none" else labels, label_kind, depth_cap)


def sample_T(params: ModelParams, depth_cap: int, seed=None, n_trees: int = 1,
             budget: int = DEFAULT_NODE_BUDGET) -> Forest:
    """Unlabeled Poisson trees."""
    rng = np.random.default_rng(seed)
    r, c = params.r, params.c

    def offspring(j, labs):
        idx = np.arange(len(labs))
        if j % 2 == 0:
            counts = rng.poisson(c, len(labs))
        else:
            counts = np.full(len(labs), r - 1)
        return _assemble([(idx, counts, 0)])

    return _grow(r, np.zeros(n_trees), depth_cap, offspring, "none", budget)


@dataclass
class TreeWp:
    """Per-level Warning Propagation bits on a tree batch after ``t`` rounds."""

    t: int
    up: list[np.ndarray]
    down: list[np.ndarray]
    mark: list[np.ndarray]


def tree_wp(forest: Forest, k: int, steps: int) -> TreeWp:
    """Run ``steps`` synchronous WP rounds on every tree of the batch.

    ``up[j][i]`` is the message from node ``i`` of level ``j`` to its parent
    (for the root, ``1{sum of incoming >= k-1}``), ``down[j][i]`` the message
    from the parent (0 at the root). Nodes at ``depth_cap`` stand for
    unexplored subtrees and keep sending 1 upward. Within this light cone the
    result is exact: the labels at depth ``<= s`` after ``t`` rounds are those
    of the untruncated tree whenever ``depth_cap >= s + t + 1``.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    r = forest.r
    D = forest.depth
    frontier = forest.depth_cap
    up = [np.ones(forest.level_size(j), dtype=np.int64) for j in range(D + 1)]
    down = [np.ones(forest.level_size(j), dtype=np.int64) for j in range(D + 1)]
    down[0][:] = 0

    def child_sums(vals):
        return [forest.child_sum(j, vals) for j in range(D + 1)]

    for _ in range(steps):
        cs = child_sums(up)
        new_up, new_down = [], [down[0]]
        for j in range(D + 1):
            if j >= frontier:
                new_up.append(up[j])
            elif j % 2 == 0:
                new_up.append((cs[j] >= k - 1).astype(np.int64))
            else:
                new_up.append((cs[j] == r - 1).astype(np.int64))
        for j in range(1, D + 1):
            par = forest.parents[j]
            excl = down[j - 1][par] + cs[j - 1][par] - up[j]
            if (j - 1) % 2 == 0:
                new_down.append((excl >= k - 1).astype(np.int64))
            else:
                new_down.append((excl == r - 1).astype(np.int64))
        up, down = new_up, new_down
    cs = child_sums(up)
    mark = []
    for j in range(D + 1):
        tot = down[j] + cs[j]
        mark.append((tot >= k if j % 2 == 0 else tot == r).astype(np.int8))
    return TreeWp(steps, up, down, mark)


def sample_Tt(params: ModelParams, t: int, depth: int, seed=None, n_trees: int = 1,
              budget: int = DEFAULT_NODE_BUDGET) -> Forest:
    """Poisson trees labelled by their WP marks after ``t`` rounds, exact to ``depth``."""
    cap = depth + t + 1
    forest = sample_T(params, cap, seed, n_trees, budget)
    res = tree_wp(forest, params.k, t)
    return forest.with_labels(res.mark, "bit").truncate(depth)


def boundary_level(s: int) -> int:
    """Depth of the frozen boundary variables for truncation parameter ``s``.

    Variables at depth ``>= s`` carry their boundary bit when ``s`` is even;
    for odd ``s`` the boundary is the variable level ``s + 1``.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    return s if s % 2 == 0 else s + 1


def truncated_messages(forest: Forest, s: int, u: int, p_star: float, k: int, seed=None,
                       beta: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """Upward messages ``mu*(u | T, s)`` with frozen Bernoulli boundary bits.

    Every variable node gets an independent ``Be(p_star)`` bit ``beta`` (or the
    given ``beta``). At ``u = 0`` variables send ``beta`` and factors send 1.
    For ``u > 0`` variables at or below the boundary level keep ``beta``;
    variables above it send ``1{#children sending 1 >= k-1}`` and factors
    send ``1{#children sending 1 == r-1}``, both from round ``u - 1``.
    All labels at depth ``<= s`` are fixed from ``u = boundary_level(s)`` on.
    """
    b = boundary_level(s)
    if forest.depth_cap < b:
        raise ValueError(f"truncated messages at s={s} need trees of depth >= {b}")
    if u < 0:
        raise ValueError("u must be >= 0")
    r = forest.r
    D = forest.depth
    if beta is None:
        rng = np.random.default_rng(seed)
        beta = [
            (rng.random(forest.level_size(j)) < p_star).astype(np.int64) if j % 2 == 0 else None
            for j in range(D + 1)
        ]
    msg = [beta[j].copy() if j % 2 == 0 else np.ones(forest.level_size(j), dtype=np.int64) for j in range(D + 1)]
    for _ in range(u):
        new = []
        for j in range(D + 1):
            if j % 2 == 0:
                if j >= b:
                    new.append(beta[j])
                else:
                    new.append((forest.child_sum(j, msg) >= k - 1).astype(np.int64))
            elif j == D and j == forest.depth_cap:
                # childless frontier factors lie below the boundary and never reach depth <= s
                new.append(msg[j])
            else:
                new.append((forest.child_sum(j, msg) == r - 1).astype(np.int64))
        msg = new
    return [m.astype(np.int8) for m in msg]


def sample_truncated(params: ModelParams, p_star: float, s: int, seed=None, n_trees: int = 1,
                     u: int | None = None, budget: int = DEFAULT_NODE_BUDGET) -> Forest:
    """Poisson trees to depth ``s`` labelled by ``mu*(u | T, s)`` (default ``u = s``)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    tree_seed, beta_seed = ss.spawn(2)
    b = boundary_level(s)
    forest = sample_T(params, b, tree_seed, n_trees, budget)
    msgs = truncated_messages(forest, s, b if u is None else u, p_star, params.k, beta_seed)
    return forest.with_labels(msgs, "bit").truncate(s)


def sample_T_star(params: ModelParams, p_star: float, depth_cap: int, seed=None, n_trees: int = 1,
                  budget: int = DEFAULT_NODE_BUDGET) -> Forest:
    """Top-down two-type trees whose labels are the upward messages."""
    if not 0.0 <= p_star <= 1.0:
        raise ValueError("p_star must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    r, k, c = params.r, params.k, params.c
    mu1 = c * p_star ** (r - 1)
    mu0 = c * (1.0 - p_star ** (r - 1))

    def offspring(j, labs):
        idx = np.arange(len(labs))
        if j % 2 == 0:
            zero, one = idx[labs == 0], idx[labs == 1]
            return _assemble([
                (idx, rng.poisson(mu0, len(idx)), 0),
                (zero, poisson_trunc(rng, mu1, len(zero), hi=k - 1), 1),
                (one, poisson_trunc(rng, mu1, len(one), lo=k - 1), 1),
            ])
        zero, one = idx[labs == 0], idx[labs == 1]
        n1 = binomial_trunc(rng, r - 1, p_star, len(zero), hi=r - 1)
        return _assemble([
            (one, np.full(len(one), r - 1), 1),
            (zero, n1, 1),
            (zero, (r - 1) - n1, 0),
        ])

    roots = (rng.random(n_trees) < p_star).astype(np.int8)
    return _grow(r, roots, depth_cap, offspring, "bit", budget)


def topdown_decorate(forest: Forest, k: int) -> Forest:
    """Add top-down messages and marks to a tree labelled by upward messages.

    The root receives 0 from above. A factor child ``a`` of ``u`` receives
    ``1{down(u) + #other children of u sending 1 >= k-1}``; a variable child
    ``v`` of ``a`` receives ``1{down(a) + #other children of a sending 1 == r-1}``.
    Variables are marked ``1{down + #children sending 1 >= k}``, factors
    ``1{down + #children sending 1 == r}``. Labels at ``depth_cap`` lack their
    children and are only meaningful above it.
    """
    if forest.label_kind != "bit":
        raise StructureError("decoration needs a tree labelled by upward message bits")
    forest.check_arity()
    r = forest.r
    D = forest.depth
    up = [lab.astype(np.int64) for lab in forest.labels]
    cs = [forest.child_sum(j, up) for j in range(D + 1)]
    down = [np.zeros(forest.level_size(0), dtype=np.int64)]
    for j in range(1, D + 1):
        par = forest.parents[j]
        excl = down[j - 1][par] + cs[j - 1][par] - up[j]
        down.append((excl >= k - 1 if (j - 1) % 2 == 0 else excl == r - 1).astype(np.int64))
    labels = []
    for j in range(D + 1):
        tot = down[j] + cs[j]
        mark = (tot >= k) if j % 2 == 0 else (tot == r)
        labels.append((4 * mark.astype(np.int64) + 2 * up[j] + down[j]).astype(np.int8))
    return forest.with_labels(labels, "type9")


def sample_hatT_star(params: ModelParams, p_star: float, depth: int, seed=None, n_trees: int = 1,
                     budget: int = DEFAULT_NODE_BUDGET) -> Forest:
    """Decorated top-down trees, exact to ``depth`` (grown one level deeper)."""
    forest = sample_T_star(params, p_star, depth + 1, seed, n_trees, budget)
    return topdown_decorate(forest, params.k).truncate(depth)


def sample_hatT(params: ModelParams, p: float, depth_cap: int, seed=None, n_trees: int = 1,
                budget: int = DEFAULT_NODE_BUDGET) -> Forest:
    """The 9-type process drawn directly from its offspring laws.

    Type-0 factor children of a variable arrive at rate ``c (1 - p^(r-1))``,
    type-1 (up-message 1) factor children at rate ``c p^(r-1)`` with the
    truncations dictated by the parent's type:

    ====  =====================================================================
    000   Po(c(1-p^(r-1))) x 000,  Po_{<k-1}(c p^(r-1)) x 010
    001   w.p. q_bar: Po(c(1-p^(r-1))) x 001 + (k-2) x 010;
          else Po(c(1-p^(r-1))) x 000 + Po_{<k-2}(c p^(r-1)) x 010
    010   Po(c(1-p^(r-1))) x 001 + (k-1) x 010
    110   Po(c(1-p^(r-1))) x 001 + Po_{>=k}(c p^(r-1)) x 111
    111   Po(c(1-p^(r-1))) x 001 + Po_{>=k-1}(c p^(r-1)) x 111
    ====  =====================================================================

    Factors have ``r-1`` children; "up" children (010 or 110, chosen with
    probabilities q and 1-q) number ``Bin_{<r-1}(r-1, p)`` for 000, all
    ``r-1`` for 010, and for 001 either one 001 child plus ``r-2`` up children
    (w.p. q_tilde) or ``Bin_{<r-2}(r-1, p)`` up children. The other children
    are 000. A 111 factor has ``r-1`` children of type 111. The root is 000,
    010 or 110 with probabilities ``1-p``, ``p q`` and ``p (1-q)``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    r, k, c = params.r, params.k, params.c
    co = coefficients(params, p)
    q, q_bar, q_tilde = co.q, co.q_bar, co.q_tilde
    mu1 = c * p ** (r - 1)
    mu0 = c * (1.0 - p ** (r - 1))

    def split_up(idx, n_up):
        n010 = rng.binomial(n_up, q)
        return [(idx, n010, T010), (idx, n_up - n010, T110)]

    def var_offspring(labs):
        idx = np.arange(len(labs))
        by = {t: idx[labs == t] for t in (T000, T001, T010, T110, T111)}
        a = by[T001]
        first = rng.random(len(a)) < q_bar
        a1, a2 = a[first], a[~first]
        pieces = [
            (by[T000], rng.poisson(mu0, len(by[T000])), T000),
            (by[T000], poisson_trunc(rng, mu1, len(by[T000]), hi=k - 1), T010),
            (a1, rng.poisson(mu0, len(a1)), T001),
            (a1, np.full(len(a1), k - 2), T010),
            (a2, rng.poisson(mu0, len(a2)), T000),
            (a2, poisson_trunc(rng, mu1, len(a2), hi=k - 2), T010),
            (by[T010], rng.poisson(mu0, len(by[T010])), T001),
            (by[T010], np.full(len(by[T010]), k - 1), T010),
            (by[T110], rng.poisson(mu0, len(by[T110])), T001),
            (by[T110], poisson_trunc(rng, mu1, len(by[T110]), lo=k), T111),
            (by[T111], rng.poisson(mu0, len(by[T111])), T001),
            (by[T111], poisson_trunc(rng, mu1, len(by[T111]), lo=k - 1), T111),
        ]
        return _assemble(pieces)

    def fac_offspring(labs):
        idx = np.arange(len(labs))
        by = {t: idx[labs == t] for t in (T000, T001, T010, T111)}
        pieces = []
        f0 = by[T000]
        n_up = binomial_trunc(rng, r - 1, p, len(f0), hi=r - 1)
        pieces += split_up(f0, n_up) + [(f0, (r - 1) - n_up, T000)]
        f1 = by[T001]
        first = rng.random(len(f1)) < q_tilde
        b1, b2 = f1[first], f1[~first]
        pieces += [(b1, np.ones(len(b1), dtype=np.int64), T001)]
        pieces += split_up(b1, np.full(len(b1), r - 2))
        n_up2 = binomial_trunc(rng, r - 1, p, len(b2), hi=r - 2)
        pieces += split_up(b2, n_up2) + [(b2, (r - 1) - n_up2, T000)]
        f2 = by[T010]
        pieces += split_up(f2, np.full(len(f2), r - 1))
        pieces += [(by[T111], np.full(len(by[T111]), r - 1), T111)]
        return _assemble(pieces)

    def offspring(j, labs):
        return var_offspring(labs) if j % 2 == 0 else fac_offspring(labs)

    u = rng.random(n_trees)
    roots = np.where(u < 1.0 - p, T000, np.where(u < 1.0 - p + p * q, T010, T110)).astype(np.int8)
    return _grow(r, roots, depth_cap, offspring, "type9", budget)


def project_to_binary(forest: Forest) -> Forest:
    """Keep the mark bit of every 9-type label."""
    if forest.label_kind != "type9":
        raise StructureError("projection needs 9-type labels")
    return forest.with_labels([(lab >> 2).astype(np.int8) for lab in forest.labels], "bit")
