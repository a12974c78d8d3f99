"""Hand-built marked trees and a sibling shuffler shared by the census tests."""

from __future__ import annotations

import numpy as np

from hypercore.trees import Forest

SEPARATION_LIBRARY = [
    "(v:0)",
    "(v:1)",
    "(v:0 (f:0 (v:0) (v:0)))",
    "(v:0 (f:0 (v:0) (v:1)))",
    "(v:0 (f:0 (v:1) (v:1)))",
    "(v:0 (f:1 (v:1) (v:1)))",
    "(v:1 (f:1 (v:1) (v:1)))",
    "(v:1 (f:0 (v:0) (v:1)))",
    "(v:1 (f:0 (v:0) (v:0)))",
    "(v:1 (f:1 (v:1) (v:1)) (f:1 (v:1) (v:1)))",
    "(v:1 (f:1 (v:1) (v:1)) (f:0 (v:0) (v:1)))",
    "(v:1 (f:0 (v:0) (v:1)) (f:0 (v:0) (v:1)))",
    "(v:1 (f:0 (v:0) (v:0)) (f:0 (v:0) (v:1)))",
    "(v:0 (f:0 (v:0) (v:1)) (f:0 (v:0) (v:1)))",
    "(v:0 (f:0 (v:0) (v:0)) (f:0 (v:0) (v:0)))",
    "(v:0 (f:0 (v:0) (v:0)) (f:0 (v:0) (v:0)) (f:0 (v:0) (v:0)))",
    "(v:1 (f:1 (v:1) (v:1)) (f:1 (v:1) (v:1)) (f:1 (v:1) (v:1)))",
    "(v:0 (f:0 (v:0 (f:0 (v:0) (v:0))) (v:0)))",
    "(v:0 (f:0 (v:0 (f:0 (v:0) (v:1))) (v:0)))",
    "(v:0 (f:0 (v:0 (f:0 (v:0) (v:0)) (f:0 (v:0) (v:0))) (v:0)))",
]


def permute_siblings(forest: Forest, rng: np.random.Generator) -> Forest:
    """Same trees with the children of every node listed in a random order."""
    parents = [forest.parents[0].copy()]
    labels = [forest.labels[0].copy()] if forest.labels is not None else None
    new_index = np.arange(forest.level_size(0))
    for j in range(1, forest.depth + 1):
        par = new_index[forest.parents[j]]
        order = np.lexsort((rng.random(len(par)), par))
        parents.append(par[order])
        if labels is not None:
            labels.append(forest.labels[j][order])
        new_index = np.empty(len(order), dtype=np.int64)
        new_index[order] = np.arange(len(order))
    return Forest(forest.r, parents, labels, forest.label_kind, forest.depth_cap)
