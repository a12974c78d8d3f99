"""Level-structured batches of rooted alternating variable/factor trees.

A :class:`Forest` stores many trees at once, one array per depth. Level 0
holds the roots (variable nodes); level ``j`` holds variable nodes for even
``j`` and factor nodes for odd ``j``. ``parents[j][i]`` is the index of node
``i``'s parent inside level ``j - 1`` and is nondecreasing, so the children of
any node are a contiguous slice of the next level. A single marked tree is a
forest with one root.

Labels are small integers per node: ``bit`` labels are 0/1, ``type9`` labels
pack the triple (mark, up, down) as ``4*mark + 2*up + down``.

The text form is a nested parenthesized expression with ``kind:label``
tokens and children sorted by their own text, e.g.
``(v:1 (f:1 (v:1) (v:1)) (f:0 (v:0) (v:1)))``. Because children are sorted,
the text is a canonical form: two trees have equal text iff they are
isomorphic as rooted, kind- and label-preserving trees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Forest",
    "MarkedTree",
    "CodeInterner",
    "StructureError",
    "LABEL_KINDS",
    "VAR_TYPES",
    "FAC_TYPES",
    "type_code",
    "type_str",
    "format_label",
    "parse_tree",
    "concat_forests",
]

LABEL_KINDS = ("none", "bit", "type9")
VAR_TYPES = frozenset({0b000, 0b001, 0b010, 0b110, 0b111})
FAC_TYPES = frozenset({0b000, 0b001, 0b010, 0b111})


class StructureError(ValueError):
    pass


def type_code(s: str) -> int:
    return int(s, 2)


def type_str(x: int) -> str:
    return format(int(x), "03b")


def format_label(label_kind: str, x) -> str:
    if label_kind == "none":
        return ""
    if label_kind == "bit":
        return str(int(x))
    return type_str(x)


def _kind(depth: int) -> str:
    return "v" if depth % 2 == 0 else "f"


@dataclass
class Forest:
    r: int
    parents: list[np.ndarray]
    labels: list[np.ndarray] | None = None
    label_kind: str = "none"
    depth_cap: int | None = None

    def __post_init__(self):
        if self.label_kind not in LABEL_KINDS:
            raise ValueError(f"unknown label kind {self.label_kind!r}")
        if self.depth_cap is None:
            self.depth_cap = len(self.parents) - 1
        if self.labels is None and self.label_kind != "none":
            raise ValueError("labelled forest without labels")

    @property
    def n_trees(self) -> int:
        return len(self.parents[0])

    @property
    def depth(self) -> int:
        return len(self.parents) - 1

    @property
    def n_nodes(self) -> int:
        return sum(len(p) for p in self.parents)

    def level_size(self, j: int) -> int:
        return len(self.parents[j]) if j < len(self.parents) else 0

    def child_counts(self, j: int) -> np.ndarray:
        if j + 1 >= len(self.parents):
            return np.zeros(self.level_size(j), dtype=np.int64)
        return np.bincount(self.parents[j + 1], minlength=self.level_size(j))

    def child_ptr(self, j: int) -> np.ndarray:
        ptr = np.zeros(self.level_size(j) + 1, dtype=np.int64)
        np.cumsum(self.child_counts(j), out=ptr[1:])
        return ptr

    def child_sum(self, j: int, values: list[np.ndarray]) -> np.ndarray:
        """Sum of ``values[j+1]`` over the children of each node at level ``j``."""
        if j + 1 >= len(self.parents) or len(self.parents[j + 1]) == 0:
            return np.zeros(self.level_size(j), dtype=np.int64)
        return np.bincount(
            self.parents[j + 1], weights=values[j + 1], minlength=self.level_size(j)
        ).astype(np.int64)

    def tree_ids(self, j: int) -> np.ndarray:
        """Index of the root tree of each node at level ``j``."""
        ids = np.arange(self.n_trees)
        for i in range(1, j + 1):
            ids = ids[self.parents[i]]
        return ids

    def with_labels(self, labels: list[np.ndarray], label_kind: str) -> "Forest":
        return Forest(self.r, self.parents, labels, label_kind, self.depth_cap)

    def unlabeled(self) -> "Forest":
        return Forest(self.r, self.parents, None, "none", self.depth_cap)

    def truncate(self, s: int) -> "Forest":
        if s < 0:
            raise ValueError("truncation depth must be >= 0")
        labels = self.labels[: s + 1] if self.labels is not None else None
        return Forest(self.r, self.parents[: s + 1], labels, self.label_kind, min(self.depth_cap, s))

    def tree(self, i: int) -> "Forest":
        """Tree ``i`` as a one-root forest."""
        lo, hi = i, i + 1
        parents, labels = [], []
        for j in range(len(self.parents)):
            par = self.parents[j][lo:hi]
            parents.append(np.full(hi - lo, -1, dtype=np.int64) if j == 0 else par - par_base)
            if self.labels is not None:
                labels.append(self.labels[j][lo:hi])
            if j + 1 < len(self.parents):
                ptr = self.child_ptr(j)
                par_base = lo
                lo, hi = int(ptr[lo]), int(ptr[hi])
        return Forest(self.r, parents, labels if self.labels is not None else None, self.label_kind, self.depth_cap)

    def nodes(self) -> list[dict]:
        """Flat node list (BFS order) with kind, depth, parent and children indices."""
        offsets = np.cumsum([0] + [len(p) for p in self.parents])
        out = []
        for j, par in enumerate(self.parents):
            ptr = self.child_ptr(j)
            for i in range(len(par)):
                node = {
                    "kind": "variable" if j % 2 == 0 else "factor",
                    "depth": j,
                    "parent": None if j == 0 else int(offsets[j - 1] + par[i]),
                    "children": list(range(int(offsets[j + 1] + ptr[i]), int(offsets[j + 1] + ptr[i + 1])))
                    if j + 1 < len(self.parents)
                    else [],
                }
                if self.labels is not None:
                    node["label"] = format_label(self.label_kind, self.labels[j][i])
                out.append(node)
        return out

    def check_arity(self) -> None:
        """Every factor above the depth cap has exactly ``r - 1`` children."""
        for j in range(1, min(self.depth, self.depth_cap), 2):
            counts = self.child_counts(j)
            if len(counts) and np.any(counts != self.r - 1):
                raise StructureError(f"factor node at depth {j} without exactly r-1={self.r - 1} children")

    def check_alphabet(self, max_depth: int | None = None) -> None:
        """Type9 labels stay inside the variable / factor alphabets."""
        if self.label_kind != "type9":
            return
        top = self.depth if max_depth is None else min(max_depth, self.depth)
        for j in range(top + 1):
            allowed = VAR_TYPES if j % 2 == 0 else FAC_TYPES
            bad = ~np.isin(self.labels[j], list(allowed))
            if np.any(bad):
                x = int(self.labels[j][np.argmax(bad)])
                raise StructureError(f"{_kind(j)}-node at depth {j} has type {type_str(x)}")

    def to_text(self) -> list[str]:
        """Canonical text of every tree in the forest."""
        interner = CodeInterner()
        return [interner.text(c) for c in interner.codes(self)]


@dataclass
class CodeInterner:
    """Assigns integer ids to canonical subtree classes.

    Ids are only meaningful inside one interner; :meth:`text` turns an id into
    the content-derived canonical text, which is stable across runs.
    """

    _ids: dict = field(default_factory=dict)
    _text: list = field(default_factory=list)

    def intern(self, kind: str, label: str, children: tuple[int, ...]) -> int:
        key = (kind, label, children)
        got = self._ids.get(key)
        if got is not None:
            return got
        token = f"{kind}:{label}" if label else kind
        if children:
            kids = " ".join(sorted(self._text[c] for c in children))
            text = f"({token} {kids})"
        else:
            text = f"({token})"
        idx = len(self._text)
        self._ids[key] = idx
        self._text.append(text)
        return idx

    def text(self, idx: int) -> str:
        return self._text[idx]

    def codes(self, forest: Forest) -> np.ndarray:
        """Class id of every root, computed bottom-up level by level."""
        below: list[int] | None = None
        for j in range(forest.depth, -1, -1):
            kind = _kind(j)
            size = forest.level_size(j)
            if forest.labels is not None:
                labels = [format_label(forest.label_kind, x) for x in forest.labels[j].tolist()]
            else:
                labels = [""] * size
            ids = []
            if below is None:
                ids = [self.intern(kind, lab, ()) for lab in labels]
            else:
                ptr = forest.child_ptr(j).tolist()
                for i in range(size):
                    kids = below[ptr[i] : ptr[i + 1]]
                    ids.append(self.intern(kind, labels[i], tuple(sorted(kids))))
            below = ids
        return np.asarray(below, dtype=np.int64)


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_tree(text: str, r: int) -> Forest:
    """Build a one-root forest from its parenthesized text form."""
    tokens = _TOKEN.findall(text)
    pos = 0

    def node():
        nonlocal pos
        if tokens[pos] != "(":
            raise StructureError(f"expected '(' at token {pos}")
        pos += 1
        head = tokens[pos]
        pos += 1
        kind, _, label = head.partition(":")
        kids = []
        while tokens[pos] != ")":
            kids.append(node())
        pos += 1
        return kind, label, kids

    try:
        root = node()
    except IndexError:
        raise StructureError("unbalanced parentheses") from None
    if pos != len(tokens):
        raise StructureError("trailing tokens after tree")

    label_lens = set()
    level = [(root, -1)]
    parents, labels = [], []
    depth = 0
    while level:
        par = []
        labs = []
        nxt = []
        for i, ((kind, label, kids), p) in enumerate(level):
            if kind != _kind(depth):
                raise StructureError(f"node of kind {kind!r} at depth {depth}")
            label_lens.add(len(label))
            par.append(p)
            labs.append(int(label, 2) if label else 0)
            nxt.extend((k, i) for k in kids)
        parents.append(np.array(par, dtype=np.int64))
        labels.append(np.array(labs, dtype=np.int8))
        level = nxt
        depth += 1
    if len(label_lens) != 1:
        raise StructureError("mixed label kinds in one tree")
    label_kind = {0: "none", 1: "bit", 3: "type9"}.get(label_lens.pop())
    if label_kind is None:
        raise StructureError("labels must be empty, one bit, or a three-bit type")
    return Forest(r, parents, None if label_kind == "none" else labels, label_kind)


def concat_forests(forests: list[Forest]) -> Forest:
    """Stack forests with the same arity and label kind into one batch."""
    if not forests:
        raise ValueError("nothing to concatenate")
    first = forests[0]
    depth = max(f.depth for f in forests)
    parents, labels = [], []
    for j in range(depth + 1):
        offset = 0
        pars, labs = [], []
        for f in forests:
            if j < len(f.parents):
                pars.append(f.parents[j] + (offset if j > 0 else 0))
                if f.labels is not None:
                    labs.append(f.labels[j])
            if j > 0:
                offset += f.level_size(j - 1)
        parents.append(np.concatenate(pars) if pars else np.zeros(0, dtype=np.int64))
        if first.labels is not None:
            labels.append(np.concatenate(labs) if labs else np.zeros(0, dtype=np.int8))
    cap = min(f.depth_cap for f in forests)
    return Forest(first.r, parents, labels if first.labels is not None else None, first.label_kind, cap)


MarkedTree = Forest
