"""Truncation, re-rooting with type swaps, and related tree surgery."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import BadPosition, NotTypeOne
from .trees import Address, MultitypeSpatialTree, _resolve, truncate_at

__all__ = [
    "RerootPlan",
    "RerootResult",
    "plan_reroot",
    "reroot",
    "reroot_full",
    "truncate_at",
    "rebase_displacements",
    "min_label_vertex",
    "exit_truncate",
]


@dataclass(frozen=True)
class RerootPlan:
    """The ancestral line of v0 and the nodes whose type flips."""

    v0: Address
    line: Tuple[Address, ...]
    line_types: Tuple[int, ...]
    positions: Tuple[int, ...]        # j(u, v0) for each line node except v0
    swap_3_to_4: Tuple[Address, ...]  # type 3 whose line-child has type 2
    swap_4_to_3: Tuple[Address, ...]  # type 4 whose line-child has type 1

    @property
    def balanced(self) -> bool:
        return len(self.swap_3_to_4) == len(self.swap_4_to_3)

    @property
    def v0_hat(self) -> Address:
        """Address of the old root inside the re-rooted tree: 1 u^{2p} ... u^2."""
        return (1,) + tuple(reversed(self.v0[1:]))


def plan_reroot(tree: MultitypeSpatialTree, v0) -> RerootPlan:
    i0 = _resolve(tree, v0)
    if tree.types[i0] != 1:
        raise NotTypeOne(f"vertex {tree.address(i0)} has type {tree.types[i0]}")
    line = tree.ancestry(i0)
    types = tree.types
    s34, s43, pos = [], [], []
    for a, b in zip(line[:-1], line[1:]):
        pos.append(int(tree.sibling_rank[b]))
        if types[a] == 3 and types[b] == 2:
            s34.append(tree.address(a))
        elif types[a] == 4 and types[b] == 1:
            s43.append(tree.address(a))
    return RerootPlan(
        v0=tree.address(i0),
        line=tuple(tree.address(a) for a in line),
        line_types=tuple(int(types[a]) for a in line),
        positions=tuple(pos),
        swap_3_to_4=tuple(s34),
        swap_4_to_3=tuple(s43),
    )


@dataclass(frozen=True)
class RerootResult:
    tree: MultitypeSpatialTree
    origin: np.ndarray   # origin[i] = index in the input tree of new node i
    v0_hat: int          # index of the old root in the new tree


def reroot_full(tree: MultitypeSpatialTree, v0, swap_types: bool = True) -> RerootResult:
    """Re-root at the type-1 vertex v0 after discarding its descendants.

    The planar orientation is reversed. On the ancestral line, a type-3 node
    whose line-child has type 2 becomes type 4 and a type-4 node whose
    line-child has type 1 becomes type 3 (``swap_types=False`` disables
    this, which is only useful as a negative control). Type-1/2 labels are
    shifted by -label(v0); type-3/4 nodes copy their new parent's label.
    """
    i0 = _resolve(tree, v0)
    if tree.types[i0] != 1:
        raise NotTypeOne(f"vertex {tree.address(i0)} has type {tree.types[i0]}")
    line = tree.ancestry(i0)
    where = {node: pos for pos, node in enumerate(line)}
    types, labels = tree.types, tree.labels
    base = int(labels[i0])

    def new_children(x: int) -> List[int]:
        pos = where.get(x)
        if pos is None:
            return tree.children(x)[::-1].tolist()
        if x == i0:
            return [line[-2]] if pos > 0 else []
        kids = tree.children(x).tolist()
        j = kids.index(line[pos + 1])
        back = [line[pos - 1]] if pos > 0 else []
        return kids[:j][::-1] + back + kids[j + 1:][::-1]

    def new_type(x: int) -> int:
        t = int(types[x])
        pos = where.get(x)
        if swap_types and pos is not None and x != i0:
            nxt = int(types[line[pos + 1]])
            if t == 3 and nxt == 2:
                return 4
            if t == 4 and nxt == 1:
                return 3
        return t

    n_new = len(tree) - (int(tree.subtree_sizes[i0]) - 1)
    origin = np.empty(n_new, dtype=np.int64)
    out_t = np.empty(n_new, dtype=np.int8)
    out_p = np.empty(n_new, dtype=np.int64)
    out_l = np.empty(n_new, dtype=np.int64)
    stack = [(i0, -1)]
    count = 0
    while stack:
        x, par = stack.pop()
        t = new_type(x)
        origin[count] = x
        out_t[count] = t
        out_p[count] = par
        out_l[count] = int(labels[x]) - base if t in (1, 2) else out_l[par]
        me = count
        count += 1
        for kid in reversed(new_children(x)):
            stack.append((kid, me))
    assert count == n_new
    v0_hat = int(np.flatnonzero(origin == 0)[0])
    return RerootResult(MultitypeSpatialTree(out_t, out_p, out_l), origin, v0_hat)


def reroot(tree: MultitypeSpatialTree, v0, swap_types: bool = True) -> MultitypeSpatialTree:
    return reroot_full(tree, v0, swap_types).tree


def rebase_displacements(n: int, j: int, x: Sequence) -> tuple:
    """(x_{j-1}-x_j, ..., x_1-x_j, -x_j, x_n-x_j, ..., x_{j+1}-x_j)."""
    if len(x) != n:
        raise BadPosition(f"vector has length {len(x)}, expected {n}")
    if not 1 <= j <= n:
        raise BadPosition(f"position {j} outside 1..{n}")
    xj = x[j - 1]
    head = [x[i] - xj for i in range(j - 2, -1, -1)]
    tail = [x[i] - xj for i in range(n - 1, j - 1, -1)]
    return tuple(head + [-xj] + tail)


def min_label_vertex(tree: MultitypeSpatialTree):
    """(v_m, Delta_1, v_m is a leaf): lexicographically first type-1 minimiser."""
    ones = np.flatnonzero(tree.types == 1)
    lab = tree.labels[ones]
    argmins = ones[lab == lab.min()]
    first = int(argmins[0])  # preorder is lexicographic order
    delta = [tree.address(int(i)) for i in argmins]
    return tree.address(first), delta, bool(tree.child_counts[first] == 0)


def exit_truncate(tree: MultitypeSpatialTree, a):
    """Cut the tree at its first exits from (-inf, a).

    An exit vertex has label >= a while all its strict ancestors have
    label < a. Returns (truncated tree, [(address, type, label), ...]) with
    exit vertices in lexicographical order.
    """
    if not tree.labels[0] < a:
        raise ValueError(f"threshold {a} must exceed the root label {tree.labels[0]}")
    n = len(tree)
    parents, labels = tree.parents, tree.labels
    below = np.zeros(n, dtype=bool)  # every ancestor-or-self label < a
    below[0] = True
    exits = []
    keep = np.zeros(n, dtype=bool)
    keep[0] = True
    for i in range(1, n):
        p = parents[i]
        if not below[p]:
            continue
        keep[i] = True
        if labels[i] >= a:
            exits.append(i)
        else:
            below[i] = True
    idx = np.flatnonzero(keep)
    new_index = np.full(n, -1, dtype=np.int64)
    new_index[idx] = np.arange(len(idx))
    new_parents = parents[idx].copy()
    new_parents[1:] = new_index[new_parents[1:]]
    cut = MultitypeSpatialTree(tree.types[idx], new_parents, labels[idx])
    info = [(tree.address(i), int(tree.types[i]), int(labels[i])) for i in exits]
    return cut, info
