"""Four-type spatial trees: storage, contour functions, validation and sampling.

Trees are stored as three parallel arrays in depth-first (preorder) order,
which is also the lexicographical order on Ulam-Harris addresses. A node's
subtree is therefore a contiguous index range.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .errors import AddressNotFound, InvalidTree, NodeCapExceeded, RetryBudgetExhausted
from .weights import OffspringLaws

DIRECTIONS = {"forward": K.FORWARD, "reversed": K.REVERSED, "shuffled": K.SHUFFLED}
NO_FLOOR = -(1 << 62)

Address = Tuple[int, ...]


# ---------------------------------------------------------------------------
# the tree type
# ---------------------------------------------------------------------------

class MultitypeSpatialTree:
    """Plane tree with types in {1, 2, 3, 4} and integer labels.

    ``parents[0] == -1`` and every other parent index is smaller than the
    child's index; children of a node appear in plane order.
    """

    __slots__ = ("types", "parents", "labels", "__dict__")

    def __init__(self, types, parents, labels):
        self.types = np.asarray(types, dtype=np.int8)
        self.parents = np.asarray(parents, dtype=np.int64)
        self.labels = np.asarray(labels, dtype=np.int64)
        if not (len(self.types) == len(self.parents) == len(self.labels)) or len(self.types) == 0:
            raise InvalidTree("types, parents and labels must be nonempty and of equal length")

    # basic shape ------------------------------------------------------
    def __len__(self) -> int:
        return len(self.types)

    def __repr__(self) -> str:
        return f"MultitypeSpatialTree(nodes={len(self)}, type1={self.count(1)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultitypeSpatialTree):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def key(self) -> tuple:
        return (tuple(self.types.tolist()), tuple(self.parents.tolist()), tuple(self.labels.tolist()))

    def shape_key(self) -> tuple:
        """Key ignoring labels."""
        return (tuple(self.types.tolist()), tuple(self.parents.tolist()))

    @property
    def root_type(self) -> int:
        return int(self.types[0])

    def count(self, kind: Optional[int] = None) -> int:
        if kind is None:
            return len(self.types)
        return int(np.count_nonzero(self.types == kind))

    @cached_property
    def child_counts(self) -> np.ndarray:
        counts = np.zeros(len(self), dtype=np.int64)
        np.add.at(counts, self.parents[1:], 1)
        return counts

    @cached_property
    def _csr(self):
        order = np.argsort(self.parents[1:], kind="stable") + 1
        starts = np.zeros(len(self) + 1, dtype=np.int64)
        np.cumsum(self.child_counts, out=starts[1:])
        return starts, order

    def children(self, i: int) -> np.ndarray:
        starts, order = self._csr
        return order[starts[i]:starts[i + 1]]

    @cached_property
    def subtree_sizes(self) -> np.ndarray:
        sizes = np.ones(len(self), dtype=np.int64)
        parents = self.parents
        for i in range(len(self) - 1, 0, -1):
            sizes[parents[i]] += sizes[i]
        return sizes

    @cached_property
    def depths(self) -> np.ndarray:
        d = np.zeros(len(self), dtype=np.int64)
        parents = self.parents
        for i in range(1, len(self)):
            d[i] = d[parents[i]] + 1
        return d

    @cached_property
    def sibling_rank(self) -> np.ndarray:
        """1-based position of each node among its siblings (0 for the root)."""
        rank = np.zeros(len(self), dtype=np.int64)
        seen = np.zeros(len(self), dtype=np.int64)
        parents = self.parents
        for i in range(1, len(self)):
            seen[parents[i]] += 1
            rank[i] = seen[parents[i]]
        return rank

    # addresses ----------------------------------------------------------
    def address(self, i: int) -> Address:
        out = []
        rank = self.sibling_rank
        while i > 0:
            out.append(int(rank[i]))
            i = int(self.parents[i])
        return tuple(reversed(out))

    def index_of(self, address: Sequence[int]) -> int:
        i = 0
        for step in address:
            kids = self.children(i)
            if not 1 <= step <= len(kids):
                raise AddressNotFound(f"address {tuple(address)} is not in the tree")
            i = int(kids[step - 1])
        return i

    def ancestry(self, i: int) -> List[int]:
        """Indices from the root down to i, inclusive."""
        line = [i]
        while i > 0:
            i = int(self.parents[i])
            line.append(i)
        return line[::-1]

    def word(self, i: int) -> Tuple[int, ...]:
        return tuple(int(self.types[c]) for c in self.children(i))

    def leaves(self, kind: Optional[int] = None) -> np.ndarray:
        mask = self.child_counts == 0
        if kind is not None:
            mask &= self.types == kind
        return np.flatnonzero(mask)

    @property
    def min_nonroot_type1_label(self) -> float:
        """Minimum label over type-1 vertices other than the root (inf if none)."""
        mask = self.types[1:] == 1
        if not mask.any():
            return math.inf
        return int(self.labels[1:][mask].min())

    # serialisation ----------------------------------------------------
    def to_json(self) -> str:
        return json.dumps(
            {"types": self.types.tolist(), "parents": self.parents.tolist(), "labels": self.labels.tolist()},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str, check: str = "forward") -> "MultitypeSpatialTree":
        obj = json.loads(line)
        tree = cls(obj["types"], obj["parents"], obj["labels"])
        validate(tree, displacement=check)
        return tree

    @classmethod
    def from_nested(cls, spec) -> "MultitypeSpatialTree":
        """Build from ``(type, label, [children...])`` nested tuples."""
        types, parents, labels = [], [], []

        def walk(node, parent):
            t, lab, kids = node
            me = len(types)
            types.append(t)
            parents.append(parent)
            labels.append(lab)
            for kid in kids:
                walk(kid, me)

        walk(spec, -1)
        return cls(types, parents, labels)


def write_dump(trees: Iterable[MultitypeSpatialTree], fh) -> None:
    for tree in trees:
        fh.write(tree.to_json())
        fh.write("\n")


def read_dump(fh, check: str = "forward") -> List[MultitypeSpatialTree]:
    return [MultitypeSpatialTree.from_json(line, check) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# contour
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContourPair:
    C: np.ndarray
    V: np.ndarray
    depth_sequence: np.ndarray

    @property
    def n_edges(self) -> int:
        return (len(self.C) - 1) // 2

    def corners(self) -> np.ndarray:
        """v_k = u_{2k}."""
        return self.depth_sequence[::2]


def depth_sequence(tree: MultitypeSpatialTree) -> np.ndarray:
    n = len(tree)
    out = np.empty(2 * n - 1, dtype=np.int64)
    parents = tree.parents
    depth = tree.depths
    pos = 0
    out[0] = 0
    # in preorder, the walk between consecutive nodes climbs to the parent of the next one
    for i in range(1, n):
        cur = out[pos]
        target = parents[i]
        while cur != target:
            cur = parents[cur]
            pos += 1
            out[pos] = cur
        pos += 1
        out[pos] = i
    cur = out[pos]
    while cur != 0:
        cur = parents[cur]
        pos += 1
        out[pos] = cur
    assert pos == 2 * n - 2 and depth is not None
    return out


def contour(tree: MultitypeSpatialTree) -> ContourPair:
    seq = depth_sequence(tree)
    return ContourPair(tree.depths[seq], tree.labels[seq], seq)


def tree_from_contour(C: Sequence[int], first_visit_types, first_visit_labels) -> MultitypeSpatialTree:
    """Rebuild a tree from its contour plus types/labels listed in first-visit order."""
    C = list(C)
    parents = [-1]
    path = [0]
    for k in range(1, len(C)):
        if C[k] == C[k - 1] + 1:
            parents.append(path[-1])
            path.append(len(parents) - 1)
        elif C[k] == C[k - 1] - 1:
            path.pop()
        else:
            raise InvalidTree("contour steps must be +1 or -1")
    return MultitypeSpatialTree(first_visit_types, parents, first_visit_labels)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _cyclic_ok(parent_label, parent_type, kid_types, kid_labels) -> bool:
    prev_label, prev_type = parent_label, parent_type
    for t, lab in zip(list(kid_types) + [parent_type], list(kid_labels) + [parent_label]):
        step = lab - prev_label
        if step < (-1 if prev_type == 1 else 0):
            return False
        prev_label, prev_type = lab, t
    return True


def validate(tree: MultitypeSpatialTree, displacement: str = "forward", root_types=(1, 2)) -> None:
    """Raise InvalidTree unless the tree satisfies the structural and label rules.

    ``displacement`` selects how the cyclic increment rule around type-3/4
    nodes is checked: "forward", "either" (the node may also be mirrored,
    which is what the shuffled displacement law produces) or "skip".
    """
    types, parents, labels = tree.types, tree.parents, tree.labels
    n = len(tree)
    if parents[0] != -1:
        raise InvalidTree("root must have parent -1")
    if int(types[0]) not in root_types:
        raise InvalidTree(f"root type {types[0]} not allowed")
    if np.any((types < 1) | (types > 4)):
        raise InvalidTree("types must lie in {1,2,3,4}")
    # preorder check: each parent must be on the current root path
    path = [0]
    for i in range(1, n):
        p = int(parents[i])
        while path and path[-1] != p:
            path.pop()
        if not path:
            raise InvalidTree(f"node {i} is not in depth-first order")
        path.append(i)
    for i in range(n):
        t = int(types[i])
        kids = tree.children(i)
        kt = types[kids]
        if t == 1:
            if np.any(kt != 3):
                raise InvalidTree(f"type-1 node {i} has a child not of type 3")
        elif t == 2:
            if len(kids) != 1 or kt[0] != 4:
                raise InvalidTree(f"type-2 node {i} must have exactly one type-4 child")
        else:
            if np.any((kt != 1) & (kt != 2)):
                raise InvalidTree(f"type-{t} node {i} has a child of type 3 or 4")
        if t in (1, 2):
            if np.any(labels[kids] != labels[i]):
                raise InvalidTree(f"labels must be constant below type-{t} node {i}")
        elif displacement != "skip" and i > 0:
            pl, pt = int(labels[parents[i]]), int(types[parents[i]])
            kl = labels[kids].tolist()
            ktl = kt.tolist()
            ok = _cyclic_ok(pl, pt, ktl, kl)
            if not ok and displacement == "either":
                ok = _cyclic_ok(pl, pt, ktl[::-1], kl[::-1])
            if not ok:
                raise InvalidTree(f"cyclic label increments violated around node {i}")


def is_valid(tree, displacement="forward", root_types=(1, 2)) -> bool:
    try:
        validate(tree, displacement, root_types)
        return True
    except InvalidTree:
        return False


def in_positive_class(tree: MultitypeSpatialTree) -> bool:
    """Root type 1 with label 1 and every type-1 label at least 1."""
    if tree.root_type != 1 or tree.labels[0] != 1:
        return False
    return bool(np.all(tree.labels[tree.types == 1] >= 1))


# ---------------------------------------------------------------------------
# subtrees
# ---------------------------------------------------------------------------

def _resolve(tree, u) -> int:
    if isinstance(u, (int, np.integer)):
        if not 0 <= u < len(tree):
            raise AddressNotFound(f"index {u} out of range")
        return int(u)
    return tree.index_of(tuple(u))


def subtree_at(tree: MultitypeSpatialTree, u) -> MultitypeSpatialTree:
    """Fringe subtree at u with labels shifted so that u gets label 0."""
    i = _resolve(tree, u)
    end = i + int(tree.subtree_sizes[i])
    parents = tree.parents[i:end] - i
    parents[0] = -1
    return MultitypeSpatialTree(tree.types[i:end], parents, tree.labels[i:end] - tree.labels[i])


def truncate_at(tree: MultitypeSpatialTree, w0) -> MultitypeSpatialTree:
    """Remove all strict descendants of w0."""
    i = _resolve(tree, w0)
    end = i + int(tree.subtree_sizes[i])
    if end == i + 1:
        return tree
    keep = np.concatenate([np.arange(i + 1), np.arange(end, len(tree))])
    new_index = np.full(len(tree), -1, dtype=np.int64)
    new_index[keep] = np.arange(len(keep))
    parents = tree.parents[keep].copy()
    parents[1:] = new_index[parents[1:]]
    return MultitypeSpatialTree(tree.types[keep], parents, tree.labels[keep])


# ---------------------------------------------------------------------------
# displacement laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisplacementLaw:
    parent_type: int
    word: Tuple[int, ...]
    direction: str = "forward"

    def __post_init__(self):
        if self.parent_type not in (3, 4):
            raise ValueError("displacements are random only below type-3/4 nodes")
        if any(w not in (1, 2) for w in self.word):
            raise ValueError("words below type-3/4 nodes use letters 1 and 2")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {sorted(DIRECTIONS)}")


def sample_displacement(law: DisplacementLaw, rng) -> Tuple[int, ...]:
    n = len(law.word)
    word = np.array(law.word, dtype=np.int64)
    comp = np.empty(n + 1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    K.displacement(rng, law.parent_type, word, n, DIRECTIONS[law.direction], comp, out)
    return tuple(int(v) for v in out)


def sample_displacements(law: DisplacementLaw, count: int, rng) -> np.ndarray:
    """``count`` independent draws as the rows of an integer array."""
    n = len(law.word)
    out = np.empty((count, n), dtype=np.int64)
    K.displacement_batch(_rng(rng), law.parent_type, np.array(law.word, dtype=np.int64), n,
                         DIRECTIONS[law.direction], int(count), out)
    return out


# ---------------------------------------------------------------------------
# conditioning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Condition:
    """Which event to condition on.

    ``size``: exact number of type-1 vertices; ``positive``: every non-root
    type-1 label is positive; ``root_degree_one``: the root has one child.
    """

    size: Optional[int] = None
    positive: bool = False
    root_degree_one: bool = False

    @classmethod
    def parse(cls, text: str, n: Optional[int] = None) -> "Condition":
        parts = set(text.replace(" ", "").split("+")) - {"", "none"}
        unknown = parts - {"size", "positive", "root-degree-1"}
        if unknown:
            raise ValueError(f"unknown condition part(s) {sorted(unknown)}")
        if "size" in parts and n is None:
            raise ValueError("size conditioning needs n")
        return cls(
            size=n if "size" in parts else None,
            positive="positive" in parts,
            root_degree_one="root-degree-1" in parts,
        )


def _law_arrays(laws: OffspringLaws):
    m3, m4 = laws.mu3, laws.mu4
    return (
        float(laws.geometric_p),
        m3.k, m3.kp, m3.threshold, m3.alias,
        m4.k, m4.kp, m4.threshold, m4.alias,
    )


def _rng(rng):
    if rng is None:
        return np.random.Generator(np.random.Philox(0))
    if isinstance(rng, (int, np.integer)):
        return np.random.Generator(np.random.Philox(int(rng)))
    return rng


def _check_root(laws: OffspringLaws, root_type: int) -> None:
    if root_type not in (1, 2):
        raise ValueError("root type must be 1 or 2")
    if root_type == 2 and not laws.mu4.defined:
        raise ValueError("these weights give no offspring law below a type-2 root")


def sample_gw(laws: OffspringLaws, root_type: int = 1, x: int = 0, direction: str = "forward",
              rng=None, node_cap: int = 10**7, root_degree_one: bool = False) -> MultitypeSpatialTree:
    """Unconditioned four-type spatial GW tree started from label x."""
    _check_root(laws, root_type)
    rng = _rng(rng)
    types, parents, labels, _, status = K.gw_tree(
        rng, root_type, int(x), DIRECTIONS[direction], *_law_arrays(laws),
        int(node_cap), int(node_cap) + 1, NO_FLOOR, bool(root_degree_one))
    if status == K.NODE_CAP:
        raise NodeCapExceeded(f"tree exceeded {node_cap} nodes")
    return MultitypeSpatialTree(types, parents, labels)


def sample_conditioned(laws: OffspringLaws, root_type: int = 1, x: int = 0,
                       condition: Condition = Condition(), direction: str = "forward",
                       rng=None, retry_budget: int = 10**6, node_cap: int = 10**7,
                       method: str = "rejection") -> MultitypeSpatialTree:
    """Draw from the GW law conditioned on ``condition``.

    ``method="rejection"`` repeats plain GW draws until the event occurs,
    aborting an attempt as soon as it can no longer succeed.
    ``method="sequential"`` draws size-conditioned trees directly through
    the reduced type-1 tree and keeps rejection only for positivity.
    """
    _check_root(laws, root_type)
    if condition.root_degree_one and root_type != 1:
        raise ValueError("root-degree conditioning needs a type-1 root")
    rng = _rng(rng)
    floor = 1 if condition.positive else NO_FLOOR
    mode = DIRECTIONS[direction]
    if method == "sequential":
        if condition.size is None:
            raise ValueError("the sequential method needs a size condition")
        tables = sequential_tables(laws, condition.size)
        kind = K.ROOT_TYPE2 if root_type == 2 else (K.ROOT_SINGLE if condition.root_degree_one else K.ROOT_PLAIN)
        types, parents, labels, attempts, status = K.sequential_rejection(
            rng, int(condition.size), kind, int(x), mode, floor, *tables.arrays(laws),
            int(node_cap), int(retry_budget))
    elif method == "rejection":
        target = -1 if condition.size is None else int(condition.size)
        types, parents, labels, attempts, status = K.gw_rejection(
            rng, root_type, int(x), mode, *_law_arrays(laws), int(node_cap), target,
            floor, bool(condition.root_degree_one), int(retry_budget))
    else:
        raise ValueError(f"unknown method {method!r}")
    if status != K.OK:
        raise RetryBudgetExhausted(
            f"no tree satisfying {condition} after {attempts} attempts", attempts=attempts, accepted=0
        )
    return MultitypeSpatialTree(types, parents, labels)


# ---------------------------------------------------------------------------
# tables for the sequential sampler
# ---------------------------------------------------------------------------

def _power_table(base: np.ndarray, rmax: int) -> np.ndarray:
    d = len(base) - 1
    table = np.zeros((rmax + 1, d + 1))
    table[0, 0] = 1.0
    for r in range(1, rmax + 1):
        table[r] = np.convolve(table[r - 1], base)[: d + 1]
    return table


def _diamond_leaf_law(laws: OffspringLaws, d: int) -> np.ndarray:
    """Law of the number of type-1 leaves hanging below a type-4 node."""
    law = laws.mu4
    if not law.defined:
        return np.zeros(d + 1)
    top = int(law.kp.max())
    b = np.zeros(d + 1)
    for _ in range(100000):
        powers = _power_table(b, top)
        new = np.zeros(d + 1)
        for k, kp, pr in zip(law.k, law.kp, law.prob):
            if k <= d:
                new[k:] += pr * powers[kp][: d + 1 - k]
        if np.max(np.abs(new - b)) < 1e-22:
            return new
        b = new
    return b


@dataclass
class SequentialTables:
    nmax: int
    rho: np.ndarray
    tri: np.ndarray
    logscale: np.ndarray
    a: np.ndarray
    b: np.ndarray
    kcdf: np.ndarray
    atab: np.ndarray
    btab: np.ndarray

    def arrays(self, laws: OffspringLaws):
        m3, m4 = laws.mu3, laws.mu4
        return (self.rho, self.tri, self.logscale, self.a, self.b, self.kcdf, self.atab, self.btab,
                m3.k, m3.kp, m3.prob, m4.k, m4.kp, m4.prob)


def reduced_offspring_law(laws: OffspringLaws, tail: float = 1e-20):
    """(rho, a, b, atab, btab, kcdf) for the reduced type-1 tree.

    rho is the law of the number of type-1 vertices whose nearest type-1
    ancestor is a given type-1 vertex; a and b are the same count below a
    type-3 and a type-4 node.
    """
    p = laws.geometric_p
    q = 1.0 - p
    rmax = max(1, int(math.ceil(math.log(1e-40) / math.log(q)))) if q > 0 else 1
    kp_top = max(int(laws.mu3.kp.max(initial=0)), int(laws.mu4.kp.max(initial=0)))
    d = 64
    while True:
        b = _diamond_leaf_law(laws, d)
        btab = _power_table(b, kp_top)
        a = np.zeros(d + 1)
        for k, kp, pr in zip(laws.mu3.k, laws.mu3.kp, laws.mu3.prob):
            if k <= d:
                a[k:] += pr * btab[kp][: d + 1 - k]
        atab = _power_table(a, rmax)
        weights = p * q ** np.arange(rmax + 1)
        rho = weights @ atab
        if rho[-8:].sum() < tail or d >= 4096:
            break
        d *= 2
    cum = np.cumsum(weights[None, :] * atab.T, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        kcdf = cum / cum[:, -1:]
    kcdf[~np.isfinite(kcdf)] = 1.0
    kcdf[:, -1] = 1.0
    return rho, a, b, atab, btab, kcdf


def forest_table(rho: np.ndarray, nmax: int):
    """Row s holds rho^{*s}(m) for m <= s, rescaled by its maximum (log kept).

    Entry (s, m) depends on row s-1 up to m, so rows are carried at full
    width nmax before being cut down for storage.
    """
    tri = np.zeros((nmax + 1) * (nmax + 2) // 2)
    logscale = np.zeros(nmax + 1)
    tri[0] = 1.0
    row = np.zeros(nmax + 1)
    row[0] = 1.0
    for s in range(1, nmax + 1):
        row = np.convolve(row, rho)[: nmax + 1]
        top = row[: s + 1].max()
        row = row / top
        logscale[s] = logscale[s - 1] + math.log(top)
        off = s * (s + 1) // 2
        tri[off:off + s + 1] = row[: s + 1]
    return tri, logscale


_TABLES: Dict[int, Tuple[OffspringLaws, SequentialTables]] = {}


def sequential_tables(laws: OffspringLaws, nmax: int) -> SequentialTables:
    """Tables for sizes up to ``nmax``, cached per laws object."""
    hit = _TABLES.get(id(laws))
    if hit is not None and hit[0] is laws and hit[1].nmax >= nmax:
        return hit[1]
    rho, a, b, atab, btab, kcdf = reduced_offspring_law(laws)
    size = max(nmax, hit[1].nmax if hit is not None and hit[0] is laws else 0)
    tri, logscale = forest_table(rho, size)
    tables = SequentialTables(size, rho, tri, logscale, a, b, kcdf, atab, btab)
    _TABLES[id(laws)] = (laws, tables)
    return tables
