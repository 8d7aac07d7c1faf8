"""Rooted planar maps as rotation systems, and the BDG construction from labeled trees."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidTree
from .trees import MultitypeSpatialTree, depth_sequence, in_positive_class, validate
from .weights import WeightSequence

VERTEX_MAP_CODE = "vertex-map"


class RootedPlanarMap:
    """Half-edge map: ``alpha`` pairs half-edges, ``sigma`` turns around vertices.

    Faces are the cycles of ``sigma o alpha``. The vertex map (one vertex,
    no edge) has empty arrays and ``root == -1``.
    """

    def __init__(self, alpha, sigma, root: int, origin=None):
        self.alpha = np.asarray(alpha, dtype=np.int64)
        self.sigma = np.asarray(sigma, dtype=np.int64)
        self.root = int(root)
        if len(self.alpha) != len(self.sigma):
            raise ValueError("alpha and sigma must have the same length")
        if origin is None:
            origin = self._orbits(self.sigma, start=self.root)
        self.origin = np.asarray(origin, dtype=np.int64)

    @staticmethod
    def _orbits(perm: np.ndarray, start: int = 0) -> np.ndarray:
        out = np.full(len(perm), -1, dtype=np.int64)
        nxt = 0
        seeds = ([start] if len(perm) else []) + list(range(len(perm)))
        for s in seeds:
            if out[s] >= 0:
                continue
            h = s
            while out[h] < 0:
                out[h] = nxt
                h = perm[h]
            nxt += 1
        return out

    @classmethod
    def vertex_map(cls) -> "RootedPlanarMap":
        return cls([], [], -1, [])

    @property
    def is_vertex_map(self) -> bool:
        return len(self.alpha) == 0

    @property
    def num_half_edges(self) -> int:
        return len(self.alpha)

    @property
    def num_edges(self) -> int:
        return len(self.alpha) // 2

    @cached_property
    def num_vertices(self) -> int:
        return 1 if self.is_vertex_map else int(self.origin.max()) + 1

    @property
    def root_vertex(self) -> int:
        return 0 if self.is_vertex_map else int(self.origin[self.root])

    @cached_property
    def face_cycles(self) -> List[List[int]]:
        if self.is_vertex_map:
            return [[]]
        face_perm = self.sigma[self.alpha]
        seen = np.zeros(len(face_perm), dtype=bool)
        cycles = []
        for s in range(len(face_perm)):
            if seen[s]:
                continue
            cyc = []
            h = s
            while not seen[h]:
                seen[h] = True
                cyc.append(h)
                h = face_perm[h]
            cycles.append(cyc)
        return cycles

    @property
    def num_faces(self) -> int:
        return len(self.face_cycles)

    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_faces

    def check(self) -> None:
        """Raise ValueError unless this is a connected planar map."""
        if self.is_vertex_map:
            return
        n = len(self.alpha)
        h = np.arange(n)
        if np.any(self.alpha[self.alpha] != h) or np.any(self.alpha == h):
            raise ValueError("alpha must be a fixed-point-free involution")
        if sorted(self.sigma.tolist()) != list(range(n)):
            raise ValueError("sigma must be a permutation")
        if len(self._bfs_order()) != n:
            raise ValueError("map is not connected")
        if self.euler_characteristic() != 2:
            raise ValueError(f"Euler characteristic {self.euler_characteristic()} != 2")

    def _bfs_order(self) -> List[int]:
        if self.is_vertex_map:
            return []
        seen = {self.root: 0}
        order = [self.root]
        i = 0
        while i < len(order):
            h = order[i]
            for g in (int(self.sigma[h]), int(self.alpha[h])):
                if g not in seen:
                    seen[g] = len(order)
                    order.append(g)
            i += 1
        return order

    def canonical_form(self) -> str:
        """String equal for two maps iff they are isomorphic as rooted maps."""
        if self.is_vertex_map:
            return VERTEX_MAP_CODE
        order = self._bfs_order()
        pos = {h: i for i, h in enumerate(order)}
        return ";".join(f"{pos[int(self.sigma[h])]},{pos[int(self.alpha[h])]}" for h in order)

    @cached_property
    def neighbours(self) -> List[List[int]]:
        adj = [[] for _ in range(self.num_vertices)]
        for h in range(len(self.alpha)):
            adj[self.origin[h]].append(int(self.origin[self.alpha[h]]))
        return adj

    def to_json(self) -> str:
        return json.dumps(
            {"alpha": self.alpha.tolist(), "sigma": self.sigma.tolist(), "root": self.root},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "RootedPlanarMap":
        obj = json.loads(line)
        m = cls(obj["alpha"], obj["sigma"], obj["root"])
        m.check()
        return m

    def __repr__(self) -> str:
        return f"RootedPlanarMap(V={self.num_vertices}, E={self.num_edges}, F={self.num_faces})"


def faces(m: RootedPlanarMap) -> List[Tuple[int, int]]:
    return [(i, len(c)) for i, c in enumerate(m.face_cycles)]


def distances(m: RootedPlanarMap) -> np.ndarray:
    """Graph distance of every vertex from the root vertex."""
    dist = np.full(m.num_vertices, -1, dtype=np.int64)
    src = m.root_vertex
    dist[src] = 0
    queue = deque([src])
    adj = m.neighbours
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def boltzmann_weight(m: RootedPlanarMap, weights: WeightSequence):
    """Product of face weights; exact when the weights are rational."""
    exact = weights.is_rational
    total = Fraction(1) if exact else 1.0
    if m.is_vertex_map:
        return total
    for _, deg in faces(m):
        q = weights.q(deg)
        total = total * (Fraction(q) if exact else float(q))
        if total == 0:
            break
    return total


# ---------------------------------------------------------------------------
# the BDG construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BDGResult:
    map: RootedPlanarMap
    vertex_node: np.ndarray  # tree index of each map vertex, -1 for the extra vertex


def bdg_forward_full(tree: MultitypeSpatialTree, check: str = "forward") -> BDGResult:
    """Map of a positive labeled tree, with the vertex-to-node correspondence.

    Every corner v_k (k < n_corners) of a type-1/2 vertex emits one edge: to the
    extra vertex when its label is 1 (type 1) or 0 (type 2), otherwise to the
    next type-1 corner carrying label minus one (type 1) or the same label
    (type 2). Edges are drawn above the contour line, so around each vertex
    the sectors follow contour order and, inside a sector, arriving edges
    come latest-emitter first, then the emitted edge. Type-2 vertices have
    two edges, which are fused.
    """
    if check != "skip":
        validate(tree, displacement=check, root_types=(1,))
    if not in_positive_class(tree):
        raise InvalidTree("tree must have root label 1 and all type-1 labels >= 1")
    types, labels = tree.types, tree.labels
    n_nodes = len(tree)
    vertex_of = np.full(n_nodes, -1, dtype=np.int64)
    ones = np.flatnonzero(types == 1)
    vertex_of[ones] = np.arange(1, len(ones) + 1)
    vertex_node = np.concatenate([[-1], ones]).astype(np.int64)
    n_corners = n_nodes - 1
    if n_corners == 0:
        return BDGResult(RootedPlanarMap.vertex_map(), vertex_node[1:])

    corner = depth_sequence(tree)[0:2 * n_corners:2]  # v_0 .. v_{n_corners-1}
    root_corner_label = int(labels[0])
    # backward scan: target corner of each emitted edge (-1 = extra vertex)
    target = np.empty(n_corners, dtype=np.int64)
    latest: Dict[int, int] = {root_corner_label: n_corners}  # v_xi is the root again
    for k in range(n_corners - 1, -1, -1):
        u = corner[k]
        t, lab = int(types[u]), int(labels[u])
        want = lab - 1 if t == 1 else lab
        if want == 0:
            target[k] = -1
        else:
            if want not in latest:
                raise InvalidTree(f"corner {k} has no successor with label {want}")
            target[k] = latest[want]
        if t == 1:
            latest[lab] = k
    # half-edge 2k sits at the emitting corner, 2k+1 at the receiving end
    arrivals: List[List[int]] = [[] for _ in range(n_corners + 1)]
    at_extra: List[int] = []
    for k in range(n_corners):
        if target[k] < 0:
            at_extra.append(k)
        else:
            arrivals[target[k]].append(k)
    arrivals[0].extend(arrivals[n_corners])  # the closing visit of the root is corner 0
    rotation: Dict[int, List[int]] = {}
    for k in range(n_corners):
        u = int(corner[k])
        seq = rotation.setdefault(u, [])
        for j in sorted(arrivals[k], reverse=True):
            seq.append(2 * j + 1)
        seq.append(2 * k)
    extra_rot = [2 * k + 1 for k in sorted(at_extra, reverse=True)]

    alpha = np.arange(2 * n_corners, dtype=np.int64) ^ 1
    dead = np.zeros(2 * n_corners, dtype=bool)
    for u, seq in rotation.items():
        if types[u] == 2:
            h1, h2 = seq
            o1, o2 = alpha[h1], alpha[h2]
            alpha[o1], alpha[o2] = o2, o1
            dead[h1] = dead[h2] = True
    sigma = np.empty(2 * n_corners, dtype=np.int64)
    origin = np.empty(2 * n_corners, dtype=np.int64)
    for seq, vid in [(extra_rot, 0)] + [(s, int(vertex_of[u])) for u, s in rotation.items() if types[u] == 1]:
        for a, b in zip(seq, seq[1:] + seq[:1]):
            sigma[a] = b
            origin[a] = vid
    live = np.flatnonzero(~dead)
    renum = np.full(2 * n_corners, -1, dtype=np.int64)
    renum[live] = np.arange(len(live))
    m = RootedPlanarMap(renum[alpha[live]], renum[sigma[live]], int(renum[1]), origin[live])
    return BDGResult(m, vertex_node)


def bdg_forward(tree: MultitypeSpatialTree, check: str = "forward") -> RootedPlanarMap:
    return bdg_forward_full(tree, check).map


def face_degree_census(tree: MultitypeSpatialTree) -> List[int]:
    """Expected face degrees: 2k+k'+2 per type-3 node, 2k+k'+1 per type-4 node."""
    out = []
    types = tree.types
    for i in np.flatnonzero((types == 3) | (types == 4)):
        kids = types[tree.children(int(i))]
        k = int(np.count_nonzero(kids == 1))
        kp = int(np.count_nonzero(kids == 2))
        out.append(2 * k + kp + (2 if types[i] == 3 else 1))
    return sorted(out)


def map_vertex_count(n_type1: int) -> int:
    """Vertices of the image of a tree with n type-1 vertices.

    Assumes a one-vertex tree is the single node, which holds when there is
    no degree-2 weight. Use :func:`image_vertex_count` for a given tree.
    """
    return 1 if n_type1 == 1 else n_type1 + 1


def image_vertex_count(tree: MultitypeSpatialTree) -> int:
    return 1 if len(tree) == 1 else tree.count(1) + 1
