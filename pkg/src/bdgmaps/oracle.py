"""Exact enumeration of small trees and maps with rational weights.

Everything here uses :class:`fractions.Fraction`; verdicts are exact
equalities with an exact residual, never tolerances.
"""

from __future__ import annotations

import itertools
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

from .bijection import RootedPlanarMap, bdg_forward, boltzmann_weight, map_vertex_count
from .errors import BoundTooLarge, InvalidWeights, MismatchReport
from .reroot import min_label_vertex, rebase_displacements, reroot
from .trees import Condition, MultitypeSpatialTree, contour, tree_from_contour
from .weights import (
    WeightSequence,
    n_bullet,
    n_diamond,
    rational_fixed_point,
    solve_fixed_point,
)

ITEM_GUARD = 10**6


# ---------------------------------------------------------------------------
# exact offspring laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactLaws:
    z_plus: Fraction
    z_diamond: Fraction
    mu3: Tuple[Tuple[Tuple[int, int], Fraction], ...]
    mu4: Tuple[Tuple[Tuple[int, int], Fraction], ...]

    def mu1(self, k: int) -> Fraction:
        p = 1 / self.z_plus
        return p * (1 - p) ** k

    def pair_law(self, ptype: int) -> Dict[Tuple[int, int], Fraction]:
        return dict(self.mu3 if ptype == 3 else self.mu4)

    def zeta(self, ptype: int, word: Sequence[int]) -> Fraction:
        """Probability of the ordered child-type word below a ``ptype`` node."""
        if ptype == 1:
            return self.mu1(len(word)) if all(w == 3 for w in word) else Fraction(0)
        if ptype == 2:
            return Fraction(1) if tuple(word) == (4,) else Fraction(0)
        if any(w not in (1, 2) for w in word):
            return Fraction(0)
        k = sum(1 for w in word if w == 1)
        kp = len(word) - k
        return self.pair_law(ptype).get((k, kp), Fraction(0)) / comb(k + kp, k)


def exact_laws(weights: WeightSequence) -> ExactLaws:
    """Rational offspring laws for finitely supported rational critical weights."""
    if not weights.is_rational:
        raise InvalidWeights("exact laws need finitely supported rational weights")
    report = solve_fixed_point(weights)
    zp, zd = rational_fixed_point(weights, report)
    q = weights.fractions()
    mu3, mu4 = [], []
    fb = (zp - 1) / zp
    for degree, qd in sorted(q.items()):
        for k in range(degree):
            kp = degree - 2 - 2 * k
            if kp >= 0:
                mass = n_bullet(k, kp) * comb(k + kp, k) * qd * zp**k * zd**kp / fb
                if mass:
                    mu3.append(((k, kp), mass))
            kp = degree - 1 - 2 * k
            if kp >= 0 and zd:
                mass = n_diamond(k, kp) * comb(k + kp, k) * qd * zp**k * zd**kp / zd
                if mass:
                    mu4.append(((k, kp), mass))
    if sum(m for _, m in mu3) != 1 or (mu4 and sum(m for _, m in mu4) != 1):
        raise InvalidWeights("exact offspring laws do not sum to one")
    return ExactLaws(zp, zd, tuple(mu3), tuple(mu4))


# ---------------------------------------------------------------------------
# displacement laws
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def compositions(total: int, parts: int) -> Tuple[Tuple[int, ...], ...]:
    """All vectors of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 0:
        return ((),) if total == 0 else ()
    if parts == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def brute_counts(k: int, kp: int) -> Tuple[int, int]:
    """(#A_{k,k'}, #B_{k,k'}) by listing the sets."""
    return len(compositions(k + 1, k + kp + 1)), len(compositions(k, k + kp + 1))


def _forward_law(ptype: int, word: Tuple[int, ...]) -> Dict[Tuple[int, ...], Fraction]:
    k = sum(1 for w in word if w == 1)
    n = len(word)
    total = k + (1 if ptype == 3 else 0)
    support = compositions(total, n + 1)
    mass = Fraction(1, len(support))
    law: Dict[Tuple[int, ...], Fraction] = defaultdict(Fraction)
    for comp in support:
        acc, prev_one, vec = 0, ptype == 3, []
        for j in range(n):
            acc += comp[j] - (1 if prev_one else 0)
            vec.append(acc)
            prev_one = word[j] == 1
        law[tuple(vec)] += mass
    return dict(law)


@lru_cache(maxsize=None)
def displacement_law(ptype: int, word: Tuple[int, ...], direction: str = "forward"):
    """Exact law of child label offsets below a type-3/4 node.

    "forward" is the uniform law built from the composition set; "reversed"
    is the mirror image of the forward law of the mirrored word; "shuffled"
    is the half-half mixture of the two.
    """
    word = tuple(word)
    if direction == "forward":
        return _forward_law(ptype, word)
    mirrored = {tuple(reversed(v)): p for v, p in _forward_law(ptype, word[::-1]).items()}
    if direction == "reversed":
        return mirrored
    if direction != "shuffled":
        raise ValueError(f"unknown direction {direction!r}")
    out: Dict[Tuple[int, ...], Fraction] = defaultdict(Fraction)
    for v, p in _forward_law(ptype, word).items():
        out[v] += p / 2
    for v, p in mirrored.items():
        out[v] += p / 2
    return dict(out)


def _rotated_word(word, j, letter):
    """w^{j, letter} = (w_{j+1}, ..., w_n, letter, w_1, ..., w_{j-1})."""
    return tuple(word[j:]) + (letter,) + tuple(word[: j - 1])


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    check: str
    bound: Optional[int]
    items: int
    residual: Fraction
    offending: List = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    @property
    def equal(self) -> bool:
        return self.residual == 0 and not self.offending

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "bound": self.bound,
            "items": self.items,
            "residual_numerator": self.residual.numerator,
            "residual_denominator": self.residual.denominator,
            "equal": self.equal,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def compare_measures(check: str, lhs: Dict, rhs: Dict, bound=None, detail=None) -> Verdict:
    keys = set(lhs) | set(rhs)
    residual = Fraction(0)
    offending = []
    for key in sorted(keys, key=repr):
        diff = lhs.get(key, Fraction(0)) - rhs.get(key, Fraction(0))
        if diff:
            residual += abs(diff)
            offending.append(key)
    return Verdict(check, bound, len(keys), residual, offending, detail or {})


def count_identity_check(max_k: int = 6) -> Verdict:
    """Set sizes of A and B against the closed forms, plus the index-shift identity."""
    bad = []
    for k in range(max_k + 1):
        for kp in range(max_k + 1):
            a, b = brute_counts(k, kp)
            if a != n_bullet(k, kp):
                bad.append(("A", k, kp))
            if b != n_diamond(k, kp):
                bad.append(("B", k, kp))
            if kp >= 1 and n_diamond(k + 1, kp - 1) != n_bullet(k, kp):
                bad.append(("shift", k, kp))
    n = (max_k + 1) ** 2
    return Verdict("counts", max_k, n, Fraction(len(bad)), bad)


def image_target(ptype: int, word: Tuple[int, ...], j: int, form: str = "stated"):
    """(target type, target word) for the image of the shuffled law under phi_{n,j}.

    "stated": the letter w_j is inserted and the word is kept in order.
    "mirrored": the parent's own letter (1 below type 3, 2 below type 4) is
    inserted and the rotated word is read backwards, which is what the
    re-rooting actually produces.
    """
    target_type = 3 if word[j - 1] == 1 else 4
    if form == "stated":
        return target_type, _rotated_word(word, j, word[j - 1])
    if form == "mirrored":
        return target_type, _rotated_word(word, j, 1 if ptype == 3 else 2)[::-1]
    raise ValueError(f"unknown form {form!r}")


def displacement_image(ptype: int, word: Tuple[int, ...], j: int) -> Dict[Tuple[int, ...], Fraction]:
    image: Dict[Tuple[int, ...], Fraction] = defaultdict(Fraction)
    for vec, p in displacement_law(ptype, tuple(word), "shuffled").items():
        image[rebase_displacements(len(word), j, vec)] += p
    return dict(image)


def displacement_image_check(max_size: int = 3, form: str = "stated") -> Verdict:
    """Image of the shuffled law under phi_{n,j} against the rotated-word law.

    Runs over both parent types, every word with 1 <= |w| <= max_size and
    every position j. The residual is the summed total variation.
    """
    residual = Fraction(0)
    bad = []
    count = 0
    for ptype in (3, 4):
        for n in range(1, max_size + 1):
            for word in itertools.product((1, 2), repeat=n):
                for j in range(1, n + 1):
                    target_type, target = image_target(ptype, word, j, form)
                    want = displacement_law(target_type, target, "shuffled")
                    v = compare_measures("image", displacement_image(ptype, word, j), want)
                    count += 1
                    if not v.equal:
                        residual += v.residual / 2
                        bad.append((ptype, word, j))
    return Verdict(f"displacement-image-{form}", max_size, count, residual, bad)


# ---------------------------------------------------------------------------
# tree enumeration
# ---------------------------------------------------------------------------

# a subtree is (types, parents, labels, n_type1, mass) with the root at index 0, label 0

def _attach(root_type: int, children, shifts) -> Tuple[tuple, tuple, tuple, int]:
    types, parents, labels = [root_type], [-1], [0]
    n1 = 1 if root_type == 1 else 0
    for (ct, cp, cl, cn1, _), s in zip(children, shifts):
        off = len(types)
        types.extend(ct)
        parents.extend(0 if p < 0 else p + off for p in cp)
        labels.extend(lab + s for lab in cl)
        n1 += cn1
    return tuple(types), tuple(parents), tuple(labels), n1


class _Enumerator:
    def __init__(self, laws: ExactLaws, direction: Optional[str]):
        self.laws = laws
        self.direction = direction  # None: shapes only (all labels 0)
        self.count = 0
        self._gen = {}
        self._forest = {}

    def _bump(self, n):
        self.count += n
        if self.count > ITEM_GUARD:
            raise BoundTooLarge(f"enumeration exceeded {ITEM_GUARD} items")

    def words(self, ptype: int, budget: int):
        """(word, probability) pairs with |word| <= budget."""
        laws = self.laws
        if ptype == 1:
            for k in range(budget + 1):
                yield (3,) * k, laws.mu1(k)
        elif ptype == 2:
            if budget >= 1:
                yield (4,), Fraction(1)
        else:
            for (k, kp), mass in laws.pair_law(ptype).items():
                if k + kp > budget:
                    continue
                each = mass / comb(k + kp, k)
                for ones in itertools.combinations(range(k + kp), k):
                    word = [2] * (k + kp)
                    for i in ones:
                        word[i] = 1
                    yield tuple(word), each

    def forest(self, word: Tuple[int, ...], budget: int):
        key = (word, budget)
        hit = self._forest.get(key)
        if hit is not None:
            return hit
        if not word:
            out = [((), 0, Fraction(1))]
        else:
            out = []
            for sub in self.gen(word[0], budget - (len(word) - 1)):
                size = len(sub[0])
                for rest, rsize, rmass in self.forest(word[1:], budget - size):
                    out.append(((sub,) + rest, size + rsize, sub[4] * rmass))
        self._bump(len(out))
        self._forest[key] = out
        return out

    def gen(self, ptype: int, budget: int):
        key = (ptype, budget)
        hit = self._gen.get(key)
        if hit is not None:
            return hit
        out = []
        if budget >= 1:
            for word, pw in self.words(ptype, budget - 1):
                if ptype in (3, 4) and self.direction is not None:
                    disp = displacement_law(ptype, word, self.direction).items()
                else:
                    disp = [((0,) * len(word), Fraction(1))]
                for kids, _, kmass in self.forest(word, budget - 1):
                    for shifts, pd in disp:
                        t, p, lab, n1 = _attach(ptype, kids, shifts)
                        out.append((t, p, lab, n1, pw * pd * kmass))
        self._bump(len(out))
        self._gen[key] = out
        return out


@dataclass
class EnumerationTable:
    """Trees within a node bound with their exact (unconditioned) masses."""

    bound: int
    law: str
    items: List[Tuple[MultitypeSpatialTree, Fraction]]

    @property
    def total_mass(self) -> Fraction:
        return sum((m for _, m in self.items), Fraction(0))

    def conditional(self) -> Dict[tuple, Fraction]:
        total = self.total_mass
        return {t.key(): m / total for t, m in self.items}

    def __len__(self) -> int:
        return len(self.items)


def enumerate_trees(laws: ExactLaws, bound: int, root_type: int = 1, x: int = 0,
                    direction: Optional[str] = "forward", condition: Condition = Condition()) -> EnumerationTable:
    """All trees with at most ``bound`` nodes satisfying ``condition``.

    Masses are the product of ordered-offspring probabilities and (unless
    ``direction`` is None) displacement probabilities. ``root_degree_one``
    renormalises by the probability of a single root child, giving Q.
    """
    en = _Enumerator(laws, direction)
    items = []
    root_fix = Fraction(1)
    if condition.root_degree_one:
        root_fix = 1 / laws.mu1(1)
    for t, p, lab, n1, mass in en.gen(root_type, bound):
        if condition.size is not None and n1 != condition.size:
            continue
        if condition.root_degree_one and p.count(0) != 1:
            continue
        labels = tuple(v + x for v in lab)
        if condition.positive and any(lab_ < 1 for ty, lab_ in zip(t[1:], labels[1:]) if ty == 1):
            continue
        items.append((MultitypeSpatialTree(t, p, labels), mass * root_fix))
    parts = ["P" if not condition.root_degree_one else "Q", f"root={root_type}", f"x={x}"]
    if condition.size is not None:
        parts.append(f"n={condition.size}")
    if condition.positive:
        parts.append("positive")
    parts.append(direction or "shapes")
    return EnumerationTable(bound, ",".join(parts), items)


# ---------------------------------------------------------------------------
# re-rooting identities
# ---------------------------------------------------------------------------

def reroot_by_contour(tree: MultitypeSpatialTree, v0, swap_types: bool = True) -> MultitypeSpatialTree:
    """Re-rooting rebuilt from the re-rooted contour function.

    Walks the contour backwards and cyclically from the first visit of v0 to
    its last visit; the depth at each step is the tree distance to v0.
    """
    i0 = tree.index_of(tuple(v0)) if not isinstance(v0, int) else v0
    cp = contour(tree)
    seq = cp.depth_sequence.tolist()
    C = cp.C.tolist()
    two_xi = len(C) - 1
    visits = [i for i, u in enumerate(seq) if u == i0]
    k, l = visits[0], visits[-1]
    span = two_xi - (l - k)
    hatC, nodes = [], []
    for s in range(span + 1):
        m = (k - s) % two_xi if two_xi else 0
        lo, hi = min(k, m), max(k, m)
        hatC.append(C[k] + C[m] - 2 * min(C[lo:hi + 1]))
        nodes.append(seq[m])
    first_nodes = []
    seen = set()
    for step, u in enumerate(nodes):
        if step == 0 or hatC[step] == hatC[step - 1] + 1:
            if u in seen:
                raise AssertionError("contour revisits a node on an up-step")
            seen.add(u)
            first_nodes.append(u)
    # the ancestral line of v0 decides the swaps
    line = []
    u = i0
    while u >= 0:
        line.append(u)
        u = int(tree.parents[u]) if u > 0 else -1
    line.reverse()
    line_child = {a: b for a, b in zip(line[:-1], line[1:])}
    types = []
    for u in first_nodes:
        t = int(tree.types[u])
        if swap_types and u in line_child:
            nxt = int(tree.types[line_child[u]])
            if t == 3 and nxt == 2:
                t = 4
            elif t == 4 and nxt == 1:
                t = 3
        types.append(t)
    shape = tree_from_contour(hatC, types, [0] * len(types))
    base = int(tree.labels[i0])
    labels = []
    for idx, (u, t) in enumerate(zip(first_nodes, types)):
        if t in (1, 2):
            labels.append(int(tree.labels[u]) - base)
        else:
            labels.append(labels[int(shape.parents[idx])])
    return MultitypeSpatialTree(shape.types, shape.parents, labels)


def _leaf_type1(tree: MultitypeSpatialTree, address) -> Optional[int]:
    try:
        i = tree.index_of(address)
    except Exception:
        return None
    if tree.types[i] == 1 and tree.child_counts[i] == 0:
        return i
    return None


def reroot_identity_check(laws: ExactLaws, v0=(1, 1), bound: int = 12, spatial: bool = False,
                 swap_types: bool = True) -> Verdict:
    """Re-rooted law at v0 against the truncated law at v0-hat, tree by tree.

    Under Q the mass of the truncated tree t^{(v0)} (v0 a type-1 leaf) is the
    product of ordered-offspring probabilities over all nodes except the
    root and v0. Re-rooting maps such trees bijectively onto trees with
    v0-hat a type-1 leaf, preserving size, so comparing these masses on
    every tree up to ``bound`` nodes is an exact statement. With
    ``spatial=True`` labels follow the shuffled displacement law from 0.
    """
    v0 = tuple(v0)
    v0_hat = (1,) + tuple(reversed(v0[1:]))
    table = enumerate_trees(laws, bound, 1, 0, "shuffled" if spatial else None,
                            Condition(root_degree_one=True))
    strip = 1 / laws.mu1(0)
    lhs: Dict[tuple, Fraction] = defaultdict(Fraction)
    rhs: Dict[tuple, Fraction] = defaultdict(Fraction)
    keyf = (lambda t: t.key()) if spatial else (lambda t: t.shape_key())
    for tree, mass in table.items:
        m = mass * strip
        if _leaf_type1(tree, v0) is not None:
            lhs[keyf(reroot(tree, v0, swap_types))] += m
        if _leaf_type1(tree, v0_hat) is not None:
            rhs[keyf(tree)] += m
    name = "reroot" if not spatial else "reroot-spatial"
    return compare_measures(name, dict(lhs), dict(rhs), bound, {"v0": v0, "swap_types": swap_types})


def _minlabel_sides(laws: ExactLaws, bound: int, strict: bool):
    table = enumerate_trees(laws, bound, 1, 0, "shuffled", Condition(root_degree_one=True))
    lhs: Dict[tuple, Fraction] = defaultdict(Fraction)
    rhs: Dict[tuple, Fraction] = defaultdict(Fraction)
    for tree, mass in table.items:
        vm, delta, is_leaf = min_label_vertex(tree)
        if strict:
            if len(delta) == 1 and is_leaf:
                lhs[reroot(tree, vm).key()] += mass
        else:
            for v in delta:
                if _leaf_type1(tree, v) is not None:
                    lhs[reroot(tree, v).key()] += mass
        low = tree.min_nonroot_type1_label
        if low > 0 if strict else low >= 0:
            leaves = len(tree.leaves(kind=1))
            if leaves:
                rhs[tree.key()] += mass * leaves
    return dict(lhs), dict(rhs), len(table)


def minlabel_unique_check(laws: ExactLaws, bound: int = 10) -> Verdict:
    """Indicator functionals: unique leaf minimiser re-rooting vs leaf-weighted positivity."""
    lhs, rhs, n = _minlabel_sides(laws, bound, strict=True)
    v = compare_measures("minlabel-unique", lhs, rhs, bound)
    v.detail["trees"] = n
    return v


def minlabel_sum_check(laws: ExactLaws, bound: int = 10) -> Verdict:
    """Sum over leaf minimisers vs leaf-weighted nonnegativity."""
    lhs, rhs, n = _minlabel_sides(laws, bound, strict=False)
    v = compare_measures("minlabel-sum", lhs, rhs, bound)
    v.detail["trees"] = n
    return v


# ---------------------------------------------------------------------------
# maps and the pushforward identity
# ---------------------------------------------------------------------------

def _face_degrees_ok(m: RootedPlanarMap, allowed) -> bool:
    return all(len(c) in allowed for c in m.face_cycles)


def enumerate_maps(num_vertices: int, weights: WeightSequence, max_half_edges: int = 8) -> Dict[str, Fraction]:
    """Rooted planar maps with ``num_vertices`` vertices and faces of positive weight.

    Brute force over rotation systems on a fixed edge pairing; returns
    canonical form -> Boltzmann weight. Sizes beyond ``max_half_edges``
    half-edges raise BoundTooLarge.
    """
    q = weights.fractions()
    allowed = {d for d, w in q.items() if w > 0}
    out: Dict[str, Fraction] = {}
    if num_vertices == 1:
        out[RootedPlanarMap.vertex_map().canonical_form()] = Fraction(1)
    dmin = min(allowed)
    if dmin <= 2:
        raise BoundTooLarge("faces of degree <= 2 allow unboundedly many edges")
    # 2E >= dmin * F and F = E - V + 2
    emax = (dmin * (num_vertices - 2)) // (dmin - 2) if num_vertices >= 2 else 0
    for edges in range(max(1, num_vertices - 1), emax + 1):
        h = 2 * edges
        faces_needed = edges - num_vertices + 2
        if faces_needed < 1:
            continue
        if not any(_degree_split(2 * edges, faces_needed, sorted(allowed))):
            continue
        if h > max_half_edges:
            raise BoundTooLarge(f"{h} half-edges exceed the brute-force limit {max_half_edges}")
        alpha = [i ^ 1 for i in range(h)]
        for sigma in itertools.permutations(range(h)):
            m = RootedPlanarMap(alpha, sigma, 0)
            if m.num_vertices != num_vertices:
                continue
            if m.num_faces != faces_needed or not _face_degrees_ok(m, allowed):
                continue
            try:
                m.check()
            except ValueError:
                continue
            w = boltzmann_weight(m, weights)
            for root in range(h):
                code = RootedPlanarMap(alpha, sigma, root).canonical_form()
                out[code] = w
    return out


def _degree_split(total: int, parts: int, allowed: List[int]):
    """Yield True if ``total`` splits into ``parts`` allowed degrees."""
    @lru_cache(maxsize=None)
    def ok(t, p):
        if p == 0:
            return t == 0
        return any(d <= t and ok(t - d, p - 1) for d in allowed)

    yield ok(total, parts)


def pushforward_check(weights: WeightSequence, n: int, bound: int = 12,
                      map_weights: Optional[WeightSequence] = None) -> Verdict:
    """Image of the positive size-n tree law under the BDG map vs the Boltzmann law.

    ``map_weights`` overrides the weights on the map side (negative controls).
    Raises MismatchReport when the two normalised laws differ.
    """
    laws = exact_laws(weights)
    table = enumerate_trees(laws, bound, 1, 1, "forward", Condition(size=n, positive=True))
    image: Dict[str, Fraction] = defaultdict(Fraction)
    for tree, mass in table.items:
        image[bdg_forward(tree).canonical_form()] += mass
    total = sum(image.values(), Fraction(0))
    tree_side = {k: v / total for k, v in image.items()}
    maps = enumerate_maps(map_vertex_count(n), map_weights or weights)
    z = sum(maps.values(), Fraction(0))
    map_side = {k: v / z for k, v in maps.items()} if z else {}
    v = compare_measures("pushforward", tree_side, map_side, bound,
                         {"n": n, "trees": len(table), "maps": len(maps)})
    if not v.equal:
        raise MismatchReport(f"pushforward mismatch at n={n}: {len(v.offending)} maps differ", v.offending)
    return v


def named_check(which: str, fixture: str = "q4", bound: int = 12) -> Verdict:
    from .weights import q4_fixture, mixed_fixture

    weights = {"q4": q4_fixture, "mixed": mixed_fixture}[fixture]()
    laws = exact_laws(weights)
    if which == "reroot":
        return reroot_identity_check(laws, (1, 1), bound)
    if which == "minlabel-unique":
        return minlabel_unique_check(laws, bound)
    if which == "minlabel-sum":
        return minlabel_sum_check(laws, bound)
    if which == "displacement-image":
        return displacement_image_check(3, "stated")
    if which == "displacement-image-mirrored":
        return displacement_image_check(3, "mirrored")
    raise ValueError(f"unknown check {which!r}")


# ---------------------------------------------------------------------------
# scalar cross-check for pure quadrangulation weights
# ---------------------------------------------------------------------------

def quadrangulation_fixed_point(q4, steps: int = 64) -> Optional[Tuple[float, float]]:
    """(z_plus, spectral radius) for weights with only q4 > 0, by bisection.

    Here z_diamond = 0 and z_plus is the smallest root of z = 1 + 3 q4 z^2.
    The gap g(z) = 1 + 3 q4 z^2 - z is smallest at z = 1/(6 q4), so a root
    exists iff g is <= 0 there, and [1, 1/(6 q4)] brackets the smallest one.
    Every type-3 node then has exactly one type-1 child, so the mean matrix
    is a 2-cycle with radius sqrt(z_plus - 1). Returns None if no root.

    The bisection runs in exact rationals: at criticality the root is
    double and a float gap loses half the digits.
    """
    q = Fraction(q4)
    if q <= 0:
        raise ValueError("q4 must be positive")
    gap = lambda z: 1 + 3 * q * z * z - z
    lo, hi = Fraction(1), 1 / (6 * q)
    if hi < lo or gap(hi) > 0:
        return None
    for _ in range(steps):
        mid = (lo + hi) / 2
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return float(hi), float(hi - 1) ** 0.5
