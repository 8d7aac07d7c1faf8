import io
import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from bdgmaps.errors import AddressNotFound, InvalidTree, NodeCapExceeded, RetryBudgetExhausted
from bdgmaps.oracle import displacement_law, enumerate_trees
from bdgmaps.stats import type1_size_counts
from bdgmaps.trees import (
    Condition,
    DisplacementLaw,
    MultitypeSpatialTree,
    contour,
    in_positive_class,
    read_dump,
    sample_conditioned,
    sample_displacement,
    sample_displacements,
    sample_gw,
    subtree_at,
    tree_from_contour,
    validate,
    write_dump,
)

CHAIN = MultitypeSpatialTree.from_nested((1, 1, [(3, 1, [(1, 1, [])])]))


def words(max_len):
    for n in range(max_len + 1):
        yield from itertools.product((1, 2), repeat=n)


def draw_counts(law, count, rng):
    rows = sample_displacements(law, count, rng)
    keys, counts = np.unique(rows, axis=0, return_counts=True)
    return {tuple(int(v) for v in k): int(c) for k, c in zip(keys, counts)}


class TestContour:
    def test_single_node(self):
        c = contour(MultitypeSpatialTree([1], [-1], [0]))
        assert c.C.tolist() == [0] and c.n_edges == 0

    def test_chain(self):
        c = contour(CHAIN)
        assert c.C.tolist() == [0, 1, 2, 1, 0]
        assert c.V.tolist() == [1, 1, 1, 1, 1]
        assert c.corners().tolist() == [0, 2, 0]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 40))
    def test_round_trip(self, seed, n):
        from bdgmaps.weights import fixture

        tree = sample_conditioned(fixture("mixed")[2], condition=Condition(size=n), rng=seed)
        c = contour(tree)
        assert len(c.C) == 2 * (len(tree) - 1) + 1
        assert np.all(np.abs(np.diff(c.C)) == 1) and c.C[0] == c.C[-1] == 0
        assert set(c.depth_sequence.tolist()) == set(range(len(tree)))
        first = np.unique(c.depth_sequence, return_index=True)[1]
        order = c.depth_sequence[np.sort(first)]
        back = tree_from_contour(c.C, tree.types[order], tree.labels[order])
        assert back == tree

    def test_bad_contour(self):
        with pytest.raises(InvalidTree):
            tree_from_contour([0, 2, 0], [1, 3], [0, 0])


class TestDisplacement:
    def test_type3_single_one(self, rng):
        counts = draw_counts(DisplacementLaw(3, (1,)), 30000, rng)
        assert set(counts) == {(-1,), (0,), (1,)}
        assert sps.chisquare(list(counts.values())).pvalue > 0.001

    def test_type4_single_one(self, rng):
        counts = draw_counts(DisplacementLaw(4, (1,)), 30000, rng)
        assert set(counts) == {(0,), (1,)}
        assert sps.chisquare(list(counts.values())).pvalue > 0.001

    def test_empty_word(self, rng):
        assert sample_displacement(DisplacementLaw(3, ()), rng) == ()

    def test_bad_law(self):
        with pytest.raises(ValueError):
            DisplacementLaw(1, (3,))
        with pytest.raises(ValueError):
            DisplacementLaw(3, (1,), "sideways")

    @pytest.mark.parametrize("ptype", [3, 4])
    def test_forward_uniform(self, ptype, rng):
        # uniform on the admissible set, chi-square per word with k + k' <= 4
        for word in words(4):
            exact = displacement_law(ptype, word, "forward")
            counts = draw_counts(DisplacementLaw(ptype, word), 100000, rng)
            assert set(counts) <= set(exact), word
            if len(exact) > 1:
                obs = [counts.get(v, 0) for v in exact]
                exp = [100000 * float(p) for p in exact.values()]
                assert sps.chisquare(obs, exp).pvalue > 0.001, word

    @pytest.mark.parametrize("ptype", [3, 4])
    def test_closure(self, ptype, rng):
        for word in words(4):
            rows = sample_displacements(DisplacementLaw(ptype, word), 200, rng)
            for row in rows:
                labels = list(row) + [0]
                prev_one = ptype == 3
                parts, last = [], 0
                for lab, letter in zip(labels, list(word) + [None]):
                    parts.append(lab - last + (1 if prev_one else 0))
                    last, prev_one = lab, letter == 1
                assert min(parts) >= 0
                assert sum(parts) == word.count(1) + (1 if ptype == 3 else 0)

    @pytest.mark.parametrize("ptype", [3, 4])
    def test_shuffled_is_mixture(self, ptype, rng):
        for word in words(3):
            exact = displacement_law(ptype, word, "shuffled")
            fwd, rev = displacement_law(ptype, word, "forward"), displacement_law(ptype, word, "reversed")
            for v in set(fwd) | set(rev):
                assert exact.get(v, 0) == (fwd.get(v, 0) + rev.get(v, 0)) / 2
            counts = draw_counts(DisplacementLaw(ptype, word, "shuffled"), 100000, rng)
            tv = 0.5 * sum(abs(counts.get(v, 0) / 100000 - float(p)) for v, p in exact.items())
            assert tv < 0.01, (word, tv)

    def test_reversed_mirrors_forward(self):
        for word in words(3):
            rev = displacement_law(3, word, "reversed")
            fwd = displacement_law(3, tuple(reversed(word)), "forward")
            assert rev == {tuple(reversed(v)): p for v, p in fwd.items()}


def capped_gw(laws, rng, cap=500, **kw):
    """A GW draw, or None when it outgrows ``cap`` nodes (heavy tail)."""
    try:
        return sample_gw(laws, rng=rng, node_cap=cap, **kw)
    except NodeCapExceeded:
        return None


class TestGaltonWatson:
    def test_childless_root_half(self, q4, rng):
        hits = sum(t is not None and len(t) == 1 for t in (capped_gw(q4[2], rng) for _ in range(100000)))
        assert abs(hits / 100000 - 0.5) < 3 * 0.5 / np.sqrt(100000)

    def test_type2_root(self, mixed, rng):
        seen = 0
        for _ in range(2000):
            tree = capped_gw(mixed[2], rng, root_type=2)
            if tree is not None:
                seen += 1
                assert tree.types[tree.children(0)].tolist() == [4]
        assert seen > 1500

    def test_node_cap(self, q4):
        rng = np.random.Generator(np.random.Philox(5))
        with pytest.raises(NodeCapExceeded):
            for _ in range(1000):
                sample_gw(q4[2], rng=rng, node_cap=50)

    def test_type2_root_needs_diamond_law(self, q4):
        with pytest.raises(ValueError):
            sample_gw(q4[2], root_type=2)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["q4", "mixed"])
    def test_validator_accepts_samples(self, name, request, rng):
        laws = request.getfixturevalue(name)[2]
        directions = ["forward", "reversed", "shuffled"]
        checked = 0
        for i in range(100000):
            direction = directions[i % 3]
            root = 2 if name == "mixed" and i % 5 == 0 else 1
            tree = capped_gw(laws, rng, direction=direction, x=int(rng.integers(-3, 4)), root_type=root)
            if tree is None:
                continue
            validate(tree, displacement="forward" if direction == "forward" else "either")
            checked += 1
        assert checked > 95000

    def test_size_tail_slope(self, q4, rng):
        counts = type1_size_counts(q4[2], 10**6, 256, rng, False)
        sizes = np.array([16, 32, 64, 128])
        freq = counts[sizes] / 10**6
        slope = np.polyfit(np.log(sizes), np.log(freq), 1)[0]
        assert abs(slope + 1.5) < 0.1

    def test_size_law_exact_small(self, q4, rng):
        # for quadrangulations P(#t1 = n) = C(2n-2, n-1) / (n 2^(2n-1))
        from math import comb

        counts = type1_size_counts(q4[2], 200000, 10, rng, False)
        for n in range(1, 6):
            p = comb(2 * n - 2, n - 1) / (n * 2 ** (2 * n - 1))
            assert abs(counts[n] / 200000 - p) < 4 * np.sqrt(p * (1 - p) / 200000)


class TestConditioned:
    @pytest.mark.parametrize("method", ["rejection", "sequential"])
    def test_size_two_frequencies(self, q4, q4_exact, method, rng):
        law = enumerate_trees(q4_exact, 3, condition=Condition(size=2)).conditional()
        assert sorted(law.values()) == [Fraction(1, 3)] * 3
        draws = [sample_conditioned(q4[2], condition=Condition(size=2), rng=rng, method=method).key()
                 for _ in range(30000)]
        obs = [draws.count(k) for k in law]
        assert sum(obs) == len(draws)
        assert sps.chisquare(obs, [30000 * float(p) for p in law.values()]).pvalue > 0.001

    @pytest.mark.parametrize("method", ["rejection", "sequential"])
    def test_mixed_size_two_within_bound(self, mixed, mixed_exact, method, rng):
        # given that the tree fits in the bound, frequencies follow the exact masses
        law = enumerate_trees(mixed_exact, 7, condition=Condition(size=2)).conditional()
        draws = [sample_conditioned(mixed[2], condition=Condition(size=2), rng=rng, method=method).key()
                 for _ in range(40000)]
        inside = [k for k in draws if k in law]
        assert len(inside) > 0.8 * len(draws)
        keys = list(law)
        obs = [inside.count(k) for k in keys]
        exp = [len(inside) * float(law[k]) for k in keys]
        assert sps.chisquare(obs, exp).pvalue > 0.001

    def test_size_one_is_single_node(self, q4, q4_exact, rng):
        law = enumerate_trees(q4_exact, 8, condition=Condition(size=1)).conditional()
        assert list(law.values()) == [1]
        for _ in range(200):
            assert len(sample_conditioned(q4[2], condition=Condition(size=1), rng=rng)) == 1

    @pytest.mark.parametrize("method", ["rejection", "sequential"])
    def test_positive(self, mixed, method, rng):
        for _ in range(100):
            tree = sample_conditioned(mixed[2], x=1, condition=Condition(size=30, positive=True),
                                      rng=rng, method=method)
            assert tree.count(1) == 30 and in_positive_class(tree)
            validate(tree)

    def test_root_degree_one(self, mixed, rng):
        for _ in range(200):
            tree = sample_conditioned(mixed[2], condition=Condition(size=10, root_degree_one=True), rng=rng)
            assert len(tree.children(0)) == 1 and tree.count(1) == 10

    def test_budget(self, q4, rng):
        with pytest.raises(RetryBudgetExhausted) as err:
            sample_conditioned(q4[2], x=1, condition=Condition(size=400, positive=True),
                               rng=rng, retry_budget=1)
        assert err.value.attempts == 1

    def test_condition_parse(self):
        assert Condition.parse("size+positive", 7) == Condition(7, True, False)
        assert Condition.parse("none") == Condition()
        with pytest.raises(ValueError):
            Condition.parse("size")


class TestSubtree:
    def test_root(self, mixed, rng):
        tree = sample_gw(mixed[2], x=5, rng=rng)
        sub = subtree_at(tree, ())
        assert sub.shape_key() == tree.shape_key()
        assert np.array_equal(sub.labels, tree.labels - 5)

    def test_chain(self):
        sub = subtree_at(CHAIN, (1,))
        assert sub.types.tolist() == [3, 1] and sub.parents.tolist() == [-1, 0]
        assert sub.labels.tolist() == [0, 0]

    def test_leaf(self, mixed, rng):
        tree = sample_conditioned(mixed[2], condition=Condition(size=20), rng=rng)
        for leaf in tree.leaves():
            sub = subtree_at(tree, tree.address(int(leaf)))
            assert len(sub) == 1 and sub.labels.tolist() == [0]

    def test_missing(self):
        with pytest.raises(AddressNotFound):
            subtree_at(CHAIN, (2,))


class TestValidatorAndDump:
    def test_rejects_type1_with_type1_child(self):
        bad = MultitypeSpatialTree([1, 1], [-1, 0], [0, 0])
        with pytest.raises(InvalidTree):
            validate(bad)

    def test_rejects_label_jump(self):
        bad = MultitypeSpatialTree.from_nested((1, 0, [(3, 0, [(1, -2, [])])]))
        with pytest.raises(InvalidTree):
            validate(bad)

    def test_rejects_type2_label_change(self):
        bad = MultitypeSpatialTree.from_nested((2, 0, [(4, 1, [])]))
        with pytest.raises(InvalidTree):
            validate(bad)

    def test_positive_class(self):
        assert in_positive_class(CHAIN)
        assert not in_positive_class(MultitypeSpatialTree.from_nested((1, 1, [(3, 1, [(1, 0, [])])])))

    def test_dump_round_trip(self, mixed, rng):
        trees = [sample_conditioned(mixed[2], condition=Condition(size=15), rng=rng) for _ in range(20)]
        buf = io.StringIO()
        write_dump(trees, buf)
        buf.seek(0)
        assert read_dump(buf) == trees

    def test_dump_reader_validates(self):
        buf = io.StringIO('{"types":[1,1],"parents":[-1,0],"labels":[0,0]}\n')
        with pytest.raises(InvalidTree):
            read_dump(buf)
