from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from bdgmaps.errors import AddressNotFound, BadPosition, NotTypeOne
from bdgmaps.oracle import enumerate_trees, reroot_by_contour
from bdgmaps.reroot import (
    exit_truncate,
    min_label_vertex,
    rebase_displacements,
    plan_reroot,
    reroot,
    reroot_full,
    truncate_at,
)
from bdgmaps.trees import Condition, MultitypeSpatialTree, is_valid, sample_conditioned, subtree_at, validate

CHAIN = MultitypeSpatialTree.from_nested((1, 1, [(3, 1, [(1, 1, [])])]))


def type1_targets(tree):
    return [tree.address(int(i)) for i in np.flatnonzero(tree.types == 1) if i > 0]


@pytest.fixture(scope="module")
def mixed_table(mixed_exact):
    return enumerate_trees(mixed_exact, 9, direction="shuffled")


class TestTruncate:
    def test_leaf_is_identity(self):
        assert truncate_at(CHAIN, (1, 1)) == CHAIN

    def test_root(self):
        assert len(truncate_at(CHAIN, ())) == 1

    def test_chain(self):
        cut = truncate_at(CHAIN, (1,))
        assert cut.types.tolist() == [1, 3] and cut.parents.tolist() == [-1, 0]

    def test_missing(self):
        with pytest.raises(AddressNotFound):
            truncate_at(CHAIN, (1, 2))


class TestReroot:
    def test_chain(self):
        res = reroot_full(CHAIN, (1, 1))
        assert res.tree.types.tolist() == [1, 3, 1]
        assert res.tree.parents.tolist() == [-1, 0, 1]
        assert res.tree.labels.tolist() == [0, 0, 0]
        assert res.tree.address(res.v0_hat) == (1, 1)

    def test_orientation_reversed(self):
        tree = MultitypeSpatialTree.from_nested(
            (1, 0, [(3, 0, [(1, 1, []), (1, 0, [(3, 0, [])]), (1, -1, [])])]))
        new = reroot(tree, (1, 2))
        # v0's own subtree is cut; reading the old cyclic order backwards from
        # v0 gives 11, then the old root, then 13
        assert new.types.tolist() == [1, 3, 1, 1, 1]
        kids = new.children(1).tolist()
        assert [int(new.labels[k]) for k in kids] == [1, 0, -1]
        assert new.address(kids[1]) == (1, 2)

    def test_needs_type_one(self):
        with pytest.raises(NotTypeOne):
            reroot(CHAIN, (1,))

    def test_matches_contour_oracle(self, mixed_table):
        cases = 0
        for tree, _ in mixed_table.items:
            for v0 in type1_targets(tree):
                for swap in (True, False):
                    assert reroot(tree, v0, swap) == reroot_by_contour(tree, v0, swap), (tree.key(), v0)
                cases += 1
        assert cases > 5000

    def test_structure(self, mixed_table):
        for tree, _ in mixed_table.items:
            for v0 in type1_targets(tree):
                res = reroot_full(tree, v0)
                new = res.tree
                assert new.labels[0] == 0
                assert len(new.children(0)) == 1
                validate(new, displacement="either", root_types=(1,))
                plan = plan_reroot(tree, v0)
                assert plan.balanced
                assert new.address(res.v0_hat) == plan.v0_hat
                cut = truncate_at(tree, v0)
                assert len(new) == len(cut)
                assert Counter(new.types.tolist()) == Counter(cut.types.tolist())

    def test_involution(self, mixed_table):
        # holds when the root has one child; otherwise the second re-rooting
        # also cuts the root's other subtrees
        checked = 0
        for tree, _ in mixed_table.items:
            if len(tree.children(0)) != 1:
                continue
            for v0 in type1_targets(tree):
                checked += 1
                res = reroot_full(tree, v0)
                back = reroot(res.tree, res.tree.address(res.v0_hat))
                assert back == truncate_at(tree, v0)
        assert checked > 1000

    def test_table_closed_under_reroot(self, mixed_table):
        keys = {t.key() for t, _ in mixed_table.items}
        for tree, _ in mixed_table.items:
            for v0 in type1_targets(tree):
                assert reroot(tree, v0).key() in keys

    def test_swaps_needed_for_validity(self, mixed_table):
        broken = 0
        for tree, _ in mixed_table.items:
            for v0 in type1_targets(tree):
                if plan_reroot(tree, v0).swap_3_to_4:
                    broken += not is_valid(reroot(tree, v0, swap_types=False), "either", (1,))
        assert broken > 0

    def test_line_types_alternate(self, mixed_table):
        for tree, _ in mixed_table.items:
            for v0 in type1_targets(tree):
                plan = plan_reroot(tree, v0)
                for depth, t in enumerate(plan.line_types):
                    assert t in ((1, 2) if depth % 2 == 0 else (3, 4))


class TestPhi:
    def test_examples(self):
        assert rebase_displacements(2, 1, (3, 5)) == (-3, 2)
        assert rebase_displacements(1, 1, (4,)) == (-4,)
        assert rebase_displacements(3, 2, (1, 2, 3)) == (-1, -2, 1)

    def test_bad_position(self):
        with pytest.raises(BadPosition):
            rebase_displacements(2, 3, (1, 2))
        with pytest.raises(BadPosition):
            rebase_displacements(2, 1, (1, 2, 3))

    @given(st.lists(st.integers(-50, 50), min_size=1, max_size=8), st.data())
    def test_involution(self, x, data):
        j = data.draw(st.integers(1, len(x)))
        assert rebase_displacements(len(x), j, rebase_displacements(len(x), j, tuple(x))) == tuple(x)


class TestMinLabel:
    def test_single_node(self):
        assert min_label_vertex(MultitypeSpatialTree([1], [-1], [3])) == ((), [()], True)

    def test_equal_labels(self):
        vm, delta, leaf = min_label_vertex(CHAIN)
        assert vm == () and delta == [(), (1, 1)] and not leaf

    def test_lexicographic_first(self):
        tree = MultitypeSpatialTree.from_nested(
            (1, 0, [(3, 0, [(1, -1, [])]), (3, 0, [(1, -1, [])])]))
        assert min_label_vertex(tree) == ((1, 1), [(1, 1), (2, 1)], True)

    def test_leaf_frequency_stays_positive(self, q4, rng):
        freq = []
        for n in (50, 100, 200):
            hits = 0
            for _ in range(3000):
                tree = sample_conditioned(q4[2], condition=Condition(size=n, root_degree_one=True),
                                          direction="shuffled", rng=rng, method="sequential")
                hits += min_label_vertex(tree)[2]
            freq.append(hits / 3000)
        assert min(freq) > 0.2
        assert max(freq) - min(freq) < 0.1


class TestExitTruncate:
    def test_nothing_exits(self, mixed, rng):
        tree = sample_conditioned(mixed[2], condition=Condition(size=30), rng=rng)
        cut, exits = exit_truncate(tree, tree.labels.max() + 1)
        assert exits == [] and cut == tree

    def test_threshold_must_exceed_root(self):
        with pytest.raises(ValueError):
            exit_truncate(CHAIN, 1)

    @pytest.mark.slow
    def test_exits(self, mixed, rng):
        for _ in range(200):
            tree = sample_conditioned(mixed[2], x=1, condition=Condition(size=40, positive=True), rng=rng)
            cut, exits = exit_truncate(tree, 3)
            assert [a for a, _, _ in exits] == sorted(a for a, _, _ in exits)
            for address, t, lab in exits:
                assert t in (1, 2) and lab >= 3
                i = cut.index_of(address)
                assert cut.child_counts[i] == 0
            inside = cut.labels[(cut.types == 1) | (cut.types == 2)]
            assert np.sum(inside >= 3) == len(exits)

    def test_exit_subtrees_follow_conditioned_law(self, q4, rng):
        # paired design: each exit subtree against a direct draw of the
        # positive law with the same start label and type-1 size
        pooled, direct = [], []
        for _ in range(2500):
            tree = sample_conditioned(q4[2], x=1, condition=Condition(size=200, positive=True),
                                      rng=rng, method="sequential")
            _, exits = exit_truncate(tree, 2)
            for address, _, lab in exits:
                sub = subtree_at(tree, address)
                m = sub.count(1)
                ref = sample_conditioned(q4[2], x=lab, condition=Condition(size=m, positive=True),
                                         rng=rng, method="sequential")
                pooled.append(min(int(sub.labels.max()), 6))
                direct.append(min(int(ref.labels.max()) - lab, 6))
        assert len(pooled) > 1000
        values = sorted(set(pooled) | set(direct))
        table = [[pooled.count(v) for v in values], [direct.count(v) for v in values]]
        assert sps.chi2_contingency(table).pvalue > 0.001
