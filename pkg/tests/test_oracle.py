import json
from collections import defaultdict
from fractions import Fraction

import pytest

from bdgmaps.bijection import RootedPlanarMap, distances, map_vertex_count
from bdgmaps.errors import BoundTooLarge, MismatchReport
from bdgmaps.oracle import (
    compare_measures,
    count_identity_check,
    displacement_image,
    displacement_image_check,
    displacement_law,
    enumerate_maps,
    enumerate_trees,
    exact_laws,
    image_target,
    reroot_identity_check,
    minlabel_unique_check,
    minlabel_sum_check,
    named_check,
    pushforward_check,
)
from bdgmaps.trees import Condition
from bdgmaps.weights import WeightSequence, mixed_fixture, q4_fixture


def decode(code):
    if code == RootedPlanarMap.vertex_map().canonical_form():
        return RootedPlanarMap.vertex_map()
    pairs = [tuple(map(int, p.split(","))) for p in code.split(";")]
    return RootedPlanarMap([a for _, a in pairs], [s for s, _ in pairs], 0)


class TestEnumerateTrees:
    def test_single_node(self, q4_exact):
        table = enumerate_trees(q4_exact, 1)
        assert len(table) == 1
        assert table.items[0][1] == Fraction(1, 2)

    def test_bound_three_by_hand(self, q4_exact):
        # the chain root -> type 3 -> type 1 has shape mass 1/4 * 1 * 1/2,
        # split evenly over the three displacements of the word (1)
        table = enumerate_trees(q4_exact, 3)
        masses = sorted(m for _, m in table.items)
        assert masses == [Fraction(1, 24)] * 3 + [Fraction(1, 2)]

    def test_size_condition_renormalises(self, q4_exact, mixed_exact):
        for laws in (q4_exact, mixed_exact):
            table = enumerate_trees(laws, 7, condition=Condition(size=1))
            assert sum(table.conditional().values()) == 1

    def test_mass_increases_to_one(self, q4_exact):
        masses = [enumerate_trees(q4_exact, b).total_mass for b in (1, 3, 5, 7, 9)]
        assert masses == [Fraction(1, 2), Fraction(5, 8), Fraction(11, 16), Fraction(93, 128), Fraction(193, 256)]
        assert all(a < b < 1 for a, b in zip(masses, masses[1:]))

    def test_positive_condition(self, mixed_exact):
        table = enumerate_trees(mixed_exact, 8, x=1, condition=Condition(positive=True))
        for tree, _ in table.items:
            assert tree.labels[tree.types == 1].min() >= 1

    def test_law_tag(self, q4_exact):
        table = enumerate_trees(q4_exact, 5, x=1, condition=Condition(size=2, positive=True))
        assert table.law == "P,root=1,x=1,n=2,positive,forward"
        assert enumerate_trees(q4_exact, 3, condition=Condition(root_degree_one=True)).law.startswith("Q")

    def test_root_degree_one_is_conditional(self, mixed_exact):
        # Q renormalises by mu1({1}); summed to a large bound the mass nears 1
        near = enumerate_trees(mixed_exact, 9, condition=Condition(root_degree_one=True)).total_mass
        far = enumerate_trees(mixed_exact, 11, condition=Condition(root_degree_one=True)).total_mass
        assert near < far < 1


class TestExactLaws:
    def test_q4(self, q4_exact):
        assert (q4_exact.z_plus, q4_exact.z_diamond) == (2, 0)
        assert q4_exact.pair_law(3) == {(1, 0): 1}
        assert q4_exact.mu1(0) == Fraction(1, 2)

    def test_mixed_sums(self, mixed_exact):
        assert (mixed_exact.z_plus, mixed_exact.z_diamond) == (Fraction(9, 4), Fraction(3, 4))
        for ptype in (3, 4):
            assert sum(mixed_exact.pair_law(ptype).values()) == 1
        assert mixed_exact.pair_law(4)[(1, 1)] == Fraction(1, 4)

    def test_zeta_type2(self, mixed_exact):
        assert mixed_exact.zeta(2, (4,)) == 1
        assert mixed_exact.zeta(2, (3,)) == 0


class TestDisplacementLaw:
    def test_uniform_over_admissible(self):
        law = displacement_law(3, (1,), "forward")
        assert law == {(-1,): Fraction(1, 3), (0,): Fraction(1, 3), (1,): Fraction(1, 3)}

    @pytest.mark.parametrize("ptype,word", [(3, (1, 2)), (4, (1, 1)), (4, (2, 2, 1))])
    def test_laws_are_probabilities(self, ptype, word):
        for direction in ("forward", "reversed", "shuffled"):
            assert sum(displacement_law(ptype, word, direction).values()) == 1


class TestDisplacementImage:
    def test_stated_form_fails(self):
        v = displacement_image_check(3, "stated")
        assert not v.equal
        assert v.items == 68 and len(v.offending) == 50

    def test_mirrored_form_holds(self):
        v = displacement_image_check(3, "mirrored")
        assert v.equal and v.items == 68

    def test_word_12_position_1(self):
        for ptype in (3, 4):
            target = image_target(ptype, (1, 2), 1, "mirrored")
            want = displacement_law(*target, "shuffled")
            assert displacement_image(ptype, (1, 2), 1) == want
        assert image_target(3, (1, 2), 1, "stated") == (3, (2, 1))

    def test_unknown_form(self):
        with pytest.raises(ValueError):
            image_target(3, (1,), 1, "sideways")


class TestRerootIdentities:
    # type-3 nodes have at most one type-1 child here, so v0 = 11 is a leaf
    # of the single chain only; v0 = 1111 has many trees on each side
    @pytest.mark.parametrize("v0,least", [((1, 1), 1), ((1, 1, 1, 1), 50)])
    def test_reroot_mixed(self, mixed_exact, v0, least):
        v = reroot_identity_check(mixed_exact, v0, 12)
        assert v.equal and v.items >= least

    def test_reroot_spatial(self, mixed_exact):
        assert reroot_identity_check(mixed_exact, (1, 1), 10, spatial=True).equal

    def test_no_swap_control(self, mixed_exact):
        assert not reroot_identity_check(mixed_exact, (1, 1, 1, 1), 12, swap_types=False).equal

    @pytest.mark.parametrize("laws", ["q4_exact", "mixed_exact"])
    def test_minimum_label_identities(self, laws, request):
        laws = request.getfixturevalue(laws)
        five, six = minlabel_unique_check(laws, 10), minlabel_sum_check(laws, 10)
        assert five.equal and six.equal
        assert five.items > 0 and six.items >= five.items

    def test_dispatch(self):
        assert named_check("reroot", "mixed", 10).equal
        assert not named_check("displacement-image").equal
        assert named_check("displacement-image-mirrored").equal
        with pytest.raises(ValueError):
            named_check("nonsense")


class TestVerdict:
    def test_json_keys(self):
        v = count_identity_check(4)
        obj = json.loads(v.to_json())
        assert set(obj) == {"check", "bound", "items", "residual_numerator", "residual_denominator", "equal"}
        assert obj["residual_numerator"] == 0 and obj["equal"]

    def test_residual_is_exact(self):
        v = compare_measures("toy", {"a": Fraction(1, 3)}, {"a": Fraction(1, 4), "b": Fraction(1, 12)})
        assert v.residual == Fraction(1, 6)
        assert v.offending == ["a", "b"]


class TestPushforward:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_q4(self, n):
        v = pushforward_check(q4_fixture(), n)
        assert v.equal
        assert v.detail["maps"] == {1: 1, 2: 2, 3: 9}[n]

    def test_hexagon_control(self):
        bad = WeightSequence.from_mapping({4: Fraction(1, 12), 6: Fraction(1, 100)})
        with pytest.raises(MismatchReport) as exc:
            pushforward_check(q4_fixture(), 3, map_weights=bad)
        assert exc.value.offending

    def test_rescaled_q4_cancels(self):
        # quadrangulations with V vertices all have V - 2 faces, so a
        # different q4 drops out after normalising
        bad = WeightSequence.from_mapping({4: Fraction(1, 13)})
        assert pushforward_check(q4_fixture(), 3, map_weights=bad).equal

    def test_degree_two_faces_unbounded(self):
        with pytest.raises(BoundTooLarge):
            enumerate_maps(2, mixed_fixture())

    def test_map_count_at_three_vertices(self):
        maps = enumerate_maps(map_vertex_count(3), q4_fixture())
        assert len(maps) == 9
        assert set(maps.values()) == {Fraction(1, 144)}


class TestRadiusLaw:
    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("direction", ["forward", "shuffled"])
    def test_sup_label_matches_radius(self, q4_exact, n, direction):
        table = enumerate_trees(q4_exact, 12, 1, 1, direction, Condition(size=n, positive=True))
        tree_law = defaultdict(Fraction)
        for tree, mass in table.items:
            tree_law[int(tree.labels[tree.types == 1].max())] += mass / table.total_mass
        maps = enumerate_maps(map_vertex_count(n), q4_fixture())
        z = sum(maps.values())
        map_law = defaultdict(Fraction)
        for code, w in maps.items():
            map_law[int(distances(decode(code)).max())] += w / z
        assert dict(tree_law) == dict(map_law)

    def test_degenerate_size_one(self, q4_exact):
        # the lone vertex carries label 1 while the vertex map has radius 0
        table = enumerate_trees(q4_exact, 12, 1, 1, "forward", Condition(size=1, positive=True))
        assert [int(t.labels[0]) for t, _ in table.items] == [1]
        assert distances(RootedPlanarMap.vertex_map()).max() == 0


class TestCounts:
    def test_identity(self):
        v = count_identity_check(6)
        assert v.equal and v.items == 49
