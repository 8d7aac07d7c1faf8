from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from bdgmaps.errors import DivergentSeries, InvalidWeights, NotAdmissible, NotCritical
from bdgmaps.oracle import brute_counts, quadrangulation_fixed_point
from bdgmaps.weights import (
    BULLET,
    DIAMOND,
    REGULAR_CRITICAL,
    SUBCRITICAL,
    WeightSequence,
    alias_table,
    build_offspring,
    eval_f,
    eval_f_exact,
    fixture,
    mixed_fixture,
    n_bullet,
    n_diamond,
    q4_fixture,
    sample_ordering,
    solve_fixed_point,
    spectral_radius,
)


def quad(q4):
    return WeightSequence.from_mapping({4: q4})


class TestCounts:
    @pytest.mark.parametrize("k,kp,expected", [(0, 0, 1), (1, 0, 3), (0, 2, 3), (1, 1, 6)])
    def test_n_bullet(self, k, kp, expected):
        assert n_bullet(k, kp) == expected == comb(2 * k + kp + 1, k + 1)

    @pytest.mark.parametrize("k,kp,expected", [(0, 0, 1), (1, 0, 2), (1, 1, 3)])
    def test_n_diamond(self, k, kp, expected):
        assert n_diamond(k, kp) == expected

    def test_b11_by_enumeration(self):
        assert brute_counts(1, 1)[1] == 3

    @given(st.integers(0, 6), st.integers(0, 6))
    def test_brute_force_agrees(self, k, kp):
        assert brute_counts(k, kp) == (n_bullet(k, kp), n_diamond(k, kp))

    @given(st.integers(0, 5), st.integers(1, 6))
    def test_shift_identity(self, k, kp):
        assert n_diamond(k + 1, kp - 1) == n_bullet(k, kp)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            n_bullet(-1, 0)


class TestSeries:
    def test_quadrangulation_bullet(self):
        w = q4_fixture()
        assert eval_f(w, BULLET, 2.0, 0.0) == pytest.approx(0.5, abs=1e-15)
        # (x + y^2)/4 at a generic point
        assert eval_f(w, BULLET, 0.7, 1.3) == pytest.approx((0.7 + 1.3**2) / 4)

    def test_origin_gives_q2(self):
        w = mixed_fixture()
        assert eval_f(w, BULLET, 0.0, 0.0) == pytest.approx(29 / 96)
        assert eval_f_exact(w, BULLET, Fraction(0), Fraction(0)) == Fraction(29, 96)

    def test_quadrangulation_diamond_vanishes(self):
        assert eval_f(q4_fixture(), DIAMOND, 2.0, 0.0) == 0.0

    def test_exact_matches_float(self):
        w = mixed_fixture()
        x, y = Fraction(9, 4), Fraction(3, 4)
        for which in (BULLET, DIAMOND):
            assert float(eval_f_exact(w, which, x, y)) == pytest.approx(eval_f(w, which, 2.25, 0.75), rel=1e-14)

    def test_geometric_tail_converges_and_diverges(self):
        w = WeightSequence.from_mapping({2: 0.05}, tail_rate=0.3, tail_scale=0.01)
        small = eval_f(w, BULLET, 1.0, 0.5)
        assert np.isfinite(small) and small > 0.05
        with pytest.raises(DivergentSeries):
            eval_f(w, BULLET, 20.0, 0.0)

    def test_bad_weights(self):
        with pytest.raises(InvalidWeights):
            WeightSequence.from_mapping({4: -1})
        with pytest.raises(InvalidWeights):
            WeightSequence.from_mapping({})


class TestSolver:
    def test_quadrangulation_critical(self):
        rep = solve_fixed_point(q4_fixture())
        assert rep.z_plus == pytest.approx(2.0, abs=1e-10)
        assert rep.z_diamond == pytest.approx(0.0, abs=1e-10)
        assert rep.spectral_radius == pytest.approx(1.0, abs=1e-6)
        assert rep.classification == REGULAR_CRITICAL

    def test_bisection_oracle_agrees(self):
        z, rho = quadrangulation_fixed_point(Fraction(1, 12))
        rep = solve_fixed_point(q4_fixture())
        assert abs(rep.z_plus - z) < 1e-10
        assert abs(rep.spectral_radius - rho) < 1e-6

    @pytest.mark.parametrize("q4", [Fraction(1, 20), Fraction(1, 15), Fraction(1, 40)])
    def test_subcritical(self, q4):
        rep = solve_fixed_point(quad(q4))
        z, rho = quadrangulation_fixed_point(q4)
        assert rep.classification == SUBCRITICAL
        assert rep.z_plus == pytest.approx(z, abs=1e-10)
        assert rep.spectral_radius == pytest.approx(rho, abs=1e-8)
        assert rep.spectral_radius < 1

    def test_supercritical_rejected(self):
        assert quadrangulation_fixed_point(Fraction(1, 6)) is None
        with pytest.raises(NotAdmissible):
            solve_fixed_point(quad(Fraction(1, 6)))

    def test_mixed_fixture_point(self):
        rep = solve_fixed_point(mixed_fixture())
        assert rep.z_plus == pytest.approx(2.25, abs=1e-10)
        assert rep.z_diamond == pytest.approx(0.75, abs=1e-10)
        assert rep.classification == REGULAR_CRITICAL

    def test_deterministic(self):
        a = solve_fixed_point(mixed_fixture())
        b = solve_fixed_point(mixed_fixture())
        assert a == b


class TestSpectralRadius:
    def test_identity(self):
        assert spectral_radius(np.eye(3)) == pytest.approx(1.0, abs=1e-10)

    def test_swap(self):
        assert spectral_radius(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0, abs=1e-10)

    def test_quadrangulation_matrix(self, q4):
        assert spectral_radius(np.asarray(q4[1].matrix)) == pytest.approx(1.0, abs=1e-10)

    def test_against_dense(self, rng):
        for _ in range(20):
            a = rng.random((4, 4))
            assert spectral_radius(a) == pytest.approx(max(abs(np.linalg.eigvals(a))), rel=1e-9)


class TestOffspring:
    def test_geometric_type1(self, q4):
        laws = q4[2]
        k = np.arange(20)
        assert np.allclose(laws.mu1[:20], 2.0 ** -(k + 1), rtol=0, atol=1e-15)

    def test_type2_dirac(self, q4):
        assert q4[2].mu2() == {(0, 0, 0, 1): 1.0}

    def test_quadrangulation_type3(self, q4):
        assert q4[2].mu3.as_dict() == pytest.approx({(1, 0): 1.0})

    def test_mean_matrix_rows(self, mixed):
        laws = mixed[2]
        assert np.allclose(laws.mean_matrix[0], [0, 0, laws.z_plus - 1, 0])
        assert np.allclose(laws.mean_matrix[1], [0, 0, 0, 1])
        assert spectral_radius(laws.mean_matrix) == pytest.approx(1.0, abs=1e-8)

    def test_right_eigenvector(self, mixed):
        laws = mixed[2]
        assert np.allclose(laws.mean_matrix @ laws.eigvec_a, laws.eigvec_a, atol=1e-10)
        assert np.all(laws.eigvec_a >= 0)

    def test_pair_laws_sum_to_one(self, mixed):
        laws = mixed[2]
        assert laws.mu3.prob.sum() == pytest.approx(1.0)
        assert laws.mu4.prob.sum() == pytest.approx(1.0)
        assert laws.tail_mass < 1e-12

    def test_float_laws_match_exact(self, mixed, mixed_exact):
        for ptype, law in ((3, mixed[2].mu3), (4, mixed[2].mu4)):
            exact = {kk: float(p) for kk, p in mixed_exact.pair_law(ptype).items()}
            assert law.as_dict() == pytest.approx(exact, abs=1e-12)

    def test_subcritical_has_no_laws(self):
        w = quad(Fraction(1, 20))
        with pytest.raises(NotCritical):
            build_offspring(solve_fixed_point(w), w)

    def test_alias_table(self, rng):
        probs = np.array([0.5, 0.25, 0.125, 0.125])
        thr, ali = alias_table(probs)
        col = rng.integers(0, 4, 200000)
        draws = np.where(rng.random(200000) < thr[col], col, ali[col])
        freq = np.bincount(draws, minlength=4) / 200000
        assert np.allclose(freq, probs, atol=0.005)


class TestOrdering:
    def test_empty_word(self, mixed, rng):
        assert sample_ordering(mixed[2], 3, (0, 0), rng) == ()

    def test_outside_support(self, mixed, rng):
        with pytest.raises(ValueError):
            sample_ordering(mixed[2], 3, (1, 1), rng)

    def test_single_interleaving(self, q4, rng):
        # the quadrangulation type-4 law is empty, so no support check applies
        for _ in range(50):
            assert sample_ordering(q4[2], 4, (2, 0), rng) == (1, 1)

    def test_uniform_interleaving(self, mixed, rng):
        draws = [sample_ordering(mixed[2], 4, (1, 1), rng) for _ in range(100000)]
        counts = [draws.count((1, 2)), draws.count((2, 1))]
        assert sum(counts) == 100000
        assert sps.chisquare(counts).pvalue > 0.001

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 2**32 - 1))
    def test_word_content(self, k, kp, seed):
        laws = fixture("mixed")[2]
        rng = np.random.Generator(np.random.Philox(seed))
        try:
            word = sample_ordering(laws, 3, (k, kp), rng)
        except ValueError:
            return  # pair outside the law's support
        assert len(word) == k + kp and word.count(1) == k
