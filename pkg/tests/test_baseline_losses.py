import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vocagno.baseline_losses import (
    BaselineLossConfig,
    LengthMismatch,
    check_prob_vector,
    combined_loss,
    kl_divergence,
    uld_wasserstein,
)


def _simplex(rng, n):
    xs = [rng.random() + 1e-9 for _ in range(n)]
    s = sum(xs)
    return [x / s for x in xs]


simplexes = st.integers(1, 12).flatmap(
    lambda n: st.lists(st.floats(1e-9, 1.0), min_size=n, max_size=n).map(
        lambda xs: [x / sum(xs) for x in xs]
    )
)


class TestKL:
    def test_identity_is_zero(self):
        assert kl_divergence([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]) == 0.0

    def test_point_mass_vs_uniform(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2))

    def test_missing_support_is_infinite(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            kl_divergence([1.0], [0.5, 0.5])

    @settings(max_examples=200, deadline=None)
    @given(simplexes, simplexes)
    def test_gibbs_inequality(self, p, q):
        if len(p) != len(q):
            q = (q * len(p))[: len(p)]
            s = sum(q)
            q = [x / s for x in q]
        assert kl_divergence(p, q) >= -1e-12
        assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-12)


class TestULD:
    def test_permutation_of_identity(self):
        assert uld_wasserstein([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_point_mass_vs_uniform(self):
        assert uld_wasserstein([0.5, 0.5], [1.0, 0.0]) == pytest.approx(1.0)

    def test_padding_rule(self):
        assert uld_wasserstein([1.0], [0.5, 0.5]) == pytest.approx(1.0)

    @settings(max_examples=200, deadline=None)
    @given(simplexes, simplexes)
    def test_symmetric_nonnegative(self, p, q):
        d = uld_wasserstein(p, q)
        assert d >= 0.0
        assert d == pytest.approx(uld_wasserstein(q, p), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(simplexes, st.randoms(use_true_random=False))
    def test_permutation_invariant(self, p, rnd):
        shuffled = list(p)
        rnd.shuffle(shuffled)
        assert uld_wasserstein(p, shuffled) == pytest.approx(0.0, abs=1e-12)
        q = [0.5, 0.25, 0.25]
        assert uld_wasserstein(p, q) == pytest.approx(
            uld_wasserstein(shuffled, q), abs=1e-12
        )

    def test_zero_iff_sorted_padded_equal(self):
        rng = random.Random(2)
        for _ in range(100):
            p = _simplex(rng, rng.randint(1, 8))
            q = _simplex(rng, rng.randint(1, 8))
            d = uld_wasserstein(p, q)
            ps = sorted(p, reverse=True) + [0.0] * max(0, len(q) - len(p))
            qs = sorted(q, reverse=True) + [0.0] * max(0, len(p) - len(q))
            if d <= 1e-12:
                assert all(abs(a - b) <= 1e-12 for a, b in zip(ps, qs))
            else:
                assert any(abs(a - b) > 1e-12 for a, b in zip(ps, qs))


class TestCombined:
    def test_zero_weight(self):
        assert combined_loss(1.5, 99.0, 0.0) == 1.5

    def test_default_weight(self):
        assert combined_loss(1.0, 2.0, BaselineLossConfig().distill_weight) == 2.0

    def test_unit_weight(self):
        assert combined_loss(1.0, 2.0, 1.0) == 3.0

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            BaselineLossConfig(distill_weight=-0.1)


class TestProbVector:
    def test_valid(self):
        check_prob_vector([0.5, 0.5])

    def test_negative_entry(self):
        with pytest.raises(ValueError):
            check_prob_vector([1.5, -0.5])

    def test_bad_sum(self):
        with pytest.raises(ValueError):
            check_prob_vector([0.5, 0.4])
