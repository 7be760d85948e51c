import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idcalib.core import ObjectRecord, ValidationError, entropies, normalized_entropy, uncertainty, unit, validate_map
from oracles import scalar_entropy


def simplex(min_size=2, max_size=12):
    return st.lists(st.floats(0.0, 1.0), min_size=min_size, max_size=max_size).filter(
        lambda xs: sum(xs) > 1e-6
    ).map(lambda xs: np.asarray(xs) / np.sum(xs))


class TestEntropy:
    def test_uniform_is_one(self):
        assert normalized_entropy([0.25] * 4) == pytest.approx(1.0, abs=1e-12)

    def test_one_hot_is_zero(self):
        assert normalized_entropy([1, 0, 0, 0]) == 0.0

    def test_half_half(self):
        assert normalized_entropy([0.5, 0.5, 0, 0]) == pytest.approx(math.log(2) / math.log(4), abs=1e-12)
        assert normalized_entropy([0.5, 0.5, 0, 0]) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("k", [2, 3, 9, 100])
    def test_extremes_every_size(self, k):
        assert normalized_entropy(np.full(k, 1 / k)) == pytest.approx(1.0, abs=1e-12)
        assert normalized_entropy(np.eye(k)[k - 1]) == 0.0

    def test_rejects_unnormalized_and_nan(self):
        with pytest.raises(ValidationError):
            normalized_entropy([0.6, 0.6])
        with pytest.raises(ValidationError):
            normalized_entropy([0.5, float("nan")])

    def test_rejects_single_slot(self):
        with pytest.raises(ValidationError):
            normalized_entropy([1.0])

    @given(simplex())
    def test_matches_scalar_oracle(self, p):
        assert normalized_entropy(p) == pytest.approx(scalar_entropy(list(p)), abs=1e-12)

    @given(simplex(), st.randoms(use_true_random=False))
    def test_permutation_invariant(self, p, rnd):
        q = list(p)
        rnd.shuffle(q)
        assert normalized_entropy(q) == pytest.approx(normalized_entropy(p), abs=1e-12)

    def test_rowwise_matches_single(self, rng):
        P = rng.dirichlet(np.ones(6), size=20)
        np.testing.assert_allclose(entropies(P), [normalized_entropy(p) for p in P], atol=1e-15)


class TestUncertainty:
    def test_examples(self):
        np.testing.assert_array_equal(uncertainty([1, 0, 0]), [0, 0, 0])
        np.testing.assert_allclose(uncertainty([0.5, 0.5, 0]), [0.25, 0.25, 0])
        np.testing.assert_allclose(uncertainty([0.8, 0.1, 0.1]), [0.16, 0.09, 0.09], atol=1e-15)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValidationError):
            uncertainty([0.9, 0.9])

    @given(simplex(max_size=30))
    @settings(max_examples=300)
    def test_bounded(self, p):
        u = uncertainty(p)
        assert u.min() >= 0.0 and u.max() <= 0.25


class TestValidateMap:
    def test_ok(self):
        validate_map([0.6, 0.4], expect_normalized=True)

    def test_normalization_violation(self):
        with pytest.raises(ValidationError, match="sum"):
            validate_map([0.6, 0.6], expect_normalized=True)

    def test_nan(self):
        with pytest.raises(ValidationError, match="NaN"):
            validate_map([0.3, float("nan")], expect_normalized=False)

    def test_inf_and_length(self):
        with pytest.raises(ValidationError, match="Inf"):
            validate_map([0.3, float("inf")], expect_normalized=False)
        with pytest.raises(ValidationError, match="length"):
            validate_map([0.5, 0.5], expect_normalized=True, size=3)

    def test_score_maps_may_leave_simplex(self):
        validate_map([1.5, -0.7], expect_normalized=False)
        with pytest.raises(ValidationError):
            validate_map([1.5, -0.5], expect_normalized=True)


def test_record_entropy_matches_map():
    rec = ObjectRecord.from_map([3.0, 4.0], [1.0, 0.0], [0.7, 0.2, 0.1], 5, 1)
    assert abs(rec.entropy - normalized_entropy([0.7, 0.2, 0.1])) <= 1e-12
    np.testing.assert_allclose(np.linalg.norm(rec.feature), 1.0, atol=1e-12)


def test_record_rejects_bad_entropy():
    with pytest.raises(ValidationError):
        ObjectRecord(np.ones(2), np.ones(2), np.array([0.5, 0.5]), 1.5, 0, 0)


def test_unit_rejects_zero():
    with pytest.raises(ValidationError):
        unit(np.zeros(3))
