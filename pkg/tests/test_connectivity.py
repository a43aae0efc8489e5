import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vmfalign import roi_correlation, seed_correlation
from vmfalign.exceptions import DegenerateProblemError, ValidationError


def two_pass_pearson(a, b):
    """Direct two-pass Pearson formula oracle."""
    ma, mb = sum(a) / len(a), sum(b) / len(b)
    num = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    da = sum((x - ma) ** 2 for x in a) ** 0.5
    db = sum((y - mb) ** 2 for y in b) ** 0.5
    return num / (da * db)


class TestSeedCorrelation:
    def test_identical_column_gives_one(self):
        rng = np.random.default_rng(0)
        col = rng.standard_normal(8)
        x = np.column_stack([col, col, rng.standard_normal(8)])
        corr = seed_correlation(x, 0)
        assert corr[0] == pytest.approx(1.0, abs=1e-12)
        assert corr[1] == pytest.approx(1.0, abs=1e-12)

    def test_negated_column_gives_minus_one(self):
        rng = np.random.default_rng(1)
        col = rng.standard_normal(10)
        x = np.column_stack([col, -col])
        assert seed_correlation(x, 0)[1] == pytest.approx(-1.0, abs=1e-12)

    def test_matches_two_pass_oracle(self):
        x = np.random.default_rng(2).standard_normal((12, 6))
        corr = seed_correlation(x, 3)
        for j in range(6):
            expected = two_pass_pearson(list(x[:, 3]), list(x[:, j]))
            assert corr[j] == pytest.approx(expected, abs=1e-12)

    def test_range_and_seed_entry(self):
        x = np.random.default_rng(3).standard_normal((9, 7))
        corr = seed_correlation(x, 2)
        assert np.all(corr >= -1.0) and np.all(corr <= 1.0)
        assert corr[2] == pytest.approx(1.0, abs=1e-12)

    def test_zero_variance_seed_rejected(self):
        x = np.ones((5, 3))
        x[:, 1] = np.arange(5)
        with pytest.raises(DegenerateProblemError):
            seed_correlation(x, 0)

    def test_zero_variance_other_column_marked_nan(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((6, 3))
        x[:, 2] = 4.0  # constant column
        corr = seed_correlation(x, 0)
        assert np.isnan(corr[2])
        assert not np.isnan(corr[:2]).any()

    def test_invariant_to_column_offsets(self):
        x = np.random.default_rng(5).standard_normal((10, 4))
        shifted = x + np.array([0.0, 5.0, -3.0, 100.0])
        np.testing.assert_allclose(
            seed_correlation(x, 1), seed_correlation(shifted, 1), atol=1e-12
        )


class TestRoiCorrelation:
    def test_single_region(self):
        x = np.random.default_rng(6).standard_normal((7, 4))
        corr, regions = roi_correlation(x, np.zeros(4, dtype=int))
        np.testing.assert_array_equal(corr, np.ones((1, 1)))
        np.testing.assert_array_equal(regions, [0])

    def test_coinciding_region_means(self):
        rng = np.random.default_rng(7)
        base = rng.standard_normal(9)
        # two regions whose member means are identical series
        x = np.column_stack([base, base + 1.0, base - 1.0])
        labels = np.array([0, 1, 1])
        corr, _ = roi_correlation(x, labels)
        assert corr[0, 1] == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_and_unit_diagonal(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((20, 15))
        labels = rng.integers(0, 5, 15)
        corr, regions = roi_correlation(x, labels)
        assert corr.shape == (len(regions), len(regions))
        assert np.linalg.norm(corr - corr.T) < 1e-12
        np.testing.assert_allclose(np.diag(corr), 1.0, atol=1e-12)
        assert np.all(corr >= -1.0) and np.all(corr <= 1.0)

    def test_empty_region_listed_in_error(self):
        x = np.random.default_rng(9).standard_normal((6, 4))
        with pytest.raises(ValidationError, match="99"):
            roi_correlation(x, np.zeros(4, dtype=int), regions=[0, 99])

    def test_named_region_in_error(self):
        x = np.random.default_rng(10).standard_normal((6, 4))
        with pytest.raises(ValidationError, match="amygdala"):
            roi_correlation(
                x, np.zeros(4, dtype=int), regions=[0, 7], names={7: "amygdala"}
            )

    def test_label_length_validated(self):
        with pytest.raises(ValidationError):
            roi_correlation(np.zeros((5, 3)), np.zeros(2, dtype=int))

    @settings(max_examples=20, deadline=None)
    @given(
        st.integers(min_value=3, max_value=12),
        st.integers(min_value=2, max_value=6),
        st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_property_symmetric_unit_diagonal(self, n, k, seed):
        rng = np.random.default_rng(seed)
        m = k * 2
        x = rng.standard_normal((n, m))
        labels = np.repeat(np.arange(k), 2)
        try:
            corr, _ = roi_correlation(x, labels)
        except DegenerateProblemError:
            return  # zero-variance region series is a validity precondition
        assert np.linalg.norm(corr - corr.T) < 1e-12
        np.testing.assert_allclose(np.diag(corr), 1.0, atol=1e-12)
