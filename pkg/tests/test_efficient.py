import numpy as np
import pytest

from vmfalign import (
    EfficientProcrustes,
    GeneralizedProcrustes,
    PriorLocation,
    SimulationSpec,
    column_center,
    polar_orthogonal_factor,
    project_subjects,
    random_orthogonal,
    reduce_euclidean_prior,
    reduce_prior,
    simulate_dataset,
    thin_svd,
)
from vmfalign.exceptions import DimensionError


def triple_product_oracle(f, qi, qj):
    """Elementwise triple-product oracle for Q_i^T F Q_j."""
    n = qi.shape[1]
    out = np.zeros((n, qj.shape[1]))
    for a in range(n):
        for b in range(qj.shape[1]):
            out[a, b] = sum(
                qi[p, a] * f[p, q] * qj[q, b]
                for p in range(f.shape[0])
                for q in range(f.shape[1])
            )
    return out


def full_rank_location(m, seed, lo=1.0, hi=2.0):
    rng = np.random.default_rng(seed)
    return (
        random_orthogonal(m, seed + 1)
        @ np.diag(rng.uniform(lo, hi, m))
        @ random_orthogonal(m, seed + 2)
    )


class TestProjectSubjects:
    def test_orthonormal_rows(self):
        x = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        prob = project_subjects([x])
        np.testing.assert_allclose(prob.reduced[0], np.eye(2), atol=1e-14)
        np.testing.assert_allclose(x @ prob.bases[0] @ prob.bases[0].T, x, atol=1e-14)

    def test_reconstruction_seeded(self):
        x = np.random.default_rng(0).standard_normal((4, 12))
        prob = project_subjects([x])
        q = prob.bases[0]
        rel = np.linalg.norm(x @ q @ q.T - x) / np.linalg.norm(x)
        assert rel < 1e-10
        assert np.linalg.norm(q.T @ q - np.eye(4)) < 1e-10

    def test_duplicated_row_keeps_n_columns_and_flags(self):
        x = np.random.default_rng(1).standard_normal((3, 7))
        x[1] = x[0]
        prob = project_subjects([x])
        assert prob.reduced[0].shape == (3, 3)
        assert prob.factors[0].rank_deficient

    def test_tall_input_rejected(self):
        with pytest.raises(DimensionError, match="full-space"):
            project_subjects([np.random.default_rng(2).standard_normal((5, 3))])


class TestReducePrior:
    def test_identity_location_same_basis(self):
        q = thin_svd(np.random.default_rng(3).standard_normal((4, 9))).q
        np.testing.assert_allclose(reduce_prior(np.eye(9), q), np.eye(4), atol=1e-12)

    def test_identity_location_cross_basis(self):
        rng = np.random.default_rng(4)
        qi = thin_svd(rng.standard_normal((3, 8))).q
        qj = thin_svd(rng.standard_normal((3, 8))).q
        np.testing.assert_allclose(reduce_prior(np.eye(8), qi, qj), qi.T @ qj, atol=1e-12)

    def test_triple_product_oracle(self):
        rng = np.random.default_rng(5)
        f = rng.standard_normal((6, 6))
        qi = thin_svd(rng.standard_normal((2, 6))).q
        qj = thin_svd(rng.standard_normal((2, 6))).q
        np.testing.assert_allclose(
            reduce_prior(f, qi, qj), triple_product_oracle(f, qi, qj), atol=1e-12
        )

    def test_blockwise_euclidean_matches_dense(self):
        rng = np.random.default_rng(6)
        coords = rng.uniform(-2, 2, (10, 3))
        qi = thin_svd(rng.standard_normal((3, 10))).q
        qj = thin_svd(rng.standard_normal((3, 10))).q
        from vmfalign import euclidean_similarity

        dense = reduce_prior(euclidean_similarity(coords), qi, qj)
        blocked = reduce_euclidean_prior(coords, qi, qj, block_size=3)
        np.testing.assert_allclose(blocked, dense, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            reduce_prior(np.eye(5), np.zeros((4, 2)))


class TestEfficientProcrustes:
    def test_identical_subjects_are_fixed_point(self):
        x = column_center(np.random.default_rng(7).standard_normal((4, 11)))
        ep = EfficientProcrustes().fit([x, x, x])
        assert ep.converged_
        for r in ep.rotations_:
            # identity on the numerically full-rank block; the centered data
            # has one dead direction where the factor is arbitrary but fixed
            np.testing.assert_allclose(r[:3, :3], np.eye(3), atol=1e-8)
        for a in ep.aligned_:
            np.testing.assert_allclose(a, x, atol=1e-10)

    def test_reduced_trace_equals_full_trace_through_implied_transform(self):
        # the reduced maximum, evaluated in the original space through the
        # factored transform Q R* Q^T against the lifted template, matches
        # the reduced objective exactly, prior term included
        rng = np.random.default_rng(8)
        m_ref = 0.4 * rng.standard_normal((4, 12))
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=3, n=4, m=12, noise_sigma=0.05, seed=42), m_ref
        )
        f = full_rank_location(12, 101)
        ep = EfficientProcrustes(k=1.0, prior=PriorLocation.custom(f)).fit(xs)
        centered = [x - x.mean(axis=0) for x in xs]
        for x, q, r in zip(centered, ep.bases_, ep.rotations_):
            a_red = (x @ q).T @ ep.reduced_reference_ + 1.0 * reduce_prior(f, q)
            reduced_value = float(np.trace(a_red.T @ r))
            z = q @ r @ q.T  # implied m-space transform (rank n)
            a_full = x.T @ (ep.reduced_reference_ @ q.T) + 1.0 * f
            full_value = float(np.tensordot(a_full, z))
            assert abs(reduced_value - full_value) <= 1e-6 * abs(reduced_value)

    def test_matches_full_solver_objective_k0(self):
        # pairwise trace maxima coincide between the m-space solver's SVD and
        # the reduced one when the column covariance is the identity
        rng = np.random.default_rng(9)
        for s in range(5):
            n = int(rng.integers(4, 9))
            m = int(rng.integers(12, 41))
            xi, xj = rng.standard_normal((n, m)), rng.standard_normal((n, m))
            fi, fj = thin_svd(xi), thin_svd(xj)
            full = np.linalg.svd(xi.T @ xj, compute_uv=False).sum()
            red = np.linalg.svd((xi @ fi.q).T @ (xj @ fj.q), compute_uv=False).sum()
            assert abs(full - red) <= 1e-6 * abs(full)

    def test_aligned_outputs_have_rank_at_most_n(self):
        rng = np.random.default_rng(10)
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=3, n=5, m=14, noise_sigma=0.05, seed=43),
            rng.standard_normal((5, 14)),
        )
        ep = EfficientProcrustes().fit(xs)
        for a in ep.aligned_:
            s = np.linalg.svd(a, compute_uv=False)
            assert np.sum(s > 1e-9 * s[0]) <= 5

    def test_transform_reproduces_training_alignment(self):
        rng = np.random.default_rng(11)
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=3, n=4, m=10, noise_sigma=0.02, seed=44),
            rng.standard_normal((4, 10)),
        )
        ep = EfficientProcrustes(scaling=True).fit(xs)
        out = ep.transform(xs)
        for a, b in zip(out, ep.aligned_):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_rejects_tall_matrices(self):
        with pytest.raises(DimensionError):
            EfficientProcrustes().fit([np.zeros((6, 3)), np.zeros((6, 3))])

    def test_dutilleul_allowed_in_reduced_space(self):
        # the reduced n x n problem satisfies the existence bound for N >= 2
        rng = np.random.default_rng(12)
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=3, n=5, m=20, noise_sigma=0.1, seed=45),
            rng.standard_normal((5, 20)),
        )
        ep = EfficientProcrustes(covariance="dutilleul").fit(xs)
        assert ep.covariances_.sigma_n.shape == (5, 5)
        assert ep.covariances_.sigma_m.shape == (5, 5)

    def test_orthogonality_of_reduced_rotations(self):
        rng = np.random.default_rng(13)
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=4, n=6, m=18, noise_sigma=0.1, seed=46),
            rng.standard_normal((6, 18)),
        )
        ep = EfficientProcrustes(k=1.0, prior="identity").fit(xs)
        for r in ep.rotations_:
            assert np.linalg.norm(r.T @ r - np.eye(6)) <= 1e-8

    def test_euclidean_prior_reduced_blockwise(self):
        rng = np.random.default_rng(14)
        coords = rng.uniform(-1, 1, (16, 3))
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=3, n=4, m=16, noise_sigma=0.05, seed=47),
            rng.standard_normal((4, 16)),
        )
        ep = EfficientProcrustes(k=0.5, prior=PriorLocation.euclidean(coords)).fit(xs)
        assert ep.converged_ or ep.iterations_ == 30

    def test_no_m_by_m_allocation_at_scale(self):
        # peak traced allocations stay below 10 * N * m * n * 8 bytes, which
        # rules out any m x m intermediate (m^2 floats alone would be 80 GB)
        import tracemalloc

        n, m, n_subjects = 50, 100_000, 3
        rng = np.random.default_rng(15)
        xs = [rng.standard_normal((n, m)) for _ in range(n_subjects)]
        tracemalloc.start()
        tracemalloc.reset_peak()
        ep = EfficientProcrustes(k=1.0, prior="identity", max_iter=3).fit(xs)
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert peak < 10 * n_subjects * m * n * 8
        assert ep.reference_.shape == (n, m)
