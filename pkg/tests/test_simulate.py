import numpy as np
import pytest

from vmfalign import (
    GeneralizedProcrustes,
    PriorLocation,
    SimulationSpec,
    best_rotation_grid_2d,
    column_center,
    gaussian_log_kernel,
    joint_objective,
    random_orthogonal,
    simulate_dataset,
)
from vmfalign.exceptions import ValidationError


class TestSimulateDataset:
    def test_noiseless_identity_transform(self):
        m_ref = np.random.default_rng(0).standard_normal((6, 4))
        spec = SimulationSpec(
            n_subjects=2, n=6, m=4, noise_sigma=0.0,
            rotations=[np.eye(4), np.eye(4)], seed=1,
        )
        xs, truth = simulate_dataset(spec, m_ref)
        for x in xs:
            np.testing.assert_array_equal(x, column_center(m_ref))
        np.testing.assert_array_equal(truth.reference, column_center(m_ref))

    def test_deterministic_given_seed(self):
        m_ref = np.random.default_rng(1).standard_normal((5, 7))
        spec = SimulationSpec(n_subjects=3, n=5, m=7, noise_sigma=0.3, seed=77)
        xs1, t1 = simulate_dataset(spec, m_ref)
        xs2, t2 = simulate_dataset(spec, m_ref)
        for a, b in zip(xs1, xs2):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(t1.rotations, t2.rotations):
            np.testing.assert_array_equal(a, b)

    def test_noise_covariance_monte_carlo(self):
        # vec(E) over 2000 draws has empirical covariance sigma^2 I_4 within 5%
        sigma = 0.7
        spec = SimulationSpec(n_subjects=2000, n=2, m=2, noise_sigma=sigma, seed=0)
        _, truth = simulate_dataset(spec, np.zeros((2, 2)))
        v = np.stack([e.ravel() for e in truth.errors])
        emp = (v.T @ v) / len(v)
        assert np.abs(emp - sigma**2 * np.eye(4)).max() <= 0.05 * sigma**2

    def test_centered_outputs(self):
        m_ref = np.random.default_rng(2).standard_normal((8, 3))
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=2, n=8, m=3, noise_sigma=0.5, seed=5), m_ref
        )
        for x in xs:
            assert np.abs(x.mean(axis=0)).max() < 1e-12

    def test_validates_scales(self):
        with pytest.raises(ValidationError):
            SimulationSpec(n_subjects=2, n=4, m=3, scales=np.array([1.0, -2.0]))

    def test_reference_shape_checked(self):
        with pytest.raises(ValidationError):
            simulate_dataset(SimulationSpec(n_subjects=1, n=3, m=3), np.zeros((2, 2)))


class TestRandomOrthogonal:
    def test_orthogonality_and_determinant(self):
        for seed in range(20):
            r = random_orthogonal(4, seed)
            assert np.linalg.norm(r.T @ r - np.eye(4)) <= 1e-12
            assert abs(abs(np.linalg.det(r)) - 1.0) <= 1e-10

    def test_reproducible(self):
        np.testing.assert_array_equal(random_orthogonal(5, 3), random_orthogonal(5, 3))

    def test_haar_symmetry_monte_carlo(self):
        mean = np.mean([random_orthogonal(3, 10_000 + i) for i in range(1000)], axis=0)
        assert np.abs(mean).max() <= 0.05


class TestBestRotationGrid2d:
    def test_identity_maximizer(self):
        r, tr = best_rotation_grid_2d(np.eye(2))
        np.testing.assert_allclose(r, np.eye(2), atol=1e-3)
        assert tr == pytest.approx(2.0, abs=1e-6)

    def test_reflection_branch(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        r, tr = best_rotation_grid_2d(a)
        assert tr == pytest.approx(2.0, abs=1e-6)
        np.testing.assert_allclose(r, a, atol=1e-3)
        assert np.linalg.det(r) == pytest.approx(-1.0, abs=1e-10)

    def test_grid_step_validated(self):
        with pytest.raises(ValidationError):
            best_rotation_grid_2d(np.eye(2), grid_step=1e-2)

    def test_brackets_closed_form(self):
        from vmfalign import polar_orthogonal_factor

        rng = np.random.default_rng(6)
        for _ in range(5):
            a = rng.standard_normal((2, 2))
            r = polar_orthogonal_factor(a)
            tr_closed = float(np.trace(a.T @ r))
            _, tr_grid = best_rotation_grid_2d(a, grid_step=1e-4)
            assert tr_grid <= tr_closed + 1e-12
            assert tr_closed - tr_grid <= 10 * 1e-4 * np.linalg.norm(a)


class TestJointObjective:
    def test_perfect_fit_zero_residual(self):
        rng = np.random.default_rng(7)
        m_ref = column_center(rng.standard_normal((7, 3)))
        rotations = [random_orthogonal(3, s) for s in range(3)]
        scales = np.array([1.0, 2.0, 0.5])
        xs = [a * m_ref @ r.T for a, r in zip(scales, rotations)]
        value = joint_objective(xs, rotations, scales, m_ref)
        assert value == pytest.approx(0.0, abs=1e-18)

    def test_invariance_under_common_rotation(self):
        rng = np.random.default_rng(8)
        m_ref = rng.standard_normal((10, 5))
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=4, n=10, m=5, noise_sigma=0.2, seed=9), m_ref
        )
        gp = GeneralizedProcrustes().fit(xs)
        centered = [x - x.mean(axis=0) for x in xs]
        base = joint_objective(centered, gp.rotations_, gp.scales_, gp.reference_)
        for s in range(20):
            z = random_orthogonal(5, 600 + s)
            val = joint_objective(
                centered, [r @ z for r in gp.rotations_], gp.scales_, gp.reference_ @ z
            )
            assert abs(val - base) <= 1e-8 * abs(base)

    def test_map_rotations_beat_mle_rotations_on_map_objective(self):
        rng = np.random.default_rng(10)
        m_ref = 0.3 * rng.standard_normal((12, 6))
        xs, _ = simulate_dataset(
            SimulationSpec(n_subjects=4, n=12, m=6, noise_sigma=0.05, seed=11), m_ref
        )
        f = (
            random_orthogonal(6, 1)
            @ np.diag(np.random.default_rng(2).uniform(1.0, 2.0, 6))
            @ random_orthogonal(6, 3)
        )
        centered = [x - x.mean(axis=0) for x in xs]
        mle = GeneralizedProcrustes(k=0.0).fit(xs)
        mapf = GeneralizedProcrustes(k=1.0, prior=PriorLocation.custom(f)).fit(xs)
        v_map = joint_objective(centered, mapf.rotations_, mapf.scales_, mapf.reference_, k=1.0, f=f)
        v_mle = joint_objective(centered, mle.rotations_, mle.scales_, mle.reference_, k=1.0, f=f)
        assert v_map >= v_mle

    def test_gaussian_kernel_with_covariances(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((5, 3))
        ref = rng.standard_normal((5, 3))
        sn = np.diag(rng.uniform(0.5, 2.0, 5))
        sm = np.diag(rng.uniform(0.5, 2.0, 3))
        resid = x - ref
        expected = -0.5 * np.trace(
            np.linalg.inv(sm) @ resid.T @ np.linalg.inv(sn) @ resid
        )
        got = gaussian_log_kernel(x, np.eye(3), 1.0, ref, sigma_n=sn, sigma_m=sm)
        assert got == pytest.approx(expected, rel=1e-12)
