"""Row/column covariance estimation for matrix-normal residuals.

The two-stage estimator alternates the closed-form updates

    sigma_n = sum_i E_i sigma_m^{-1} E_i^T / (N m)
    sigma_m = sum_i E_i^T sigma_n^{-1} E_i / (N n)

on residuals ``E_i = X_i - M`` until both matrices stop moving. The pair of
maximum likelihood estimates exists iff ``N >= m/n + 1``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ExistenceConditionError
from .linalg import squared_norm, sym_pseudo_inverse
from .validation import check_matrices, check_matrix

COVARIANCE_MODES = ("identity", "dutilleul")


@dataclass(frozen=True)
class CovariancePair:
    """Row (n x n) and column (m x m) covariance estimates.

    ``degenerate`` is set when the residuals were all zero, in which case
    both matrices are returned as zeros and must not be inverted.
    """

    sigma_n: np.ndarray
    sigma_m: np.ndarray
    degenerate: bool = False

    @classmethod
    def identity(cls, n, m):
        return cls(sigma_n=np.eye(n), sigma_m=np.eye(m))


def check_existence(n_subjects, n, m):
    """Existence of the two-stage estimates: ``N >= m/n + 1``, exactly.

    Uses integer arithmetic (``n * (N - 1) >= m``) so the comparison is not
    subject to floating-point rounding.
    """
    if min(n_subjects, n, m) < 1:
        raise ValueError("counts must be positive")
    return n * (n_subjects - 1) >= m


def two_stage_covariances(xs, reference, eps_n=1e-8, eps_m=1e-8, max_sweeps=1000):
    """Alternating covariance updates on residuals ``X_i - reference``.

    Iterates from ``sigma_m = I`` until the squared Frobenius change of the
    row factor drops to ``eps_n`` and of the column factor to ``eps_m``.
    Factor inverses are pseudo-inverses with a relative rank cutoff: centered
    residuals leave the row factor with a structural null direction (the
    all-ones vector), which must not abort the iteration.

    Raises :class:`ExistenceConditionError` when ``N < m/n + 1`` and returns
    a degenerate zero pair when every residual vanishes.
    """
    xs = check_matrices(xs, name="Xs", min_subjects=1)
    reference = check_matrix(reference, name="reference")
    n, m = reference.shape
    if xs[0].shape != (n, m):
        raise DimensionError(
            f"reference shape {reference.shape} does not match subjects {xs[0].shape}"
        )
    n_subjects = len(xs)
    if not check_existence(n_subjects, n, m):
        raise ExistenceConditionError(
            f"two-stage covariance estimation requires N >= m/n + 1 subjects; "
            f"got N={n_subjects} with n={n}, m={m} (bound {m / n + 1:g})"
        )

    residuals = [x - reference for x in xs]
    if all(squared_norm(e) == 0.0 for e in residuals):
        return CovariancePair(np.zeros((n, n)), np.zeros((m, m)), degenerate=True)

    sigma_n = np.eye(n)
    sigma_m = np.eye(m)
    for _ in range(max_sweeps):
        sigma_n_old, sigma_m_old = sigma_n, sigma_m
        sm_inv = sym_pseudo_inverse(sigma_m, "sigma_m")
        acc_n = np.zeros((n, n))
        for e in residuals:
            acc_n += e @ sm_inv @ e.T
        sigma_n = acc_n / (n_subjects * m)
        sn_inv = sym_pseudo_inverse(sigma_n, "sigma_n")
        acc_m = np.zeros((m, m))
        for e in residuals:
            acc_m += e.T @ sn_inv @ e
        sigma_m = acc_m / (n_subjects * n)
        if (
            squared_norm(sigma_n - sigma_n_old) <= eps_n
            and squared_norm(sigma_m - sigma_m_old) <= eps_m
        ):
            break
    # Symmetrize away accumulation round-off.
    sigma_n = (sigma_n + sigma_n.T) / 2.0
    sigma_m = (sigma_m + sigma_m.T) / 2.0
    return CovariancePair(sigma_n=sigma_n, sigma_m=sigma_m)
