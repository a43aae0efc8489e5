"""Log-posterior kernel of the alignment model, constants omitted.

These are the quantities the aligner improves and the invariance/optimality
tests evaluate. All additive constants (log-determinants, prior normalizer)
are dropped consistently so that comparisons across rotation choices are
exact.
"""

import numpy as np

from .exceptions import NumericError, ValidationError
from .linalg import frobenius_inner, squared_norm
from .validation import check_matrices, check_matrix


def _apply_inv(sigma, b, name):
    if sigma is None:
        return b
    try:
        return np.linalg.solve(sigma, b)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"covariance factor {name} is singular") from exc


def gaussian_log_kernel(x, rotation, scale, reference, sigma_n=None, sigma_m=None):
    """Residual term ``-0.5 tr(sigma_m^{-1} E^T sigma_n^{-1} E)``.

    with ``E = X @ R / alpha - reference``. ``sigma_n``/``sigma_m`` default
    to identities when None.
    """
    x = check_matrix(x, name="X")
    reference = check_matrix(reference, name="reference")
    resid = (x @ rotation) / float(scale) - reference
    left = _apply_inv(sigma_n, resid, "sigma_n")  # sigma_n^{-1} E
    if sigma_m is None:
        return -0.5 * frobenius_inner(left, resid)
    right = _apply_inv(sigma_m, resid.T, "sigma_m").T  # E sigma_m^{-1}
    return -0.5 * frobenius_inner(left, right)


def joint_objective(
    xs, rotations, scales, reference, sigma_n=None, sigma_m=None, k=0.0, f=None
):
    """Joint log-posterior kernel over all subjects.

    ``sum_i [residual term] + k * sum_i tr(F^T R_i)``. With ``k = 0`` the
    value is invariant under a common right-rotation of every subject
    (applied to the reference as well); with ``k > 0`` and full-rank ``F``
    the maximizing rotation set is unique.

    ``f=None`` with ``k > 0`` means an identity location, contributing
    ``k * tr(R_i)``.
    """
    xs = check_matrices(xs, name="Xs", min_subjects=1)
    if len(rotations) != len(xs) or len(scales) != len(xs):
        raise ValidationError("one rotation and one scale are required per subject")
    total = 0.0
    for x, r, a in zip(xs, rotations, scales):
        total += gaussian_log_kernel(x, r, a, reference, sigma_n, sigma_m)
        if k:
            if f is None:
                total += float(k) * float(np.trace(r))
            else:
                total += float(k) * frobenius_inner(f, r)
    return total


def alignment_residual(xs, rotations, scales, reference):
    """Mean squared-residual ``sum_i ||X_i R_i / alpha_i - reference||^2 / N``."""
    xs = check_matrices(xs, name="Xs", min_subjects=1)
    total = 0.0
    for x, r, a in zip(xs, rotations, scales):
        total += squared_norm((x @ r) / float(a) - reference)
    return total / len(xs)
