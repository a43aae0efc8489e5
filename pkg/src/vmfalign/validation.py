"""Input validation helpers used across the estimator API."""

import numpy as np

from .exceptions import DimensionError, ValidationError


def check_matrix(x, name="X", min_rows=1, min_cols=1):
    """Coerce ``x`` to a finite 2-D float64 array.

    Parameters
    ----------
    x : array_like
        Input to validate.
    name : str
        Name used in error messages.
    min_rows, min_cols : int
        Minimum admissible dimensions.

    Returns
    -------
    ndarray of shape (rows, cols), dtype float64.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < min_rows or a.shape[1] < min_cols:
        raise DimensionError(
            f"{name} must be at least {min_rows}x{min_cols}, got {a.shape[0]}x{a.shape[1]}"
        )
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def check_square_matrix(x, name="A"):
    a = check_matrix(x, name=name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got {a.shape[0]}x{a.shape[1]}")
    return a


def check_matrices(xs, name="Xs", min_subjects=1):
    """Validate a list of subject matrices sharing one common shape."""
    if len(xs) < min_subjects:
        raise ValidationError(
            f"{name} needs at least {min_subjects} matrices, got {len(xs)}"
        )
    out = [check_matrix(x, name=f"{name}[{i}]") for i, x in enumerate(xs)]
    shape = out[0].shape
    for i, a in enumerate(out):
        if a.shape != shape:
            raise DimensionError(
                f"{name}[{i}] has shape {a.shape}, expected {shape} like {name}[0]"
            )
    return out


def check_orthogonal(r, name="R", tol=1e-8):
    """Validate that ``r`` is orthogonal: ||R^T R - I||_F <= tol."""
    a = check_square_matrix(r, name=name)
    gram = a.T @ a
    dev = np.linalg.norm(gram - np.eye(a.shape[0]))
    if dev > tol:
        raise ValidationError(
            f"{name} is not orthogonal: ||R^T R - I||_F = {dev:.3e} > {tol:.1e}"
        )
    return a
