"""Von Mises-Fisher prior over orthogonal matrices.

The density on the orthogonal group is proportional to
``exp(k * tr(F.T @ R))`` with location matrix ``F`` and concentration
``k >= 0``. Only the unnormalized log-kernel is needed for maximum a
posteriori estimation, so the normalizing constant is never computed. The
mode of the density is the polar orthogonal factor of ``F``; it is the
unique maximizer exactly when ``F`` has full rank.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, ValidationError
from .linalg import RANK_RTOL, frobenius_inner, svd_full
from .validation import check_matrix, check_square_matrix

LOCATION_KINDS = ("identity", "euclidean", "custom")


@dataclass(frozen=True)
class PriorLocation:
    """Recipe for the location matrix ``F``.

    kind
        "identity" for ``F = I``; "euclidean" for the similarity kernel
        ``F[i, j] = exp(-||c_i - c_j||)`` built from 3-D coordinates;
        "custom" for a user-supplied dense matrix.
    coordinates
        (m, 3) coordinate array, euclidean kind only.
    matrix
        (m, m) dense location, custom kind only.
    """

    kind: str = "identity"
    coordinates: np.ndarray | None = field(default=None, repr=False)
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in LOCATION_KINDS:
            raise ValidationError(
                f"unknown prior location kind {self.kind!r}; expected one of {LOCATION_KINDS}"
            )
        if self.kind == "euclidean" and self.coordinates is None:
            raise ValidationError("euclidean prior location needs coordinates")
        if self.kind == "custom" and self.matrix is None:
            raise ValidationError("custom prior location needs a matrix")

    @classmethod
    def identity(cls):
        return cls(kind="identity")

    @classmethod
    def euclidean(cls, coordinates):
        return cls(kind="euclidean", coordinates=np.asarray(coordinates, dtype=np.float64))

    @classmethod
    def custom(cls, matrix):
        return cls(kind="custom", matrix=np.asarray(matrix, dtype=np.float64))


@dataclass(frozen=True)
class PriorDiagnostics:
    """Spectral diagnostics of a location matrix.

    ``mode`` is the polar orthogonal factor of ``F`` (the density's mode);
    ``full_rank`` tells whether that mode is the unique maximizer.
    """

    smallest_singular_value: float
    full_rank: bool
    mode: np.ndarray


def euclidean_similarity(coordinates):
    """Similarity kernel ``exp(-||c_i - c_j||_2)`` from (m, 3) coordinates.

    Symmetric with unit diagonal; entries lie in (0, 1]. Coordinates are used
    in their native units -- rescale them beforehand to change the bandwidth.
    """
    c = check_matrix(coordinates, name="coordinates")
    if c.shape[1] != 3:
        raise DimensionError(
            f"coordinates must have exactly 3 columns, got {c.shape[1]}"
        )
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return np.exp(-dist)


def build_prior_location(location, m):
    """Materialize the location matrix ``F`` for dimension ``m``.

    Returns ``(F, diagnostics)`` where ``F`` is m x m and the diagnostics
    carry the smallest singular value, the full-rank flag (threshold
    ``RANK_RTOL`` relative to the largest singular value) and the polar mode.
    """
    if isinstance(location, str):
        location = PriorLocation(kind=location)
    if location.kind == "identity":
        f = np.eye(m)
        return f, PriorDiagnostics(1.0, True, np.eye(m))
    if location.kind == "euclidean":
        f = euclidean_similarity(location.coordinates)
    else:
        f = check_square_matrix(location.matrix, name="F")
    if f.shape[0] != m:
        raise DimensionError(
            f"prior location is {f.shape[0]}x{f.shape[1]} but the data has m={m} columns"
        )
    triple = svd_full(f)
    smin = float(triple.s[-1])
    return f, PriorDiagnostics(
        smallest_singular_value=smin,
        full_rank=bool(smin > RANK_RTOL * triple.s[0]),
        mode=triple.u @ triple.vt,
    )


def vmf_log_kernel(r, f, k):
    """Unnormalized log-density ``k * tr(F.T @ R)``.

    This omits the additive constant ``-log C(F, k)``, which is all that MAP
    estimation and conjugacy checks require.
    """
    r = check_square_matrix(r, name="R")
    f = check_square_matrix(f, name="F")
    if r.shape != f.shape:
        raise DimensionError(f"R is {r.shape} but F is {f.shape}")
    return float(k) * frobenius_inner(f, r)


def posterior_location(crossprod, k, f):
    """Conjugate posterior location: data cross-product plus ``k * F``."""
    crossprod = check_square_matrix(crossprod, name="crossprod")
    f = check_square_matrix(f, name="F")
    if crossprod.shape != f.shape:
        raise DimensionError(f"crossprod is {crossprod.shape} but F is {f.shape}")
    return crossprod + float(k) * f
