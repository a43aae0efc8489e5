"""Dense matrix primitives: SVD factorizations, polar factor, centering.

Every routine is a pure function of its arguments and safe to call from
concurrent workers. Singular-vector signs follow one canonical convention
(largest-magnitude entry of each left singular vector made positive) so
repeated runs produce identical factors; the product ``U @ Vt`` is invariant
to the paired sign flips.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateProblemError, DimensionError, NumericError
from .validation import check_matrix, check_square_matrix

# A singular value counts as zero below this fraction of the largest one.
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SvdTriple:
    """Full singular value decomposition ``A = u @ diag(s) @ vt``."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def rank_deficient(self):
        smax = self.s[0] if self.s.size else 0.0
        return bool(self.s.size == 0 or smax == 0.0 or self.s[-1] <= RANK_RTOL * smax)

    def reconstruct(self):
        return (self.u * self.s) @ self.vt


@dataclass(frozen=True)
class ThinFactor:
    """Thin SVD ``X = l @ diag(s) @ q.T`` with semi-orthogonal ``q`` (m x n)."""

    l: np.ndarray
    s: np.ndarray
    q: np.ndarray

    @property
    def rank_deficient(self):
        smax = self.s[0] if self.s.size else 0.0
        return bool(self.s.size == 0 or smax == 0.0 or self.s[-1] <= RANK_RTOL * smax)

    def reconstruct(self):
        return (self.l * self.s) @ self.q.T


def _canonical_signs(u, vt):
    # Flip paired singular-vector signs so the largest-magnitude entry of
    # each left singular vector is positive.
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def _svd(a, name):
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"SVD of {name} ({a.shape[0]}x{a.shape[1]}) did not converge: {exc}"
        ) from exc
    u, vt = _canonical_signs(u, vt)
    return u, s, vt


def svd_full(a):
    """Singular value decomposition of a dense matrix.

    Returns an :class:`SvdTriple` with orthonormal-column ``u`` and ``vt.T``
    and singular values sorted in descending order.
    """
    a = check_matrix(a, name="A")
    u, s, vt = _svd(a, "A")
    return SvdTriple(u=u, s=s, vt=vt)


def thin_svd(x):
    """Thin SVD of a wide matrix (rows n < cols m).

    The returned basis ``q`` has orthonormal columns spanning the row space,
    so ``x @ q @ q.T`` reproduces ``x``. Raises :class:`DimensionError` for
    n >= m; use :func:`svd_full` there instead.
    """
    x = check_matrix(x, name="X")
    n, m = x.shape
    if n >= m:
        raise DimensionError(
            f"thin_svd expects rows < cols, got {n}x{m}; use svd_full instead"
        )
    u, s, vt = _svd(x, "X")
    return ThinFactor(l=u, s=s, q=vt.T)


def polar_orthogonal_factor(a, return_unique=False):
    """Nearest orthogonal matrix to ``a``: the factor ``u @ vt`` of its SVD.

    This is the maximizer of ``tr(A.T @ R)`` over the orthogonal group when
    ``a`` has full rank. With ``return_unique=True`` the result is a pair
    ``(R, unique)`` where ``unique`` is False in the rank-deficient regime
    (the maximizer is then valid but not unique).
    """
    a = check_square_matrix(a, name="A")
    triple = svd_full(a)
    r = triple.u @ triple.vt
    if return_unique:
        return r, not triple.rank_deficient
    return r


def column_center(x):
    """Remove the column means: returns ``(I - J/n) @ x``.

    Idempotent and linear; needs at least two rows.
    """
    x = check_matrix(x, name="X")
    if x.shape[0] < 2:
        raise DegenerateProblemError(
            f"column centering needs at least 2 rows, got {x.shape[0]}"
        )
    return x - x.mean(axis=0)


def sym_pseudo_inverse(a, name="matrix"):
    """Pseudo-inverse of a symmetric PSD matrix via its eigendecomposition.

    Eigenvalues below ``RANK_RTOL`` times the largest are treated as exact
    nulls (column centering, for instance, leaves covariance estimates with a
    structural null direction). A factor with no positive eigenvalue raises
    :class:`NumericError` naming it.
    """
    w, v = np.linalg.eigh(a)
    if not np.all(np.isfinite(w)) or w[-1] <= 0.0:
        raise NumericError(f"covariance factor {name} is singular")
    keep = w > RANK_RTOL * w[-1]
    vk = v[:, keep]
    return (vk / w[keep]) @ vk.T


def sym_inverse_sqrt(a, name="matrix"):
    """Pseudo-inverse square root of a symmetric PSD matrix (same cutoff)."""
    w, v = np.linalg.eigh(a)
    if not np.all(np.isfinite(w)) or w[-1] <= 0.0:
        raise NumericError(f"covariance factor {name} is singular")
    keep = w > RANK_RTOL * w[-1]
    vk = v[:, keep]
    return (vk / np.sqrt(w[keep])) @ vk.T


def frobenius_inner(a, b):
    """Frobenius inner product <A, B> = tr(A.T @ B)."""
    return float(np.tensordot(a, b, axes=2))


def squared_norm(a):
    """Squared Frobenius norm."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.dot(a.ravel(), a.ravel()))
