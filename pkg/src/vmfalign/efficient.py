"""Reduced-space alignment for wide matrices (n rows << m columns).

Each subject is projected onto the orthonormal basis of its own row space
(the right factor of its thin SVD), the alignment loop runs entirely on the
resulting n x n matrices, and the aligned output is projected back to
n x m. The prior location is reduced per subject as ``Q_i^T F Q_j``; the
trace objective of the reduced problem evaluated through the implied rank-n
transform ``Q_i R*_i Q_i^T`` equals the full-space objective restricted to
that transform, so no information in the data is lost while the cost of one
iteration drops from cubic in m to cubic in n.

No m x m matrix is ever materialized on this path; memory stays O(m n) per
subject.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .alignment import GeneralizedProcrustes, _gpa_loop
from .exceptions import DegenerateProblemError, DimensionError, ValidationError
from .linalg import thin_svd
from .prior import PriorLocation, euclidean_similarity
from .validation import check_matrices, check_matrix


@dataclass(frozen=True)
class ReducedProblem:
    """Projected subjects plus the thin factors that produced them."""

    reduced: list
    factors: list

    @property
    def bases(self):
        return [f.q for f in self.factors]


def project_subjects(xs):
    """Project each subject onto its own row-space basis.

    Returns a :class:`ReducedProblem` whose ``reduced[i] = X_i @ Q_i`` is
    n x n. Requires n < m for every subject; ``X @ Q @ Q.T`` reproduces the
    input, so the projection loses nothing.
    """
    xs = check_matrices(xs, name="Xs", min_subjects=1)
    n, m = xs[0].shape
    if n >= m:
        raise DimensionError(
            f"reduced-space projection expects rows < cols, got {n}x{m}; "
            "use the full-space aligner instead"
        )
    factors = [thin_svd(x) for x in xs]
    reduced = [x @ f.q for x, f in zip(xs, factors)]
    return ReducedProblem(reduced=reduced, factors=factors)


def reduce_prior(f, qi, qj=None):
    """Reduced prior location ``Q_i^T F Q_j`` (``Q_j = Q_i`` by default)."""
    f = check_matrix(f, name="F")
    qi = check_matrix(qi, name="Qi")
    qj = qi if qj is None else check_matrix(qj, name="Qj")
    if f.shape[0] != f.shape[1]:
        raise DimensionError(f"F must be square, got {f.shape}")
    if qi.shape[0] != f.shape[0] or qj.shape[0] != f.shape[1]:
        raise DimensionError(
            f"bases with {qi.shape[0]}/{qj.shape[0]} rows do not conform to F {f.shape}"
        )
    return qi.T @ f @ qj


def reduce_euclidean_prior(coordinates, qi, qj=None, block_size=None):
    """``Q_i^T F Q_j`` for the euclidean similarity kernel, built blockwise.

    The kernel rows are generated on the fly so no m x m matrix is
    allocated; peak extra memory is ``block_size x m``.
    """
    c = check_matrix(coordinates, name="coordinates")
    qi = check_matrix(qi, name="Qi")
    qj = qi if qj is None else check_matrix(qj, name="Qj")
    m = c.shape[0]
    if qi.shape[0] != m or qj.shape[0] != m:
        raise DimensionError("bases must have one row per coordinate")
    if block_size is None:
        block_size = max(1, qi.shape[1])
    fq = np.zeros((m, qj.shape[1]))
    for start in range(0, m, block_size):
        stop = min(start + block_size, m)
        diff = c[start:stop, None, :] - c[None, :, :]
        block = np.exp(-np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)))
        fq[start:stop] = block @ qj
    return qi.T @ fq


def _reduced_f_terms(k, prior, factors):
    if not k:
        return None, None
    if isinstance(prior, str):
        prior = PriorLocation(kind=prior)
    if prior is None:
        prior = PriorLocation.identity()
    if prior.kind == "identity":
        # Q^T I Q = I_n exactly for semi-orthogonal Q.
        return "identity", None
    if prior.kind == "euclidean":
        c = check_matrix(prior.coordinates, name="coordinates")
        if c.shape[0] != factors[0].q.shape[0]:
            raise DimensionError(
                f"prior coordinates describe {c.shape[0]} variables but the "
                f"data has m={factors[0].q.shape[0]} columns"
            )
        return [reduce_euclidean_prior(c, f.q) for f in factors], None
    f = check_matrix(prior.matrix, name="F")
    if f.shape[0] != factors[0].q.shape[0]:
        raise DimensionError(
            f"prior location is {f.shape[0]}x{f.shape[1]} but the data has "
            f"m={factors[0].q.shape[0]} columns"
        )
    return [reduce_prior(f, fac.q) for fac in factors], None


class EfficientProcrustes(BaseEstimator, TransformerMixin):
    """Reduced-space variant of :class:`GeneralizedProcrustes` for n < m.

    Accepts the same parameters; the column covariance is treated as
    proportional to the identity (its scale cancels in the rotation and only
    rescales the fitted scales), and the ``covariance`` mode governs the
    reduced n x n problem, whose existence condition ``N >= 2`` always holds.

    Attributes mirror the full-space aligner, with rotations living in the
    reduced space:

    rotations_ : list of (n, n) ndarray
        Reduced orthogonal transforms ``R*_i``.
    bases_ : list of (m, n) ndarray
        Per-subject semi-orthogonal row-space bases ``Q_i``; the implied
        transform on the original columns is ``Q_i @ R*_i @ Q_i.T`` (rank n),
        stored factored and never materialized.
    reference_ : (n, m) ndarray
        Mean of the back-projected aligned subjects.
    reduced_reference_ : (n, n) ndarray
        Template of the reduced loop.
    aligned_ : list of (n, m) ndarray
        ``(X_i @ Q_i @ R*_i) @ Q_i.T / alpha_i``; rank at most n.
    rank_deficient_ : (N,) ndarray of bool
        Projection rank flags from the per-subject thin SVDs.
    """

    def __init__(
        self,
        k=0.0,
        prior="identity",
        scaling=False,
        covariance="identity",
        tol=1e-6,
        max_iter=30,
        cov_tol_n=1e-8,
        cov_tol_m=1e-8,
        keep_history=False,
    ):
        self.k = k
        self.prior = prior
        self.scaling = scaling
        self.covariance = covariance
        self.tol = tol
        self.max_iter = max_iter
        self.cov_tol_n = cov_tol_n
        self.cov_tol_m = cov_tol_m
        self.keep_history = keep_history

    def fit(self, X, y=None):
        """Project, align in the reduced space, and back-project."""
        GeneralizedProcrustes._validate_params_(self)
        xs = check_matrices(X, name="X", min_subjects=2)
        n, m = xs[0].shape
        if n < 2:
            raise DegenerateProblemError("alignment needs at least 2 rows per subject")
        translations = [x.mean(axis=0) for x in xs]
        xs = [x - t for x, t in zip(xs, translations)]

        problem = project_subjects(xs)
        f_terms, _ = _reduced_f_terms(self.k, self.prior, problem.factors)
        out = _gpa_loop(
            problem.reduced,
            self.k,
            f_terms,
            self.scaling,
            self.covariance,
            self.tol,
            self.max_iter,
            self.cov_tol_n,
            self.cov_tol_m,
            keep_history=self.keep_history,
        )
        aligned = [
            red @ f.q.T for red, f in zip(out["aligned"], problem.factors)
        ]
        self.n_subjects_ = len(xs)
        self.n_samples_, self.n_features_ = n, m
        self.translations_ = translations
        self.bases_ = problem.bases
        self.rank_deficient_ = np.array([f.rank_deficient for f in problem.factors])
        self.rotations_ = out["rotations"]
        self.scales_ = out["scales"]
        self.reduced_reference_ = out["reference"]
        self.aligned_ = aligned
        self.reference_ = sum(aligned) / len(aligned)
        self.covariances_ = out["covariances"]
        self.iterations_ = out["iterations"]
        self.dist_trace_ = out["dist_trace"]
        self.converged_ = out["converged"]
        self.min_singular_values_ = out["min_singular_values"]
        self.unique_ = out["unique"]
        if self.keep_history:
            self.history_ = out["history"]
        return self

    def transform(self, X):
        """Apply the fitted factored transforms; output has rank <= n."""
        if not hasattr(self, "rotations_"):
            raise ValidationError("this aligner is not fitted yet; call fit first")
        xs = check_matrices(X, name="X", min_subjects=1)
        if len(xs) != self.n_subjects_:
            raise ValidationError(
                f"expected {self.n_subjects_} matrices (one per fitted subject), got {len(xs)}"
            )
        if xs[0].shape != (self.n_samples_, self.n_features_):
            raise ValidationError(
                f"expected matrices of shape {(self.n_samples_, self.n_features_)}, "
                f"got {xs[0].shape}"
            )
        xs = [x - x.mean(axis=0) for x in xs]
        return [
            (((x @ q) @ r) @ q.T) / a
            for x, q, r, a in zip(xs, self.bases_, self.rotations_, self.scales_)
        ]
