"""Joint alignment of row-synchronized matrices over the orthogonal group.

Each subject matrix ``X_i`` (n time points x m variables, column-centered)
is modelled as a scaled, rotated perturbation of a shared template. Closed
forms exist for the per-subject rotation and scale given the template: the
rotation is the polar orthogonal factor of the (optionally prior-augmented)
cross-product ``X_i^T sigma_n^{-1} M sigma_m^{-1} + k F``, and the scale is
``||sigma_m^{-1/2} R^T X^T sigma_n^{-1/2}||^2 / tr(D)``. The estimator below
iterates those updates against the running template until the template stops
moving.

With ``k = 0`` the solution set is invariant under a common right-rotation
of every subject; a full-rank prior location ``F`` with ``k > 0`` pins the
orientation and makes the estimates unique.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .covariance import COVARIANCE_MODES, CovariancePair, check_existence, two_stage_covariances
from .exceptions import (
    DegenerateProblemError,
    ExistenceConditionError,
    NumericError,
    ValidationError,
)
from .linalg import RANK_RTOL, squared_norm, sym_inverse_sqrt, sym_pseudo_inverse
from .prior import PriorLocation, build_prior_location
from .validation import check_matrices, check_matrix


class ScaleConditionWarning(UserWarning):
    """The closed-form scale is used outside its nominal validity regime."""


@dataclass(frozen=True)
class RotationEstimate:
    """Closed-form rotation plus the singular values it came from."""

    rotation: np.ndarray
    singular_values: np.ndarray
    unique: bool


def _whitened_target(m_hat, sigma_n, sigma_m):
    # sigma_n^{-1} M sigma_m^{-1} with pseudo-inverses; identity factors are
    # passed as None. Centering leaves estimated row factors rank-deficient
    # along the all-ones direction, which the cutoff absorbs.
    t = m_hat
    if sigma_n is not None:
        t = sym_pseudo_inverse(sigma_n, "sigma_n") @ t
    if sigma_m is not None:
        t = t @ sym_pseudo_inverse(sigma_m, "sigma_m")
    return t


def _augmented_crossprod(x, target, k, f_term):
    a = x.T @ target
    if k and f_term is not None:
        if isinstance(f_term, str):  # identity location
            a.flat[:: a.shape[0] + 1] += k
        else:
            a = a + k * f_term
    return a


def _polar_from_crossprod(a):
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"SVD of the {a.shape[0]}x{a.shape[1]} cross-product did not converge: {exc}"
        ) from exc
    unique = bool(s.size and s[0] > 0.0 and s[-1] > RANK_RTOL * s[0])
    return u @ vt, s, unique


def estimate_rotation(x, reference, sigma_n=None, sigma_m=None, k=0.0, f=None):
    """Closed-form rotation aligning ``x`` to ``reference``.

    Parameters
    ----------
    x, reference : ndarray of shape (n, m)
    sigma_n, sigma_m : ndarray or None
        Row/column covariances; None means identity.
    k : float
        Prior concentration; 0 disables the prior term.
    f : ndarray, "identity", or None
        Prior location matrix. The string "identity" adds ``k`` to the
        diagonal without materializing an identity matrix.

    Returns
    -------
    RotationEstimate
        The orthogonal factor, the singular values of the augmented
        cross-product (needed by :func:`estimate_scale`), and a uniqueness
        flag that is False when the cross-product is rank deficient.
    """
    x = check_matrix(x, name="X")
    reference = check_matrix(reference, name="reference")
    if x.shape != reference.shape:
        raise ValidationError(f"X is {x.shape} but reference is {reference.shape}")
    target = _whitened_target(reference, sigma_n, sigma_m)
    a = _augmented_crossprod(x, target, k, f if f is not None else ("identity" if k else None))
    r, s, unique = _polar_from_crossprod(a)
    return RotationEstimate(rotation=r, singular_values=s, unique=unique)


def estimate_scale(x, rotation, singular_values, sigma_n=None, sigma_m=None):
    """Closed-form scale ``||sigma_m^{-1/2} R^T X^T sigma_n^{-1/2}||^2 / tr(D)``.

    Warns with :class:`ScaleConditionWarning` when ``tr(D)^2`` is within a
    factor 10 of the squared norm, where the closed form is only an
    approximation of the posterior maximizer.
    """
    x = np.asarray(x, dtype=np.float64)
    tr_d = float(np.sum(singular_values))
    if tr_d <= 1e-300:
        raise DegenerateProblemError(
            "cross-product singular values sum to zero; scale is undefined"
        )
    if sigma_n is None and sigma_m is None:
        sq = squared_norm(x)
    else:
        b = x @ rotation
        if sigma_n is not None:
            b = sym_inverse_sqrt(sigma_n, "sigma_n") @ b
        if sigma_m is not None:
            b = b @ sym_inverse_sqrt(sigma_m, "sigma_m")
        sq = squared_norm(b)
    if tr_d * tr_d < 10.0 * sq:
        warnings.warn(
            "scale closed form used where tr(D)^2 < 10 * ||.||^2; "
            "the estimate may be biased",
            ScaleConditionWarning,
            stacklevel=2,
        )
    return sq / tr_d


def _as_f_term(k, prior, m):
    """Resolve the prior location into the internal cross-product term."""
    if not k:
        return None, None
    if isinstance(prior, str):
        prior = PriorLocation(kind=prior)
    if prior is None:
        prior = PriorLocation.identity()
    if prior.kind == "identity":
        return "identity", None
    f, diag = build_prior_location(prior, m)
    return f, diag


def _gpa_loop(
    xs,
    k,
    f_terms,
    scaling,
    covariance,
    tol,
    max_iter,
    cov_tol_n,
    cov_tol_m,
    keep_history=False,
):
    """Template/rotation/scale alternation shared by both aligners.

    ``f_terms`` is None (no prior), the string "identity", a single dense
    location, or one dense location per subject (the reduced path).
    """
    n_subjects = len(xs)
    n, m = xs[0].shape
    per_subject_f = isinstance(f_terms, list)

    m_hat = sum(xs) / n_subjects
    scales = np.ones(n_subjects)
    rotations = [None] * n_subjects
    sv_min = np.zeros(n_subjects)
    unique = np.zeros(n_subjects, dtype=bool)
    aligned = [x.copy() for x in xs]
    pair = None  # identity covariances
    degenerate_pair = None
    dist_trace = []
    history = [] if keep_history else None
    converged = False
    iterations = 0
    x_sq = [squared_norm(x) for x in xs]

    for _ in range(max_iter):
        iterations += 1
        if pair is None:
            sigma_n = sigma_m = None
            sn_isqrt = sm_isqrt = None
        else:
            sigma_n, sigma_m = pair.sigma_n, pair.sigma_m
            sn_isqrt = sym_inverse_sqrt(sigma_n, "sigma_n") if scaling else None
            sm_isqrt = sym_inverse_sqrt(sigma_m, "sigma_m") if scaling else None
        target = _whitened_target(m_hat, sigma_n, sigma_m)
        reference_used = m_hat

        for i in range(n_subjects):
            f_i = f_terms[i] if per_subject_f else f_terms
            a = _augmented_crossprod(xs[i], target, k, f_i)
            r, s, uniq = _polar_from_crossprod(a)
            rotations[i] = r
            sv_min[i] = s[-1] if s.size else 0.0
            unique[i] = uniq
            if scaling:
                if sigma_n is None:
                    sq = x_sq[i]
                else:
                    b = sn_isqrt @ (xs[i] @ r) @ sm_isqrt
                    sq = squared_norm(b)
                tr_d = float(np.sum(s))
                if tr_d <= 1e-300:
                    raise DegenerateProblemError(
                        f"subject {i}: cross-product singular values sum to zero"
                    )
                scales[i] = sq / tr_d
            else:
                scales[i] = 1.0
            aligned[i] = (xs[i] @ r) / scales[i]

        m_old = m_hat
        m_hat = sum(aligned) / n_subjects

        if covariance == "dutilleul":
            new_pair = two_stage_covariances(
                aligned, m_hat, eps_n=cov_tol_n, eps_m=cov_tol_m
            )
            if new_pair.degenerate:
                degenerate_pair = new_pair
                pair = None  # keep identity factors usable
            else:
                pair = new_pair

        dist = squared_norm(m_hat - m_old)
        dist_trace.append(dist)
        if keep_history:
            history.append(
                {
                    "reference": reference_used,
                    "rotations": [r.copy() for r in rotations],
                    "scales": scales.copy(),
                }
            )
        if dist < tol:
            converged = True
            break

    if degenerate_pair is not None:
        cov_out = degenerate_pair
    elif pair is not None:
        cov_out = pair
    else:
        cov_out = CovariancePair.identity(n, m)
    return {
        "reference": m_hat,
        "rotations": rotations,
        "scales": scales,
        "aligned": aligned,
        "covariances": cov_out,
        "iterations": iterations,
        "dist_trace": dist_trace,
        "converged": converged,
        "min_singular_values": sv_min,
        "unique": unique,
        "history": history,
    }


class GeneralizedProcrustes(BaseEstimator, TransformerMixin):
    """Generalized Procrustes alignment with an optional von Mises-Fisher prior.

    Parameters
    ----------
    k : float, default=0.0
        Prior concentration. 0 gives the plain maximum likelihood aligner.
    prior : str or PriorLocation, default="identity"
        Location of the prior over rotations; ignored when ``k == 0``.
    scaling : bool, default=False
        Estimate a per-subject isotropic scale (otherwise pinned to 1).
    covariance : {"identity", "dutilleul"}, default="identity"
        Residual covariance model. "dutilleul" runs the two-stage row/column
        estimator inside each iteration and requires ``N >= m/n + 1``.
    tol : float, default=1e-6
        Convergence threshold on the squared Frobenius change of the
        template between iterations.
    max_iter : int, default=30
        Iteration cap.
    cov_tol_n, cov_tol_m : float, default=1e-8
        Inner-loop thresholds of the two-stage covariance estimator.
    keep_history : bool, default=False
        Record per-iteration rotations/scales/template in ``history_``.

    Attributes
    ----------
    rotations_ : list of (m, m) ndarray
        Per-subject orthogonal transforms.
    scales_ : (N,) ndarray
        Per-subject scales (all 1 when ``scaling=False``).
    reference_ : (n, m) ndarray
        Final template (element-wise mean of the aligned subjects).
    aligned_ : list of (n, m) ndarray
        ``X_i @ R_i / alpha_i`` for the training subjects.
    translations_ : list of (m,) ndarray
        Column means removed from each input before alignment.
    covariances_ : CovariancePair
    dist_trace_ : list of float
        Squared template change per iteration.
    converged_ : bool
    iterations_ : int
    unique_ : (N,) ndarray of bool
        Per-subject uniqueness of the rotation (full-rank cross-product).
    min_singular_values_ : (N,) ndarray
        Smallest singular value of each final augmented cross-product.

    Examples
    --------
    >>> import numpy as np
    >>> from vmfalign import GeneralizedProcrustes
    >>> rng = np.random.default_rng(0)
    >>> m = rng.standard_normal((12, 4))
    >>> xs = [m, m @ np.diag([1., -1., 1., 1.]), m]
    >>> gp = GeneralizedProcrustes().fit(xs)
    >>> gp.converged_
    True
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

    def _validate_params_(self):
        if self.k < 0:
            raise ValidationError(f"k must be >= 0, got {self.k}")
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValidationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.cov_tol_n <= 0 or self.cov_tol_m <= 0:
            raise ValidationError("covariance tolerances must be positive")
        if self.covariance not in COVARIANCE_MODES:
            raise ValidationError(
                f"covariance must be one of {COVARIANCE_MODES}, got {self.covariance!r}"
            )

    def _center(self, xs):
        translations = [x.mean(axis=0) for x in xs]
        return [x - t for x, t in zip(xs, translations)], translations

    def fit(self, X, y=None):
        """Align the list of subject matrices ``X``."""
        self._validate_params_()
        xs = check_matrices(X, name="X", min_subjects=2)
        n, m = xs[0].shape
        if n < 2:
            raise DegenerateProblemError("alignment needs at least 2 rows per subject")
        if self.covariance == "dutilleul" and not check_existence(len(xs), n, m):
            raise ExistenceConditionError(
                f"two-stage covariance estimation requires N >= m/n + 1 subjects; "
                f"got N={len(xs)} with n={n}, m={m} (bound {m / n + 1:g})"
            )
        xs, translations = self._center(xs)
        f_term, prior_diag = _as_f_term(self.k, self.prior, m)
        out = _gpa_loop(
            xs,
            self.k,
            f_term,
            self.scaling,
            self.covariance,
            self.tol,
            self.max_iter,
            self.cov_tol_n,
            self.cov_tol_m,
            keep_history=self.keep_history,
        )
        self.n_subjects_ = len(xs)
        self.n_samples_, self.n_features_ = n, m
        self.translations_ = translations
        self.prior_diagnostics_ = prior_diag
        self.rotations_ = out["rotations"]
        self.scales_ = out["scales"]
        self.reference_ = out["reference"]
        self.aligned_ = out["aligned"]
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
        """Apply the fitted per-subject transforms to matrices ``X``.

        ``X`` must hold one matrix per fitted subject, with the fitted shape;
        each is column-centered and then rotated/scaled.
        """
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
        xs, _ = self._center(xs)
        return [
            (x @ r) / a for x, r, a in zip(xs, self.rotations_, self.scales_)
        ]
