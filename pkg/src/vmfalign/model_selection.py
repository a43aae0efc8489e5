"""Concentration selection by leave-one-subject-out cross-validation."""

from dataclasses import dataclass

import numpy as np

from .alignment import GeneralizedProcrustes, estimate_rotation, estimate_scale
from .efficient import EfficientProcrustes, _reduced_f_terms
from .exceptions import ValidationError
from .linalg import thin_svd
from .prior import PriorLocation, build_prior_location
from .validation import check_matrices


@dataclass(frozen=True)
class SelectKResult:
    """Grid-search outcome: winning concentration plus the full score table."""

    k_best: float
    candidates: np.ndarray
    scores: np.ndarray  # (len(candidates), n_subjects) held-out errors
    mean_scores: np.ndarray

    def table(self):
        rows = []
        for i, k in enumerate(self.candidates):
            for fold in range(self.scores.shape[1]):
                rows.append({"k": float(k), "fold": fold, "score": float(self.scores[i, fold])})
        return rows


def _full_f_term(k, prior, m):
    if not k:
        return None
    if isinstance(prior, str):
        prior = PriorLocation(kind=prior)
    if prior.kind == "identity":
        return "identity"
    f, _ = build_prior_location(prior, m)
    return f


def _heldout_score_full(x_held, model, k, f_term, scaling):
    cov = model.covariances_
    sigma_n = None if cov.degenerate or _is_identity(cov.sigma_n) else cov.sigma_n
    sigma_m = None if cov.degenerate or _is_identity(cov.sigma_m) else cov.sigma_m
    x = x_held - x_held.mean(axis=0)
    est = estimate_rotation(x, model.reference_, sigma_n, sigma_m, k=k, f=f_term)
    alpha = (
        estimate_scale(x, est.rotation, est.singular_values, sigma_n, sigma_m)
        if scaling
        else 1.0
    )
    return float(np.linalg.norm((x @ est.rotation) / alpha - model.reference_))


def _heldout_score_efficient(x_held, model, k, prior, scaling):
    x = x_held - x_held.mean(axis=0)
    factor = thin_svd(x)
    f_terms, _ = _reduced_f_terms(k, prior, [factor])
    f_term = f_terms[0] if isinstance(f_terms, list) else f_terms
    reduced = x @ factor.q
    target = model.reference_ @ factor.q
    est = estimate_rotation(reduced, target, k=k, f=f_term)
    alpha = (
        estimate_scale(reduced, est.rotation, est.singular_values) if scaling else 1.0
    )
    back = ((reduced @ est.rotation) @ factor.q.T) / alpha
    return float(np.linalg.norm(back - model.reference_))


def _is_identity(a):
    return a.shape[0] == a.shape[1] and np.array_equal(a, np.eye(a.shape[0]))


def select_k(
    xs,
    candidates,
    prior="identity",
    scaling=False,
    covariance="identity",
    tol=1e-6,
    max_iter=30,
    efficient=False,
):
    """Pick the prior concentration by leave-one-subject-out error.

    For every candidate ``k`` and every held-out subject, the remaining
    subjects are aligned, the held-out rotation (and scale, if enabled) is
    estimated in closed form against the training template, and the score is
    the Frobenius distance of the transformed held-out subject from that
    template. The winner minimizes the mean score; the full table is
    returned for inspection.
    """
    xs = check_matrices(xs, name="Xs", min_subjects=1)
    if len(xs) < 3:
        raise ValidationError(
            f"leave-one-subject-out selection needs at least 3 subjects, got {len(xs)}"
        )
    candidates = np.asarray(list(candidates), dtype=np.float64)
    if candidates.size == 0:
        raise ValidationError("candidate grid must not be empty")
    if np.any(candidates < 0):
        raise ValidationError("candidates must be >= 0")

    n_subjects = len(xs)
    m = xs[0].shape[1]
    scores = np.empty((candidates.size, n_subjects))
    cls = EfficientProcrustes if efficient else GeneralizedProcrustes
    for ci, k in enumerate(candidates):
        f_term = None if efficient else _full_f_term(k, prior, m)
        for held in range(n_subjects):
            train = [xs[i] for i in range(n_subjects) if i != held]
            model = cls(
                k=float(k),
                prior=prior,
                scaling=scaling,
                covariance=covariance,
                tol=tol,
                max_iter=max_iter,
            ).fit(train)
            if efficient:
                scores[ci, held] = _heldout_score_efficient(
                    xs[held], model, float(k), prior, scaling
                )
            else:
                scores[ci, held] = _heldout_score_full(
                    xs[held], model, float(k), f_term, scaling
                )
    mean_scores = scores.mean(axis=1)
    k_best = float(candidates[int(np.argmin(mean_scores))])
    return SelectKResult(
        k_best=k_best,
        candidates=candidates,
        scores=scores,
        mean_scores=mean_scores,
    )
