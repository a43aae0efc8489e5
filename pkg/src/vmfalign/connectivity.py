"""Correlation analyses on the aligned group template.

Both routines consume a time-by-variable matrix, typically the element-wise
mean across subjects of the aligned matrices. Correlations that are
undefined because a column has zero variance are reported as NaN sentinels,
never as silent zeros, so downstream tables stay auditable.
"""

import numpy as np

from .exceptions import DegenerateProblemError, ValidationError
from .validation import check_matrix


def seed_correlation(reference, seed_column):
    """Pearson correlation between one seed column and every column.

    Parameters
    ----------
    reference : ndarray of shape (n, m), n >= 3
    seed_column : int
        Index of the seed; its variance must be nonzero.

    Returns
    -------
    (m,) ndarray with values in [-1, 1]; entry ``seed_column`` is 1 and
    zero-variance columns are NaN.
    """
    x = check_matrix(reference, name="reference", min_rows=3)
    n, m = x.shape
    seed_column = int(seed_column)
    if not 0 <= seed_column < m:
        raise ValidationError(f"seed column {seed_column} out of range [0, {m})")
    z = x - x.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", z, z))
    if norms[seed_column] == 0.0:
        raise DegenerateProblemError(
            f"seed column {seed_column} has zero variance"
        )
    zs = z[:, seed_column] / norms[seed_column]
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = (z.T @ zs) / norms
    corr[norms == 0.0] = np.nan
    valid = ~np.isnan(corr)
    corr[valid] = np.clip(corr[valid], -1.0, 1.0)
    return corr


def roi_correlation(reference, labels, regions=None, names=None):
    """Correlation matrix among region-averaged column series.

    Parameters
    ----------
    reference : ndarray of shape (n, m), n >= 3
    labels : (m,) array of int
        Region identifier for each column.
    regions : sequence of int, optional
        Region identifiers to use, in output order; defaults to the sorted
        distinct labels. An identifier with no member columns is an error.
    names : mapping int -> str, optional
        Used only to name regions in error messages.

    Returns
    -------
    (corr, regions) : (K, K) ndarray symmetric with unit diagonal, and the
        region identifiers in row/column order.
    """
    x = check_matrix(reference, name="reference", min_rows=3)
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != x.shape[1]:
        raise ValidationError(
            f"labels must have one entry per column ({x.shape[1]}), got shape {labels.shape}"
        )
    if regions is None:
        regions = np.unique(labels)
    else:
        regions = np.asarray(regions)
        if regions.size == 0:
            raise ValidationError("at least one region is required")
    series = np.empty((x.shape[0], regions.size))
    for j, region in enumerate(regions):
        members = labels == region
        if not members.any():
            label = names.get(region, region) if names else region
            raise ValidationError(f"region {label!r} has no member columns")
        series[:, j] = x[:, members].mean(axis=1)
    z = series - series.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", z, z))
    if np.any(norms == 0.0):
        bad = [regions[j] for j in np.nonzero(norms == 0.0)[0]]
        raise DegenerateProblemError(
            f"region mean series with zero variance: {bad}"
        )
    z /= norms
    corr = z.T @ z
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, 1.0)
    np.clip(corr, -1.0, 1.0, out=corr)
    return corr, regions
