"""Synthetic data generation and brute-force oracles for the aligner.

Datasets are drawn from the generative model ``X_i = alpha_i (M + E_i) R_i^T``
with independent Gaussian noise entries (row covariance sigma^2 I, column
covariance I) and then column-centered, which is exactly the regime the
acceptance suite exercises. Everything is a pure function of the seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .linalg import column_center
from .validation import check_matrix


@dataclass(frozen=True)
class SimulationSpec:
    """Recipe for one synthetic dataset.

    ``scales`` defaults to all ones and ``rotations`` to Haar draws; both can
    be planted explicitly. ``seed`` makes every draw reproducible.
    """

    n_subjects: int
    n: int
    m: int
    noise_sigma: float = 0.0
    scales: np.ndarray | None = None
    seed: int = 0
    rotations: list | None = field(default=None, repr=False)

    def __post_init__(self):
        if min(self.n_subjects, self.n, self.m) < 1:
            raise ValidationError("dimensions must be positive")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.scales is not None:
            s = np.asarray(self.scales, dtype=np.float64)
            if s.shape != (self.n_subjects,) or np.any(s <= 0):
                raise ValidationError(
                    f"scales must be {self.n_subjects} positive reals"
                )
        if self.rotations is not None and len(self.rotations) != self.n_subjects:
            raise ValidationError("one planted rotation is required per subject")


@dataclass(frozen=True)
class SimulationTruth:
    """Planted parameters behind a simulated dataset."""

    rotations: list
    scales: np.ndarray
    errors: list
    reference: np.ndarray  # column-centered M


def random_orthogonal(m, seed):
    """Haar-distributed orthogonal matrix via QR with sign correction.

    ``seed`` may be an int or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = rng.standard_normal((m, m))
    q, r = np.linalg.qr(a)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def simulate_dataset(spec, reference):
    """Draw subject matrices from the perturbation model.

    Parameters
    ----------
    spec : SimulationSpec
    reference : ndarray of shape (spec.n, spec.m)
        The shared matrix M.

    Returns
    -------
    (xs, truth) : list of ndarray, SimulationTruth
        ``xs[i]`` is the column-centered ``alpha_i (M + E_i) R_i^T``; the
        truth records the planted rotations, scales, raw error draws, and
        the column-centered reference.
    """
    reference = check_matrix(reference, name="reference")
    if reference.shape != (spec.n, spec.m):
        raise ValidationError(
            f"reference must be {spec.n}x{spec.m}, got {reference.shape}"
        )
    rng = np.random.default_rng(spec.seed)
    if spec.rotations is not None:
        rotations = [check_matrix(r, name="rotation") for r in spec.rotations]
    else:
        rotations = [random_orthogonal(spec.m, rng) for _ in range(spec.n_subjects)]
    scales = (
        np.ones(spec.n_subjects)
        if spec.scales is None
        else np.asarray(spec.scales, dtype=np.float64)
    )
    xs = []
    errors = []
    for i in range(spec.n_subjects):
        e = spec.noise_sigma * rng.standard_normal((spec.n, spec.m))
        errors.append(e)
        xs.append(column_center(scales[i] * (reference + e) @ rotations[i].T))
    return xs, SimulationTruth(
        rotations=rotations,
        scales=scales,
        errors=errors,
        reference=column_center(reference),
    )


def best_rotation_grid_2d(a, grid_step=1e-4):
    """Exhaustive grid maximizer of ``tr(A^T R)`` over the 2-D orthogonal group.

    Scans rotation angles in ``[0, 2*pi)`` at ``grid_step`` radians on both
    the rotation and reflection branches, evaluating the trace elementwise.
    Serves as an independent check of the closed-form estimator.

    Returns ``(r_best, trace_best)``.
    """
    a = check_matrix(a, name="A")
    if a.shape != (2, 2):
        raise ValidationError(f"A must be 2x2, got {a.shape}")
    if grid_step > 1e-3:
        raise ValidationError(f"grid_step must be <= 1e-3 radians, got {grid_step}")
    theta = np.arange(0.0, 2.0 * np.pi, grid_step)
    c, s = np.cos(theta), np.sin(theta)
    # tr(A^T R) expanded entrywise for each branch.
    tr_rot = (a[0, 0] + a[1, 1]) * c + (a[1, 0] - a[0, 1]) * s
    tr_ref = (a[0, 0] - a[1, 1]) * c + (a[0, 1] + a[1, 0]) * s
    i_rot = int(np.argmax(tr_rot))
    i_ref = int(np.argmax(tr_ref))
    if tr_rot[i_rot] >= tr_ref[i_ref]:
        cb, sb = c[i_rot], s[i_rot]
        r_best = np.array([[cb, -sb], [sb, cb]])
        return r_best, float(tr_rot[i_rot])
    cb, sb = c[i_ref], s[i_ref]
    r_best = np.array([[cb, sb], [sb, -cb]])
    return r_best, float(tr_ref[i_ref])
