"""Functional alignment of row-synchronized matrices.

The package aligns a group of n x m matrices (rows synchronized across
subjects, columns in arbitrary per-subject coordinates) by generalized
Procrustes analysis, optionally regularized with a von Mises-Fisher prior
over the orthogonal transforms. A reduced-space variant handles the wide
regime n << m by working in each subject's row-space basis.
"""

from . import exceptions
from .alignment import (
    GeneralizedProcrustes,
    RotationEstimate,
    ScaleConditionWarning,
    estimate_rotation,
    estimate_scale,
)
from .connectivity import roi_correlation, seed_correlation
from .covariance import (
    COVARIANCE_MODES,
    CovariancePair,
    check_existence,
    two_stage_covariances,
)
from .efficient import (
    EfficientProcrustes,
    ReducedProblem,
    project_subjects,
    reduce_euclidean_prior,
    reduce_prior,
)
from .io import load_matrix, read_manifest, save_matrix, sha256_file, write_manifest
from .linalg import (
    SvdTriple,
    ThinFactor,
    column_center,
    polar_orthogonal_factor,
    svd_full,
    thin_svd,
)
from .model_selection import SelectKResult, select_k
from .objectives import alignment_residual, gaussian_log_kernel, joint_objective
from .prior import (
    PriorDiagnostics,
    PriorLocation,
    build_prior_location,
    euclidean_similarity,
    posterior_location,
    vmf_log_kernel,
)
from .simulate import (
    SimulationSpec,
    SimulationTruth,
    best_rotation_grid_2d,
    random_orthogonal,
    simulate_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "COVARIANCE_MODES",
    "CovariancePair",
    "EfficientProcrustes",
    "GeneralizedProcrustes",
    "PriorDiagnostics",
    "PriorLocation",
    "ReducedProblem",
    "RotationEstimate",
    "ScaleConditionWarning",
    "SelectKResult",
    "SimulationSpec",
    "SimulationTruth",
    "SvdTriple",
    "ThinFactor",
    "alignment_residual",
    "best_rotation_grid_2d",
    "build_prior_location",
    "check_existence",
    "column_center",
    "estimate_rotation",
    "estimate_scale",
    "euclidean_similarity",
    "exceptions",
    "gaussian_log_kernel",
    "joint_objective",
    "load_matrix",
    "polar_orthogonal_factor",
    "posterior_location",
    "project_subjects",
    "random_orthogonal",
    "read_manifest",
    "reduce_euclidean_prior",
    "reduce_prior",
    "roi_correlation",
    "save_matrix",
    "seed_correlation",
    "select_k",
    "sha256_file",
    "simulate_dataset",
    "svd_full",
    "thin_svd",
    "two_stage_covariances",
    "vmf_log_kernel",
    "write_manifest",
]
