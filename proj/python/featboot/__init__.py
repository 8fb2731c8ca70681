"""Bootstrap confidence regions for learned feature embeddings.

Thin wrapper over the compiled core: linear-algebra primitives, Procrustes
alignment, the three bootstrap strategies, two simulators, and the random
convolutional features learner.
"""

from ._featboot import (
    ConfidenceEllipseSet,
    ReplicateSet,
    align,
    chi_squared_quantile,
    choose_ridge_lambda,
    column_center,
    compromise_replicates,
    confidence_ellipses,
    coverage,
    fit_ridge,
    generalized_procrustes,
    generate_dataset,
    generate_lowrank,
    matern_covariance,
    nonparametric_replicates,
    orthogonal_procrustes,
    parametric_replicates,
    principal_coordinates,
    random_permutation,
    rcf_feature_matrix,
    run_lowrank_experiment,
    sample_gaussian_field,
    sample_haar_orthonormal,
    split,
    svd_extractor,
    truncated_svd,
)

__all__ = [
    "ConfidenceEllipseSet",
    "ReplicateSet",
    "align",
    "chi_squared_quantile",
    "choose_ridge_lambda",
    "column_center",
    "compromise_replicates",
    "confidence_ellipses",
    "coverage",
    "fit_ridge",
    "generalized_procrustes",
    "generate_dataset",
    "generate_lowrank",
    "matern_covariance",
    "nonparametric_replicates",
    "orthogonal_procrustes",
    "parametric_replicates",
    "principal_coordinates",
    "random_permutation",
    "rcf_feature_matrix",
    "run_lowrank_experiment",
    "sample_gaussian_field",
    "sample_haar_orthonormal",
    "split",
    "svd_extractor",
    "truncated_svd",
]
