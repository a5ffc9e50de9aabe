"""Density-matrix criteria for non-k-separability of n-partite qudit states."""

from .closedform import alpha, alpha_threshold, beta, beta_threshold, figure_data
from .criteria import (
    C1,
    C2,
    CriterionReport,
    criterion1_evaluate,
    criterion2_evaluate,
    index_set_A,
    k_profile,
    noise_threshold,
)
from .qstate import (
    DensityMatrix,
    Dims,
    NoiseFamily,
    dits_to_index,
    ghz_noise_family,
    ghz_state,
    index_to_dits,
    mix_with_white_noise,
    projector,
    random_density_matrix,
    validate,
    w_noise_family,
    w_state,
)

__version__ = "0.1.0"
