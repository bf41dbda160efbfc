"""Mixed-membership community estimation for directed networks.

Row nodes send edges, column nodes receive them; each node has a PMF over
K communities and row nodes carry a degree parameter. The estimator finds
pure corners in the singular vectors of the adjacency matrix and expresses
every node in terms of them.
"""

from .corners import (
    ConeSolution,
    ideal_cone_solution,
    kmeans,
    min_norm_point,
    one_class_svm,
    successive_projection,
    svm_cone,
)
from .errors import DiMSCError
from .estimator import (
    MembershipEstimate,
    fit_dimsc,
    fit_dimsc_equivalence,
    fit_ideal,
    identify_parameters,
    recover_col_memberships,
    recover_row_memberships,
    recover_theta_corners,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    demo_params,
    make_study_params,
    run_experiment,
)
from .linalg import SpectralDecomposition, row_normalize, truncated_svd
from .metrics import ErrorReport, align_permutation, error_report, mixed_hamming, subspace_deviation
from .model import (
    ModelParams,
    make_rng,
    population_matrix,
    prune_isolated,
    random_valid_params,
    row_norm_bounds,
    sample_adjacency,
    scale_theta_for_pmax,
    validate,
)

__version__ = "0.1.0"
