"""Structure learning for k-spin Ising models.

Recovers a sparse symmetric order-k interaction tensor from +/-1 samples
via two L1-regularized convex estimators: regularized interaction screening
(RISE) and regularized pseudolikelihood (RPLE).  Ships exact and Gibbs
samplers, runtime diagnostics, a simulation harness, and a binarized
expression-data pipeline.
"""

from .errors import (
    CapabilityError,
    GenerationError,
    InvalidModelError,
    InvalidSampleError,
    InvalidTupleError,
    KspinError,
    ParseError,
    ShapeError,
)
from .hypergen import HypergraphSpec, assign_couplings, random_regular_uniform, tensor_from_spec
from .learner import (
    BicGrid,
    FixedLambda,
    LearnConfig,
    RecoveryReport,
    TheoremLambda,
    bic_select,
    default_bic_grid,
    fit_node,
    recover_tensor,
    theorem_lambda,
)
from .objectives import (
    LossEval,
    NeighborhoodVector,
    NodeObjective,
    empirical_gram,
    logcosh,
    restricted_eigen_diag,
    rise_eval,
    rple_eval,
)
from .optimizer import FitResult, SolverConfig, minimize_l1, soft_threshold
from .sampling import (
    GibbsConfig,
    conditional_prob,
    partition_function,
    pmf,
    read_samples_csv,
    sample_exact,
    sample_gibbs,
    write_samples_csv,
)
from .tensor import (
    GraphStats,
    InteractionTensor,
    TupleIndex,
    get_coupling,
    graph_stats,
    hamiltonian,
    local_field,
    local_monomials,
    neighborhood_vector,
    rank_tuple,
    read_tensor_csv,
    write_tensor_csv,
)

__version__ = "0.1.0"
