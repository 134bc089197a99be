"""siws-kit: MMSE estimation of the scale-invariant Wigner spectrum.

Numerical library and CLI for Gaussian locally self-similar processes:
covariance synthesis and sampling, scale-invariant time-frequency transforms
on geometric grids, MMSE-optimal ambiguity kernels (closed-form, numeric
global, and local), and a Monte-Carlo estimator benchmark.
"""

from .bench import (
    BenchReport,
    BenchScenario,
    EstimatorReport,
    EstimatorSpec,
    default_benchmark_scenario,
    mse_surface,
    run_benchmark,
)
from .errors import (
    GridError,
    ModelError,
    NumericalError,
    PsdError,
    QuadratureWarning,
    SiwsKitError,
    ValidationError,
)
from .grids import (
    FrequencyGrid,
    GeometricGrid,
    MellinLine,
    UniformTimeGrid,
    edge_decay_ok,
    mellin_forward,
    mellin_inverse,
    partial_mellin,
)
from .kernels import (
    KernelSpec,
    LocalKernelSolver,
    ambiguity_power_terms,
    closed_kernel_lsscp,
    closed_kernel_lssp,
    closed_kernel_matrix,
    closed_kernel_mlsscp,
    closed_kernel_mlssp,
    closed_vs_numeric_report,
    local_optimal_kernel,
    numeric_global_kernel,
    tf_domain_kernel,
)
from .models import (
    ChirpParams,
    FunctionPair,
    LsspParams,
    ModelSpec,
    eval_C,
    eval_Q,
    eval_chirp,
    eval_covariance,
    eval_local_slice,
    model_from_dict,
    model_to_dict,
)
from .synth import (
    RNG_NAME,
    CovarianceMatrix,
    SampleBatch,
    certify_psd,
    cholesky_factor,
    covariance_matrix,
    default_time_grid,
    empirical_covariance,
    pseudo_covariance,
    sample_paths,
)
from .tfr import (
    AmbiguityMatrix,
    TFMatrix,
    canonical_theta_grid,
    canonical_xi_grid,
    classical_wvs_estimate,
    cohen_estimate,
    esiaf,
    lag_grid,
    siaf,
    siwd,
    true_siws,
    xi_limit,
)

__version__ = "0.1.0"
