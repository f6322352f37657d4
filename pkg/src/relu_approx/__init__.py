"""Constructive deep-ReLU approximation toolkit.

Exact piecewise-linear algebra, a feedforward network model with complexity
accounting, activation conversions, the squaring/multiplication builders,
partition-of-unity Taylor approximators, adaptive cached-profile networks,
and a measurement harness; served over HTTP or driven from the CLI.
"""

from .analysis import (
    measure_sup_error,
    min_pieces_for_quadratic_error,
    piece_bound_check,
    scaling_experiment,
    shallow_lower_bound,
)
from .arithmetic import (
    build_abs,
    build_multiplier,
    build_sawtooth,
    build_square,
    build_tooth,
    multiplier_params,
    square_depth_for_error,
)
from .convert import BreakpointData, propagate_intervals, pwl_to_relu, relu_to_pwl
from .errors import (
    DomainMismatchError,
    GuaranteeViolation,
    ParameterError,
    RangeError,
    StructureError,
    UnsupportedActivationError,
)
from .lipschitz import (
    AdaptivePlan,
    CachedProfile,
    build_adaptive_relu,
    build_cache_network_rho,
    build_filter,
    coarse_interpolant,
    quantize_profile,
)
from .network import (
    Affine,
    ComplexityMetrics,
    ContinuousPWLActivation,
    Network,
    NetworkBuilder,
    abs_activation,
    net_affine_precompose,
    net_envelope_embed,
    net_eval,
    net_extract_pwl,
    net_metrics,
    net_parallel_sum,
    net_validate,
    parallel_combine,
)
from .pwl import (
    PWL1D,
    pwl_compose,
    pwl_eval,
    pwl_interpolate,
    pwl_linear_combine,
    pwl_piece_count,
    pwl_sup_distance,
    pwl_sup_error_vs_quadratic,
    sawtooth_pwl,
    tooth_pwl,
)
from .report import ApproxReport
from .sobolev import (
    SobolevArchitecture,
    TaylorGrid,
    build_psi,
    build_sobolev_approximator,
    build_term_network,
    choose_product_accuracy,
    choose_resolution,
    reweight_architecture,
    taylor_coefficients,
)
from .targets import SmoothFunctionOracle

__version__ = "0.1.0"
