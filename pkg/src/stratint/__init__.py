"""Fourier-Legendre expansions of iterated Ito and Stratonovich integrals."""

from .basis import (
    BasisKind,
    BasisSpec,
    DomainError,
    Interval,
    QuadratureRule,
    gauss_legendre,
    legendre_derivative,
    legendre_eval,
    legendre_pair,
    phi,
)
from .catalog import (
    IntegralId,
    TrigTail,
    catalog_eval,
    catalog_eval_trig,
    catalog_second_moment,
    trig_tail,
)
from .coeffs import (
    CoefficientTable,
    MultiIndex,
    WeightSpec,
    coefficient_table,
    fourier_coefficient,
    kernel_eval,
    kernel_norm_sq,
    trace_sum,
)
from .expansion import (
    ExpansionValue,
    GaussianPool,
    NoiseSelector,
    ito_truncated,
    mse_k2_exact,
    sample_pool,
    strat_truncated_k2,
    strat_truncated_k34,
)
from .oracle import (
    IntegralSpec,
    MCConfig,
    OracleEstimate,
    WienerPath,
    ito_discrete,
    mc_mean_square_diff,
    simulate_path,
    strat_from_ito,
    zeta_from_path,
)
from .sde import ConvergenceReport, SdeProblem, integrate, strong_order

__version__ = "0.1.0"
