"""Best n-term approximation errors for weighted lp sequence balls.

Exact errors for concrete sequences, two-sided worst-case bounds over unit
balls of weighted lp spaces, brute-force certification oracles, and decay
rate fitting.  See the README for the CLI.
"""

from .bounds import (
    BoundResult,
    CumulativeWeightTable,
    InftyTailResult,
    TableTruncationError,
    build_table,
    class_bounds,
    class_error_infty,
    sandwich_width,
)
from .oracle import (
    CertificationReport,
    OracleConfig,
    certify,
    random_search_oracle,
    structure_oracle,
)
from .ratefit import (
    RateFit,
    class_error_samples,
    dyadic_grid,
    fit_rate,
    ratio_envelope,
)
from .sequences import (
    CoefficientSequence,
    Rearranged,
    as_sequence,
    decreasing_rearrangement,
    extremal_sequence,
    flatten_head,
    sigma_n_exact,
    sigma_tail_profile,
    weighted_lp_norm,
)
from .weights import (
    ConstantWeights,
    LogPowerWeights,
    PowLogWeights,
    RatePrediction,
    TabulatedWeights,
    UnsupportedFamilyError,
    WeightModel,
    WeightSpecError,
    WeightValidationError,
    parse_weight_spec,
    predicted_rate,
    validate,
    weight_value,
)

__version__ = "0.1.0"
