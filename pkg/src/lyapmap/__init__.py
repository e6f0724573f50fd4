"""Lyapunov exponents of rational maps of degree >= 2, over the complex
numbers and p-adic absolute values, computed by three independent routes:

* multiplier sums over fixed points of iterates (full, exact-period, and
  repelling-only variants),
* the Green-function/critical-point formula,
* Monte Carlo integration against the equilibrium measure,

plus an exact big-integer path that evaluates the multiplier sums p-adically
through resultants, with no root finding.
"""

from .cli import MapSpec, main, parse_map_spec
from .errors import (
    AmbiguousMatch,
    CriticalPointInput,
    DegenerateMap,
    DegreeCapExceeded,
    DegreeError,
    InternalInconsistency,
    IterationOverflow,
    LyapmapError,
    ModeUnavailable,
    ParseError,
    PreimageFailure,
    RootFindingDivergence,
)
from .exactpadic import (
    DEFAULT_DEGREE_CAP,
    ExactMultiplierProduct,
    ExactRationalMap,
    PAdicEstimate,
    archimedean_crosscheck,
    compose_exact,
    deflate_superattracting,
    exact_period_valuation,
    fixed_numerator,
    full_valuation,
    multiplier_product,
    padic_estimator,
    poly_gcd,
    resultant_int,
)
from .lyap import (
    MODE_EXACT,
    MODE_FULL,
    MODE_GREEN,
    MODE_MONTE_CARLO,
    MODE_REPELLING,
    MODE_REPELLING_EXACT,
    PERIODIC_MODES,
    LyapunovEstimate,
    RateReport,
    RateRow,
    estimator,
    lyapunov_green_critical,
    lyapunov_monte_carlo,
    mobius_check,
    multiplier_formula_residual,
    multiplier_log_sum,
    rate_table,
)
from .numerics import (
    DEFAULT_PRECISION_BITS,
    INFINITY,
    PAdicContext,
    ProjectivePoint,
    chordal_distance,
    divisors,
    is_prime,
    log_norm,
    mobius,
    padic_log_abs,
    padic_valuation,
    working_precision,
)
from .periodic import (
    ATTRACTING,
    INDIFFERENT,
    REPELLING,
    SUPERATTRACTING,
    FixedPointForm,
    PeriodicCache,
    PeriodicPointRecord,
    SolvePolicy,
    classify,
    exact_period_partition,
    fixed_point_form,
    solve_periodic,
)
from .potential import (
    EquilibriumSample,
    GreenEvaluator,
    chordal_derivative,
    sample_equilibrium,
    t_function,
    t_function_iterated,
)
from .rmap import (
    CriticalStructure,
    HomogeneousLift,
    critical_points,
    critical_structure,
    derivative_at,
    eval_map,
    iterate_lift,
    make_lift,
    normalize_lift,
    resultant,
    sylvester_matrix,
)

__version__ = "0.1.0"
