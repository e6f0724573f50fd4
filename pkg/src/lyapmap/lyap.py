"""Lyapunov exponent estimators: periodic-point multiplier sums (full,
exact-period, repelling variants), the Green/critical-point route, Monte Carlo
integration against the equilibrium measure, the Moebius-inversion consistency
check, and convergence-rate reporting.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import mpmath
import numpy as np
from mpmath import mpf

from .errors import CriticalPointInput, ModeUnavailable
from .numerics import ProjectivePoint, chordal_distance, divisors, mobius, working_precision
from .periodic import INDIFFERENT_LOG_BAND, PeriodicCache
from .potential import (
    GreenEvaluator,
    _backward_chain,
    chordal_derivative,
    log_chordal_derivative_batch,
)
from .rmap import HomogeneousLift, critical_structure, eval_map

MODE_FULL = "full"
MODE_EXACT = "exact_period"
MODE_REPELLING = "repelling"
MODE_REPELLING_EXACT = "repelling_exact"
MODE_GREEN = "green_critical"
MODE_MONTE_CARLO = "monte_carlo"

PERIODIC_MODES = (MODE_FULL, MODE_EXACT, MODE_REPELLING, MODE_REPELLING_EXACT)


@dataclass(frozen=True)
class LyapunovEstimate:
    mode: str
    n: int
    value: float
    excluded_count: int
    sample_count: int = None
    std_error: float = None


def multiplier_log_sum(records, n: int, mode: str):
    """(sum of multiplicity-weighted log|multiplier|, excluded multiplicity).

    Zero multipliers are excluded in the full/exact modes; everything with
    log|multiplier| at or below the indifferent band is excluded in the
    repelling modes.  Exact modes require partitioned records and raise
    ModeUnavailable otherwise.
    """
    exact_only = mode in (MODE_EXACT, MODE_REPELLING_EXACT)
    repelling_only = mode in (MODE_REPELLING, MODE_REPELLING_EXACT)
    if mode not in PERIODIC_MODES:
        raise ValueError("unknown periodic mode %r" % mode)
    total = mpf(0)
    excluded = 0
    for r in records:
        if exact_only:
            if r.exact_period is None:
                raise ModeUnavailable(
                    "records for n=%d lack exact-period flags; solve all divisors first" % n
                )
            if not r.exact_period:
                continue
        if r.multiplier == 0:
            excluded += r.multiplicity
            continue
        la = mpmath.log(abs(r.multiplier))
        if repelling_only and la <= INDIFFERENT_LOG_BAND:
            excluded += r.multiplicity
            continue
        total += r.multiplicity * la
    return total, excluded


def estimator(F: HomogeneousLift, n: int, mode: str, cache: PeriodicCache = None) -> LyapunovEstimate:
    """The multiplier-sum estimate (1/(n d^n)) sum log|(f^n)'(w)| over the mode's point set."""
    cache = cache or PeriodicCache(F)
    exact_only = mode in (MODE_EXACT, MODE_REPELLING_EXACT)
    records = cache.records(n, partitioned=exact_only)
    with working_precision(F.prec):
        total, excluded = multiplier_log_sum(records, n, mode)
        value = total / (n * mpf(F.d) ** n)
    return LyapunovEstimate(mode=mode, n=n, value=float(value), excluded_count=excluded)


def mobius_check(F: HomogeneousLift, n: int, cache: PeriodicCache = None) -> float:
    """Residual of the Moebius identity linking exact-period and full multiplier sums.

    |(1/n) sum_{exact n} log|mult| - sum_{m|n} mu(n/m) (1/m) sum_{full m} log|mult||,
    zero multipliers excluded on both sides.
    """
    cache = cache or PeriodicCache(F)
    with working_precision(F.prec):
        lhs_total, _ = multiplier_log_sum(cache.records(n, partitioned=True), n, MODE_EXACT)
        lhs = lhs_total / n
        rhs = mpf(0)
        for m in divisors(n):
            mu = mobius(n // m)
            if mu == 0:
                continue
            t, _ = multiplier_log_sum(cache.records(m), m, MODE_FULL)
            rhs += mu * t / m
        return float(abs(lhs - rhs))


def lyapunov_green_critical(
    F: HomogeneousLift, green_tol: float = 1e-12, evaluator: GreenEvaluator = None
) -> LyapunovEstimate:
    """L via the critical-point formula: -log d + log|kappa| + sum_j m_j g(c_j).

    Requires the resultant-normalized lift (the evaluator normalizes); the
    error is bounded by (2d - 2) times the Green tolerance.
    """
    G = evaluator or GreenEvaluator(F, tol=green_tol)
    lift = G.lift
    with working_precision(lift.prec):
        cs = critical_structure(lift)
        total = -mpmath.log(lift.d) + cs.kappa_log_abs
        for c, mult in cs.points:
            total += mult * G.green(c, green_tol)
    return LyapunovEstimate(mode=MODE_GREEN, n=0, value=float(total), excluded_count=0)


def lyapunov_monte_carlo(
    F: HomogeneousLift, samples: int, burn_in: int = 100, seed: int = 0
) -> LyapunovEstimate:
    """Sample mean of log f# over backward-iteration equilibrium samples.

    Deterministic per seed.  The reported standard error comes from batch
    means, which stays honest under the chain's serial correlation.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    chain = _backward_chain(F, samples, burn_in, seed)
    vals = log_chordal_derivative_batch(F, chain)
    finite = np.isfinite(vals)
    excluded = int((~finite).sum())
    vals = vals[finite]
    if vals.size == 0:
        raise ValueError("no finite log f# samples")
    mean = float(np.mean(vals))
    if vals.size >= 100:
        nb = 50
        size = vals.size // nb
        bm = vals[: nb * size].reshape(nb, size).mean(axis=1)
        se = float(np.std(bm, ddof=1) / math.sqrt(nb))
    elif vals.size >= 2:
        se = float(np.std(vals, ddof=1) / math.sqrt(vals.size))
    else:
        se = float("inf")
    return LyapunovEstimate(
        mode=MODE_MONTE_CARLO,
        n=0,
        value=mean,
        excluded_count=excluded,
        sample_count=int(vals.size),
        std_error=se,
    )


def multiplier_formula_residual(
    F: HomogeneousLift,
    z: ProjectivePoint,
    green_tol: float = 1e-8,
    evaluator: GreenEvaluator = None,
    reference: LyapunovEstimate = None,
) -> float:
    """|log f#(z) - (L + sum_c m_c Phi(z, c) + 2 g(f(z)) - 2 g(z))|.

    Raises CriticalPointInput when z matches a critical point within the
    matching tolerance (both sides are -inf there).
    """
    G = evaluator or GreenEvaluator(F, tol=green_tol)
    lift = G.lift
    with working_precision(lift.prec):
        cs = critical_structure(lift)
        match_tol = mpf(2) ** (-(lift.prec // 4))
        for c, _ in cs.points:
            if chordal_distance(z, c) <= match_tol:
                raise CriticalPointInput("evaluation point matches the critical point %s" % (c,))
        ref = reference or lyapunov_green_critical(lift, green_tol, evaluator=G)
        lhs = mpmath.log(chordal_derivative(lift, z))
        rhs = mpf(ref.value)
        for c, mult in cs.points:
            rhs += mult * G.potential_kernel(z, c)
        fz = eval_map(lift, z)
        rhs += 2 * G.green(fz, green_tol) - 2 * G.green(z, green_tol)
        return float(abs(lhs - rhs))


@dataclass(frozen=True)
class RateRow:
    n: int
    mode: str
    estimate: float
    error: float = None
    error_ndinv: float = None
    error_dhalf: float = None


@dataclass(frozen=True)
class RateReport:
    rows: tuple
    reference_value: float
    reference_mode: str
    full_rate_bounded: object = None   # None when not assessable
    exact_rate_bounded: object = None

    def rows_for(self, mode):
        return [r for r in self.rows if r.mode == mode]


def _boundedness_flag(values):
    """max <= 4 x median over the n >= 3 tail; None when too little data."""
    if len(values) < 2:
        return None
    med = statistics.median(values)
    if med == 0:
        return all(v == 0 for v in values)
    return max(values) <= 4 * med


def rate_table(
    F: HomogeneousLift,
    n_max: int,
    reference: LyapunovEstimate = None,
    cache: PeriodicCache = None,
    modes=(MODE_FULL, MODE_EXACT),
) -> RateReport:
    """Estimates for 1 <= n <= n_max with error columns against a reference.

    Reference hierarchy: caller-supplied, else the Green/critical value.  The
    boundedness flags compare max against 4x median of error * d^n / n (full
    mode) and error * d^(n/2) (exact mode) over n >= 3.
    """
    cache = cache or PeriodicCache(F)
    if reference is None and n_max >= 1:
        reference = lyapunov_green_critical(F)
    rows = []
    for n in range(1, n_max + 1):
        for mode in modes:
            est = estimator(F, n, mode, cache)
            err = err_nd = err_dh = None
            if reference is not None:
                err = abs(est.value - reference.value)
                err_nd = err * F.d ** n / n
                err_dh = err * F.d ** (n / 2.0)
            rows.append(
                RateRow(n=n, mode=mode, estimate=est.value, error=err,
                        error_ndinv=err_nd, error_dhalf=err_dh)
            )
    full_flag = exact_flag = None
    if reference is not None:
        full_vals = [r.error_ndinv for r in rows if r.mode == MODE_FULL and r.n >= 3]
        exact_vals = [r.error_dhalf for r in rows if r.mode == MODE_EXACT and r.n >= 3]
        full_flag = _boundedness_flag(full_vals) if full_vals else None
        exact_flag = _boundedness_flag(exact_vals) if exact_vals else None
    return RateReport(
        rows=tuple(rows),
        reference_value=None if reference is None else reference.value,
        reference_mode=None if reference is None else reference.mode,
        full_rate_bounded=full_flag,
        exact_rate_bounded=exact_flag,
    )
