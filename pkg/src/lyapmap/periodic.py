"""Fixed points of iterates: solving, multipliers, classification, exact periods.

The fixed points of f^n are the projective roots of the binary form
z1 F0^n - z0 F1^n of degree d^n + 1.  Expanded monomial coefficients of
iterates are exponentially ill-conditioned, so the solver never evaluates
them: the form's value and derivative at a point are obtained by iterating
the lift n times while accumulating the 2x2 Jacobian product, with per-step
renormalization tracked in log scales.  A vectorized double-precision
Aberth-Ehrlich phase (seeded from a depth-n backward-iteration tree) locates
the roots; an mpmath Newton polish then delivers them at working precision
together with their multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import mpmath
import numpy as np
from mpmath import mpc, mpf

from .errors import AmbiguousMatch, InternalInconsistency, IterationOverflow, RootFindingDivergence
from .numerics import INFINITY, ProjectivePoint, chordal_distance, sphere_embedding, working_precision
from .rmap import (
    MAX_FORM_COEFFS,
    HomogeneousLift,
    critical_structure,
    dz0_coeffs,
    dz1_coeffs,
    eval_form,
    eval_map,
    iterate_lift,
)

SUPERATTRACTING = "superattracting"
ATTRACTING = "attracting"
INDIFFERENT = "indifferent"
REPELLING = "repelling"

# |log|multiplier|| at or below this is indifferent; repelling needs more.
INDIFFERENT_LOG_BAND = 2.0 ** -20


@dataclass(frozen=True)
class PeriodicPointRecord:
    location: ProjectivePoint
    n: int
    multiplier: mpc
    multiplicity: int
    classification: str
    exact_period: object = None  # None until exact_period_partition runs

    def sort_key(self):
        if self.location.is_infinity:
            return (1, 0.0, 0.0)
        z = self.location.to_complex()
        return (0, z.real, z.imag)


@dataclass(frozen=True)
class FixedPointForm:
    """Expanded coefficients of z1 F0^n - z0 F1^n (ascending z0 powers)."""

    n: int
    degree: int
    coeffs: tuple
    log_scale: mpf


@dataclass(frozen=True)
class SolvePolicy:
    max_form_coeffs: int = MAX_FORM_COEFFS
    aberth_max_sweeps: int = 240
    newton_max_iter: int = 60


def proper_divisors(n: int):
    return [m for m in range(1, n) if n % m == 0]


def fixed_point_form(F: HomogeneousLift, n: int, max_form_coeffs: int = MAX_FORM_COEFFS) -> FixedPointForm:
    """The degree d^n + 1 binary form whose projective roots are Fix(f^n)."""
    Fn = iterate_lift(F, n, max_form_coeffs)
    D = F.d ** n
    c0, c1 = Fn.coeffs0, Fn.coeffs1
    coeffs = tuple(
        (c0[k] if k <= D else mpc(0)) - (c1[k - 1] if k >= 1 else mpc(0))
        for k in range(D + 2)
    )
    return FixedPointForm(n=n, degree=D + 1, coeffs=coeffs, log_scale=Fn.log_scale)


def classify(multiplier, *, indifferent_log_band: float = INDIFFERENT_LOG_BAND) -> str:
    """Classification by |multiplier|; superattracting only for an exact zero."""
    if multiplier == 0:
        return SUPERATTRACTING
    la = mpmath.log(abs(multiplier))
    if abs(la) <= indifferent_log_band:
        return INDIFFERENT
    return REPELLING if la > 0 else ATTRACTING


# ---------------------------------------------------------------------------
# vectorized double-precision kernels
# ---------------------------------------------------------------------------


def _form_np(coeffs, d, x, y):
    r = np.full_like(x, coeffs[d])
    yk = np.ones_like(x)
    for k in range(d - 1, -1, -1):
        yk = yk * y
        r = r * x + coeffs[k] * yk
    return r


def _orbit_np(c0, c1, d, z, n):
    """Orbit of (z, 1) with Jacobian products; true quantities carry exp(lv), exp(lj)."""
    x = np.asarray(z, dtype=np.complex128).copy()
    m = np.maximum(np.abs(x), 1.0)
    y = np.ones_like(x) / m
    x = x / m
    lv = np.log(m)
    lj = np.zeros(x.shape, dtype=np.float64)
    J00 = np.ones_like(x)
    J01 = np.zeros_like(x)
    J10 = np.zeros_like(x)
    J11 = np.ones_like(x)
    e00 = np.array([k * c0[k] for k in range(1, d + 1)])
    e01 = np.array([(d - k) * c0[k] for k in range(d)])
    e10 = np.array([k * c1[k] for k in range(1, d + 1)])
    e11 = np.array([(d - k) * c1[k] for k in range(d)])
    for _ in range(n):
        a = _form_np(e00, d - 1, x, y)
        b = _form_np(e01, d - 1, x, y)
        c = _form_np(e10, d - 1, x, y)
        e = _form_np(e11, d - 1, x, y)
        lj += (d - 1) * lv
        J00, J01, J10, J11 = (
            a * J00 + b * J10,
            a * J01 + b * J11,
            c * J00 + e * J10,
            c * J01 + e * J11,
        )
        x, y = _form_np(c0, d, x, y), _form_np(c1, d, x, y)
        s = np.maximum(np.abs(x), np.abs(y))
        s = np.where(s == 0.0, 1.0, s)
        x, y = x / s, y / s
        lv = d * lv + np.log(s)
        sj = np.maximum(np.maximum(np.abs(J00), np.abs(J01)), np.maximum(np.abs(J10), np.abs(J11)))
        sj = np.where(sj == 0.0, 1.0, sj)
        J00, J01, J10, J11 = J00 / sj, J01 / sj, J10 / sj, J11 / sj
        lj += np.log(sj)
    return x, y, J00, J01, J10, J11, lv, lj


def _preimages_np(c0, c1, d, w):
    """d affine preimage candidates per target (batched companion eigenvalues).

    Degree-deficient targets get a tiny injected leading term, which turns the
    missing preimages into large finite stand-ins; callers use the output as
    initial guesses only.
    """
    w = np.asarray(w, dtype=np.complex128)
    big = ~np.isfinite(w) | (np.abs(w) > 1e10)
    wc = np.where(big, 0.0, w)
    coeffs = c0[None, :] - wc[:, None] * c1[None, :]
    if big.any():
        coeffs[big] = -c1[None, :]
    scale = np.max(np.abs(coeffs), axis=1, keepdims=True)
    scale = np.where(scale == 0.0, 1.0, scale)
    coeffs = coeffs / scale
    lead = coeffs[:, d].copy()
    weak = np.abs(lead) < 1e-12
    lead[weak] = 1e-12
    comp = np.zeros((w.size, d, d), dtype=np.complex128)
    for i in range(d - 1):
        comp[:, i + 1, i] = 1.0
    for i in range(d):
        comp[:, i, d - 1] = -coeffs[:, i] / lead
    roots = np.linalg.eigvals(comp)
    mags = np.abs(roots)
    clip = (mags > 1e8) | ~np.isfinite(roots)
    if clip.any():
        roots = np.where(clip, 1e8 * np.exp(1j * np.angle(np.where(clip, roots, 1.0))), roots)
        roots = np.where(np.isfinite(roots), roots, 1e8 + 0j)
    return roots


def _dedupe_jitter(z):
    _, inverse, counts = np.unique(z, return_inverse=True, return_counts=True)
    if (counts > 1).any():
        rank = np.zeros(z.size, dtype=np.int64)
        seen = {}
        for i, v in enumerate(inverse):
            k = seen.get(v, 0)
            rank[i] = k
            seen[v] = k + 1
        z = z + rank * (1e-7 + 0.7e-7j)
    return z


def _cauchy_radius(F: HomogeneousLift) -> float:
    """1 + max coefficient ratio of the base fixed-point form, in doubles."""
    c0, c1 = F.as_doubles()
    d = F.d
    form = np.zeros(d + 2, dtype=np.complex128)
    form[: d + 1] += c0
    form[1:] -= c1
    mags = np.abs(form)
    top = d + 1
    while top > 0 and mags[top] <= 1e-13 * mags.max():
        top -= 1
    return float(1.0 + mags[:top].max() / mags[top]) if top > 0 else 2.0


def _tree_guesses(F: HomogeneousLift, n: int, count: int):
    """Depth-n backward-iteration tree: shadows of the periodic points."""
    c0, c1 = F.as_doubles()
    pts = np.array([0.4 + 0.3j], dtype=np.complex128)
    for _ in range(n):
        pts = _preimages_np(c0, c1, F.d, pts).ravel()
        bad = ~np.isfinite(pts)
        if bad.any():
            pts[bad] = 0.37 - 0.21j + 1e-3 * np.arange(int(bad.sum()))
    if pts.size < count:
        r = _cauchy_radius(F)
        k = np.arange(count - pts.size)
        extra = r * np.exp(2j * np.pi * (k + 0.25) / (count - pts.size))
        pts = np.concatenate([pts, extra.astype(np.complex128)])
    return _dedupe_jitter(pts[:count])


def _circle_guesses(F: HomogeneousLift, count: int):
    r = _cauchy_radius(F)
    k = np.arange(count)
    return r * np.exp(2j * np.pi * (k + 0.25) / count) * (1.0 + 1e-4 * np.cos(3.7 * k))


def _aberth(c0, c1, d, n, guesses, *, step_tol=5e-14, max_sweeps=240):
    """Aberth-Ehrlich sweeps with orbit-based Newton ratios; returns (roots, all_converged)."""
    z = np.array(guesses, dtype=np.complex128)
    N = z.size
    converged = np.zeros(N, dtype=bool)
    for _ in range(max_sweeps):
        idx = np.nonzero(~converged)[0]
        if idx.size == 0:
            break
        x, y, J00, _, J10, _, lv, lj = _orbit_np(c0, c1, d, z[idx], n)
        E = np.exp(np.clip(lj - lv, -745.0, 709.0))
        num = x - z[idx] * y
        den = E * (J00 - z[idx] * J10) - y
        bad = (den == 0) | ~np.isfinite(den) | ~np.isfinite(num)
        w = np.where(bad, 0.1 + 0.1j, num / np.where(bad, 1.0, den))
        s_sum = np.zeros(idx.size, dtype=np.complex128)
        chunk = max(1, int(4e6 / max(N, 1)))
        for a0 in range(0, idx.size, chunk):
            a1 = min(a0 + chunk, idx.size)
            diff = z[idx[a0:a1], None] - z[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = np.where(diff == 0, 0.0 + 0.0j, 1.0 / diff)
            s_sum[a0:a1] = inv.sum(axis=1)
        denom = 1.0 - w * s_sum
        weak = np.abs(denom) < 1e-12
        delta = np.where(weak, w, w / np.where(weak, 1.0, denom))
        znew = z[idx] - delta
        step = np.abs(delta) / (1.0 + np.abs(znew) ** 2)
        z[idx] = znew
        converged[idx] = step < step_tol
    return z, bool(converged.all())


# ---------------------------------------------------------------------------
# mpmath orbit evaluation and polishing
# ---------------------------------------------------------------------------


import functools


@functools.lru_cache(maxsize=64)
def _deriv_coeffs(F: HomogeneousLift):
    d = F.d
    return (
        dz0_coeffs(F.coeffs0, d),
        dz1_coeffs(F.coeffs0, d),
        dz0_coeffs(F.coeffs1, d),
        dz1_coeffs(F.coeffs1, d),
    )


def _orbit_scalar(F: HomogeneousLift, p0, p1, n: int, col=None):
    """Raw orbit of the pair (p0, p1), optionally with one Jacobian column.

    mpf exponents are unbounded, so no renormalization is needed; every
    quantity derived from the output is a scale-cancelling ratio.  Returns
    (x, y, v0, v1) where (v0, v1) = D(F^n) e_col, or (None, None) when col
    is None.
    """
    d = F.d
    c0, c1 = F.coeffs0, F.coeffs1
    x, y = mpc(p0), mpc(p1)
    if x == 0 and y == 0:
        raise InternalInconsistency("zero pair fed to orbit evaluation")
    v0 = v1 = None
    if col is not None:
        e00, e01, e10, e11 = _deriv_coeffs(F)
        v0, v1 = (mpc(1), mpc(0)) if col == 0 else (mpc(0), mpc(1))
    for _ in range(n):
        if col is not None:
            a = eval_form(e00, d - 1, x, y)
            b = eval_form(e01, d - 1, x, y)
            c = eval_form(e10, d - 1, x, y)
            e = eval_form(e11, d - 1, x, y)
            v0, v1 = a * v0 + b * v1, c * v0 + e * v1
        x, y = eval_form(c0, d, x, y), eval_form(c1, d, x, y)
        if x == 0 and y == 0:
            raise InternalInconsistency("orbit collapsed to the zero pair")
    return x, y, v0, v1


def _fixed_point_residual(F: HomogeneousLift, z: ProjectivePoint, n: int) -> mpf:
    """Chordal distance between f^n(z) and z, evaluated orbit-wise."""
    p0, p1 = z.lift()
    x, y, _, _ = _orbit_scalar(F, p0, p1, n)
    wedge = abs(x * p1 - y * p0)
    return wedge / (mpmath.hypot(abs(x), abs(y)) * mpmath.hypot(abs(p0), abs(p1)))


def _polish_root(F: HomogeneousLift, z0: complex, n: int, max_iter: int = 60):
    """Newton-polish an affine fixed point of f^n at working precision.

    Returns (root, multiplier, residual, converged): the multiplier comes from
    the final orbit's Jacobian column and the residual is the chordal distance
    [f^n(z), z] at the last evaluation point.  Polishing runs in the w = 1/z
    chart when |z0| > 1 so points near infinity lose no accuracy.
    """
    prec = F.prec
    # One Newton step squares the error, so stopping once a step falls below
    # 2^-(prec/2 + 24) leaves the returned root accurate past prec bits.
    target = mpf(2) ** (-(prec // 2 + 24))
    z = mpc(complex(z0))
    use_w = abs(z) > 1
    if use_w:
        z = 1 / z
    lam = mpc(0)
    residual = mpf(1)
    mult_boost = 1
    converged = False
    last = None
    for _ in range(max_iter):
        if use_w:
            x, y, v0, v1 = _orbit_scalar(F, mpc(1), z, n, col=1)
            num = z * x - y
            den = x + z * v0 - v1
            lam = (v1 - z * v0) / x if x != 0 else mpc(0)
            residual = abs(num) / (mpmath.hypot(abs(x), abs(y)) * mpmath.hypot(1, abs(z)))
        else:
            x, y, v0, v1 = _orbit_scalar(F, z, mpc(1), n, col=0)
            num = x - z * y
            den = v0 - z * v1 - y
            lam = (v0 - z * v1) / y if y != 0 else mpc(0)
            residual = abs(num) / (mpmath.hypot(abs(x), abs(y)) * mpmath.hypot(abs(z), 1))
        if den == 0:
            break
        delta = mult_boost * num / den
        z = z - delta
        size = abs(delta) / (1 + abs(z) ** 2)
        if size < target:
            converged = True
            break
        # Multiple roots make plain Newton stall at ratio (m-1)/m; detect and boost.
        if last is not None and size > 0 and last > 0:
            ratio = size / last
            if 0.35 < ratio < 0.995 and mult_boost == 1:
                mult_boost = max(1, int(round(1.0 / (1.0 - ratio))))
        last = size
    root = (1 / z) if use_w else z
    return root, lam, residual, converged


def _infinity_analysis(F: HomogeneousLift, n: int):
    """(fixed?, multiplier, form multiplicity) of the point at infinity under f^n."""
    prec = F.prec
    x, y, v0, v1 = _orbit_scalar(F, mpc(1), mpc(0), n, col=1)
    if abs(y) > mpf(2) ** (-(prec // 2)) * max(abs(x), abs(y)):
        return False, None, 0
    lam = v1 / x
    if abs(lam - 1) > mpf(2) ** -20:
        return True, lam, 1
    # Parabolic at infinity: the form multiplicity needs the expanded top
    # coefficients, which are only trustworthy at moderate degree.
    D = F.d ** n
    if D + 1 > 2 ** 11 + 1:
        raise RootFindingDivergence(
            "parabolic fixed point at infinity beyond the coefficient range (n=%d)" % n
        )
    form = fixed_point_form(F, n)
    mags = [abs(c) for c in form.coeffs]
    thresh = mpf(2) ** (-(prec // 2)) * max(mags)
    mult = 0
    for k in range(D + 1, -1, -1):
        if mags[k] <= thresh:
            mult += 1
        else:
            break
    return True, lam, max(1, mult)


def _superattracting_pool(F: HomogeneousLift, n: int):
    """Sphere embeddings of the forward orbit (up to n steps) of every critical point."""
    pool = []
    for c, _ in critical_structure(F).points:
        z = c
        pool.append(z.sphere())
        for _ in range(n):
            z = eval_map(F, z)
            pool.append(z.sphere())
    return np.array(pool)


def solve_periodic(F: HomogeneousLift, n: int, policy: SolvePolicy = None):
    """All of Fix(f^n) as records counted with multiplicity (d^n + 1 in total)."""
    policy = policy or SolvePolicy()
    if n < 1:
        raise ValueError("n must be >= 1")
    D = F.d ** n
    if D + 1 > policy.max_form_coeffs:
        raise IterationOverflow("d^n + 1 = %d exceeds the root-count cap %d" % (D + 1, policy.max_form_coeffs))
    prec = F.prec
    with working_precision(prec + 48):
        inf_fixed, inf_lambda, inf_mult = _infinity_analysis(F, n)
        n_aff = D + 1 - inf_mult
        c0, c1 = F.as_doubles()
        residual_tol = mpf(2) ** (-(prec // 2))
        roots = []
        for attempt in range(2):
            guesses = _tree_guesses(F, n, n_aff) if attempt == 0 else _circle_guesses(F, n_aff)
            approx, _ = _aberth(c0, c1, F.d, n, guesses, max_sweeps=policy.aberth_max_sweeps)
            roots = []
            for z0 in approx:
                root, lam, residual, conv = _polish_root(F, complex(z0), n, policy.newton_max_iter)
                if not conv or residual > residual_tol:
                    roots = []
                    break
                roots.append((root, lam))
            if roots:
                break
        if len(roots) != n_aff:
            raise RootFindingDivergence(
                "located %d of %d affine fixed points of f^%d at %d bits"
                % (len(roots), n_aff, n, prec)
            )

        # Cluster identical limits into multiplicity groups.  Copies of a true
        # multiple root polish to within 2^-(prec-8) of each other, while
        # distinct periodic points stay orders of magnitude further apart, so
        # the grouping radius sits just above the double-embedding noise floor.
        from .rmap import _cluster_doubles

        cluster_radius = min(float(mpf(2) ** (-(prec // 4))), 5e-14)
        groups = _cluster_doubles([complex(r.real, r.imag) for r, _ in roots], cluster_radius)

        pool = _superattracting_pool(F, n)
        eps_sa = mpf(2) ** (-(prec // 4))
        match_tol = 2.0 * float(mpf(2) ** (-(prec // 4)))  # sphere embedding carries factor 2

        records = []
        for idx in groups:
            root, lam = roots[idx[0]]
            loc = ProjectivePoint.affine(root)
            mult = len(idx)
            if mult > 1:
                # Confirm a genuine multiple root rather than a guess collision.
                x, y, v0, v1 = _orbit_scalar(F, root, mpc(1), n, col=0)
                dform = abs(v0 - root * v1 - y)
                scale = abs(v0) + abs(root * v1) + abs(y)
                if scale > 0 and dform / scale > mpf(2) ** (-(prec // 8)):
                    raise RootFindingDivergence(
                        "root cluster of size %d at %s is not a multiple root" % (mult, loc)
                    )
            if abs(lam) < eps_sa:
                emb = np.array(loc.sphere())
                if np.min(np.sum((pool - emb) ** 2, axis=1)) <= match_tol ** 2:
                    lam = mpc(0)
            records.append(
                PeriodicPointRecord(
                    location=loc,
                    n=n,
                    multiplier=lam,
                    multiplicity=mult,
                    classification=classify(lam),
                )
            )
        if inf_mult > 0:
            lam = inf_lambda
            if abs(lam) < eps_sa:
                emb = np.array(INFINITY.sphere())
                if np.min(np.sum((pool - emb) ** 2, axis=1)) <= match_tol ** 2:
                    lam = mpc(0)
            records.append(
                PeriodicPointRecord(
                    location=INFINITY,
                    n=n,
                    multiplier=lam,
                    multiplicity=inf_mult,
                    classification=classify(lam),
                )
            )
        total = sum(r.multiplicity for r in records)
        if total != D + 1:
            raise InternalInconsistency(
                "fixed point multiplicities sum to %d, expected %d" % (total, D + 1)
            )
        records.sort(key=PeriodicPointRecord.sort_key)
        return records


def exact_period_partition(records_by_level, n: int, prec: int):
    """Flag which level-n records have exact period n.

    ``records_by_level`` must contain solved records for every proper divisor
    of n.  A record matches a lower-period point below the matching tolerance,
    is clean above the non-match tolerance, and raises AmbiguousMatch in the
    band between (precision escalation needed).
    """
    missing = [m for m in proper_divisors(n) if m not in records_by_level]
    if missing:
        raise KeyError("missing divisor levels %r for exact-period partition" % (missing,))
    level = records_by_level[n]
    if n == 1:
        return [replace(r, exact_period=True) for r in level]
    lower = []
    for m in proper_divisors(n):
        lower.extend(records_by_level[m])
    lower_emb = np.array([r.location.sphere() for r in lower])
    t_match = 2.0 * float(mpf(2) ** (-(prec // 4)))
    t_clear = 2.0 * float(mpf(2) ** (-(3 * prec // 16)))
    out = []
    for r in level:
        emb = np.array(r.location.sphere())
        dmin = math.sqrt(float(np.min(np.sum((lower_emb - emb) ** 2, axis=1))))
        if dmin <= t_match:
            out.append(replace(r, exact_period=False))
        elif dmin >= t_clear:
            out.append(replace(r, exact_period=True))
        else:
            raise AmbiguousMatch(
                "point %s at level %d sits %.3e from a lower-period point "
                "(match %.3e, clear %.3e): raise the precision"
                % (r.location, n, dmin, t_match, t_clear)
            )
    return out


class PeriodicCache:
    """Lazily solved and partitioned fixed-point levels for one map."""

    def __init__(self, F: HomogeneousLift, policy: SolvePolicy = None):
        self.F = F
        self.policy = policy or SolvePolicy()
        self._levels = {}
        self._partitioned = set()

    def records(self, n: int, partitioned: bool = False):
        if partitioned:
            for m in proper_divisors(n):
                self.records(m)
            if n not in self._levels:
                self._levels[n] = solve_periodic(self.F, n, self.policy)
            if n not in self._partitioned:
                self._levels[n] = exact_period_partition(self._levels, n, self.F.prec)
                self._partitioned.add(n)
        elif n not in self._levels:
            self._levels[n] = solve_periodic(self.F, n, self.policy)
        return self._levels[n]
