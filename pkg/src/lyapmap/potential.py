"""The escape apparatus: T_F, the dynamical Green function, the potential
kernel, the chordal derivative, and an equilibrium-measure sampler.

The Green function of the resultant-normalized lift is computed as the
telescoped series sum_k d^-(k+1) T_F(f^k z), truncated once the geometric
tail bound B d^-K / (d-1) drops below the requested tolerance, where B is a
grid-derived sup bound on |T_F|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from mpmath import mpc, mpf

from .errors import PreimageFailure
from .numerics import INFINITY, ProjectivePoint, chordal_distance, working_precision
from .rmap import HomogeneousLift, eval_form, dz0_coeffs, dz1_coeffs, normalize_lift, resultant


def _unit_lift(z: ProjectivePoint):
    p0, p1 = z.lift()
    nm = mpmath.hypot(abs(p0), abs(p1))
    return p0 / nm, p1 / nm


def _step(F: HomogeneousLift, p0, p1):
    """Apply the stored forms to a unit pair; returns (T_F with log_scale, new unit pair)."""
    q0 = eval_form(F.coeffs0, F.d, p0, p1)
    q1 = eval_form(F.coeffs1, F.d, p0, p1)
    nm = mpmath.hypot(abs(q0), abs(q1))
    t = mpmath.log(nm) + F.log_scale
    return t, q0 / nm, q1 / nm


def t_function(F: HomogeneousLift, z: ProjectivePoint) -> mpf:
    """T_F(z) = log||F(p)|| - d log||p|| for any lift p of z (true lift scale)."""
    with working_precision(F.prec):
        p0, p1 = _unit_lift(z)
        t, _, _ = _step(F, p0, p1)
        return t


def t_function_iterated(F: HomogeneousLift, n: int, z: ProjectivePoint) -> mpf:
    """T_{F^n}(z), accumulated along the orbit (no expanded coefficients)."""
    with working_precision(F.prec):
        p0, p1 = _unit_lift(z)
        total = mpf(0)
        for k in range(n):
            t, p0, p1 = _step(F, p0, p1)
            total += mpf(F.d) ** (n - 1 - k) * t
        return total


def _sphere_grid_points(count: int):
    """A Fibonacci-spiral grid on the sphere, as projective points."""
    golden = (1 + 5 ** 0.5) / 2
    pts = []
    for i in range(count):
        u = 1.0 - 2.0 * (i + 0.5) / count
        theta = 2.0 * math.pi * i / golden
        r = math.sqrt(max(0.0, 1.0 - u * u))
        x, y = r * math.cos(theta), r * math.sin(theta)
        if 1.0 - u < 1e-12:
            pts.append(INFINITY)
        else:
            pts.append(ProjectivePoint.affine(complex(x / (1.0 - u), y / (1.0 - u))))
    return pts


class GreenEvaluator:
    """Green-function evaluations for the resultant-normalized lift of f."""

    GRID_POINTS = 256

    def __init__(self, F: HomogeneousLift, tol: float = 1e-12):
        if tol <= 0:
            raise ValueError("tolerance must be positive")
        self.lift = normalize_lift(F)
        self.tol = tol
        with working_precision(self.lift.prec):
            res = abs(resultant(self.lift))
            if abs(res - 1) > mpf(2) ** (-(self.lift.prec - 10)):
                raise ValueError("normalization failed: |Res| = %s" % res)
            # Sup bound on |T_F| from a chordal grid, doubled for safety margin.
            grid_max = mpf(0)
            for p in _sphere_grid_points(self.GRID_POINTS):
                grid_max = max(grid_max, abs(t_function(self.lift, p)))
            self.t_bound = 2 * grid_max + mpf(10) ** -30

    @property
    def d(self):
        return self.lift.d

    def _depth(self, tol) -> int:
        d = self.lift.d
        k = 1
        bound = self.t_bound / (d - 1)
        while bound > tol * mpf(d) ** k and k < 20000:
            k += 1
        return k

    def green(self, z: ProjectivePoint, tol: float = None) -> mpf:
        """g_f(z) to within tol: truncated series of d^-(k+1) T_F(f^k z)."""
        tol = self.tol if tol is None else tol
        F = self.lift
        with working_precision(F.prec):
            depth = self._depth(mpf(tol))
            p0, p1 = _unit_lift(z)
            total = mpf(0)
            w = mpf(1)
            for _ in range(depth):
                w /= F.d
                t, p0, p1 = _step(F, p0, p1)
                total += w * t
            return total

    def functional_equation_residual(self, z: ProjectivePoint) -> mpf:
        """g(f(z)) - d g(z) + T_F(z); bounded by 3x the evaluation tolerance."""
        from .rmap import eval_map

        F = self.lift
        with working_precision(F.prec):
            fz = eval_map(F, z)
            return self.green(fz) - F.d * self.green(z) + t_function(F, z)

    def potential_kernel(self, z: ProjectivePoint, w: ProjectivePoint) -> mpf:
        """Phi_g(z, w) = log[z, w] - g(z) - g(w); -inf exactly on the diagonal."""
        with working_precision(self.lift.prec):
            cd = chordal_distance(z, w)
            if cd == 0:
                return mpf("-inf")
            return mpmath.log(cd) - self.green(z) - self.green(w)


def chordal_derivative(F: HomogeneousLift, z: ProjectivePoint) -> mpf:
    """f#(z) = (1/d) ||p||^2 / ||F(p)||^2 |det DF(p)|, representative-free."""
    with working_precision(F.prec):
        p0, p1 = _unit_lift(z)
        d = F.d
        a = eval_form(dz0_coeffs(F.coeffs0, d), d - 1, p0, p1)
        b = eval_form(dz1_coeffs(F.coeffs0, d), d - 1, p0, p1)
        c = eval_form(dz0_coeffs(F.coeffs1, d), d - 1, p0, p1)
        e = eval_form(dz1_coeffs(F.coeffs1, d), d - 1, p0, p1)
        det = a * e - b * c
        q0 = eval_form(F.coeffs0, d, p0, p1)
        q1 = eval_form(F.coeffs1, d, p0, p1)
        ns = abs(q0) ** 2 + abs(q1) ** 2
        return abs(det) / (d * ns)


def log_chordal_derivative_batch(F: HomogeneousLift, zs: np.ndarray) -> np.ndarray:
    """log f# over an array of double samples (np.inf marks the infinity chart)."""
    c0, c1 = F.as_doubles()
    d = F.d
    inf_mask = ~np.isfinite(zs)
    z = np.where(inf_mask, 0.0, zs)
    m = np.maximum(np.abs(z), 1.0)
    p0 = np.where(inf_mask, 1.0, z / m)
    p1 = np.where(inf_mask, 0.0, 1.0 / m)

    def form(coeffs, deg):
        r = np.full_like(p0, coeffs[deg])
        yk = np.ones_like(p0)
        for k in range(deg - 1, -1, -1):
            yk = yk * p1
            r = r * p0 + coeffs[k] * yk
        return r

    e00 = np.array([k * c0[k] for k in range(1, d + 1)])
    e01 = np.array([(d - k) * c0[k] for k in range(d)])
    e10 = np.array([k * c1[k] for k in range(1, d + 1)])
    e11 = np.array([(d - k) * c1[k] for k in range(d)])
    save0, save1 = p0, p1

    def dform(coeffs):
        r = np.full_like(save0, coeffs[d - 1])
        yk = np.ones_like(save0)
        for k in range(d - 2, -1, -1):
            yk = yk * save1
            r = r * save0 + coeffs[k] * yk
        return r

    det = dform(e00) * dform(e11) - dform(e01) * dform(e10)
    q0 = form(c0, d)
    q1 = form(c1, d)
    np2 = np.abs(p0) ** 2 + np.abs(p1) ** 2
    ns2 = np.abs(q0) ** 2 + np.abs(q1) ** 2
    with np.errstate(divide="ignore"):
        return np.log(np.abs(det)) + np.log(np2) - np.log(ns2) - math.log(d)


@dataclass(frozen=True)
class EquilibriumSample:
    point: ProjectivePoint
    chain_index: int
    seed: int


def _preimage_candidates(c0, c1, d, w):
    """The d preimages of a single double-precision target (None encodes infinity)."""
    if w is None:
        coeffs = -c1
    else:
        coeffs = c0 - w * c1
    mags = np.abs(coeffs)
    scale = mags.max()
    if scale == 0.0:
        raise PreimageFailure("identically zero preimage polynomial")
    deg = d
    while deg > 0 and mags[deg] <= 1e-13 * scale:
        deg -= 1
    cands = [None] * (d - deg)  # degree deficiency: preimages at infinity
    if deg == 0:
        if not cands:
            raise PreimageFailure("no preimages found for target %r" % (w,))
        return cands
    if deg == 2:
        a, b, c = coeffs[2], coeffs[1], coeffs[0]
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(disc + 0j)
        if (np.conj(b) * sq).real < 0:
            sq = -sq
        qq = -0.5 * (b + sq)
        r1 = qq / a
        r2 = c / qq if qq != 0 else r1
        cands.extend([complex(r1), complex(r2)])
    elif deg == 1:
        cands.append(complex(-coeffs[0] / coeffs[1]))
    else:
        roots = np.roots(coeffs[: deg + 1][::-1])
        cands.extend(complex(r) for r in roots)
    if any(c is not None and not (math.isfinite(c.real) and math.isfinite(c.imag)) for c in cands):
        raise PreimageFailure("preimage solve produced non-finite roots for %r" % (w,))
    return cands


def _backward_chain(F: HomogeneousLift, count: int, burn_in: int, seed: int):
    """A backward-iteration chain as doubles (np.inf marks infinity)."""
    c0, c1 = F.as_doubles()
    d = F.d
    rng = np.random.default_rng(seed)
    z = 1.0 + 0.0j
    # An exceptional start has itself as its only preimage; perturb away.
    for _ in range(8):
        cands = _preimage_candidates(c0, c1, d, z)
        if all(c is not None and abs(c - z) < 1e-9 for c in cands):
            z = z + (0.379 - 0.278j)
        else:
            break
    else:
        raise PreimageFailure("could not find a non-exceptional start point")
    total = burn_in + count
    out = np.empty(total, dtype=np.complex128)
    cur = z
    for i in range(total):
        cands = _preimage_candidates(c0, c1, d, cur)
        pick = cands[int(rng.integers(0, len(cands)))]
        cur = pick
        out[i] = np.inf if pick is None else pick
        if pick is None:
            cur = None
    return out[burn_in:]


def sample_equilibrium(F: HomogeneousLift, count: int, burn_in: int = 100, seed: int = 0):
    """Backward-iteration samples of the equilibrium measure.

    Deterministic for a fixed seed; one preimage chosen uniformly (with
    multiplicity) per step; the first ``burn_in`` steps are discarded.
    """
    chain = _backward_chain(F, count, burn_in, seed)
    samples = []
    for i, z in enumerate(chain):
        pt = INFINITY if not np.isfinite(z) else ProjectivePoint.affine(complex(z))
        samples.append(EquilibriumSample(point=pt, chain_index=i, seed=seed))
    return samples
