"""Homogeneous lifts of rational maps.

A degree-d rational map f = P/Q is represented by the pair of binary forms
F = (F0, F1) with F0(z0, z1) = z1^d P(z0/z1), F1 = z1^d Q(z0/z1).  Coefficients
are stored ascending in the z0-power: coeffs[k] multiplies z0^k z1^(d-k).

Iterates are renormalized every composition step (max coefficient magnitude 1)
with the extracted factor accumulated in ``log_scale``: the true lift equals
exp(log_scale) times the stored coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mpc, mpf

from .errors import DegenerateMap, IterationOverflow
from .numerics import (
    DEFAULT_PRECISION_BITS,
    INFINITY,
    ProjectivePoint,
    to_scalar,
    working_precision,
)

MAX_FORM_COEFFS = 2 ** 15 + 1


@dataclass(frozen=True)
class HomogeneousLift:
    d: int
    coeffs0: tuple
    coeffs1: tuple
    log_scale: mpf
    prec: int

    def as_doubles(self):
        """Coefficient arrays cast to complex128 (for the vectorized kernels)."""
        c0 = np.array([complex(c.real, c.imag) for c in self.coeffs0], dtype=np.complex128)
        c1 = np.array([complex(c.real, c.imag) for c in self.coeffs1], dtype=np.complex128)
        return c0, c1

    def __repr__(self):
        return "HomogeneousLift(d=%d, prec=%d)" % (self.d, self.prec)


def _trim(coeffs):
    """Drop trailing exact-zero high-order coefficients."""
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def make_lift(numerator_coeffs, denominator_coeffs, precision: int = DEFAULT_PRECISION_BITS) -> HomogeneousLift:
    """Homogenize f = P/Q (coefficients ascending in z) into a non-degenerate lift.

    Raises DegenerateMap when the resultant is numerically zero, which signals
    that P and Q share a root.
    """
    with working_precision(precision):
        p = _trim([to_scalar(c) for c in numerator_coeffs])
        q = _trim([to_scalar(c) for c in denominator_coeffs])
        if not p and not q:
            raise ValueError("numerator and denominator cannot both vanish identically")
        if not q:
            raise DegenerateMap("denominator vanishes identically")
        if not p:
            raise ValueError("numerator vanishes identically (constant map)")
        d = max(len(p), len(q)) - 1
        if d < 2:
            raise ValueError("degree must be >= 2, got %d" % d)
        c0 = tuple(p[k] if k < len(p) else mpc(0) for k in range(d + 1))
        c1 = tuple(q[k] if k < len(q) else mpc(0) for k in range(d + 1))
        lift = HomogeneousLift(d=d, coeffs0=c0, coeffs1=c1, log_scale=mpf(0), prec=precision)
        scale = max(max(abs(c) for c in c0), max(abs(c) for c in c1))
        res = resultant(lift)
        if abs(res) < mpf(2) ** (-precision // 2) * scale ** (2 * d):
            raise DegenerateMap("resultant is numerically zero: numerator and denominator share a root")
        return lift


def sylvester_matrix(F: HomogeneousLift):
    """The 2d x 2d Sylvester matrix of the two coordinate forms."""
    d = F.d
    a = list(reversed(F.coeffs0))  # descending in z0
    b = list(reversed(F.coeffs1))
    m = mpmath.matrix(2 * d, 2 * d)
    for i in range(d):
        for j in range(d + 1):
            m[i, i + j] = a[j]
            m[d + i, i + j] = b[j]
    return m


def resultant(F: HomogeneousLift) -> mpc:
    """Homogeneous resultant of the stored coefficients (partial-pivot LU).

    The resultant of the true lift is exp(2d * log_scale) times this value.
    """
    with working_precision(F.prec):
        return mpmath.det(sylvester_matrix(F))


def normalize_lift(F: HomogeneousLift) -> HomogeneousLift:
    """Rescale so the resultant has absolute value 1 (and log_scale saturates to 0)."""
    with working_precision(F.prec):
        log_res = mpmath.log(abs(resultant(F)))
        # |Res(cF)| = |c|^(2d) |Res F|; the stored-coefficient target absorbs log_scale.
        c = mpmath.exp(-log_res / (2 * F.d))
        c0 = tuple(x * c for x in F.coeffs0)
        c1 = tuple(x * c for x in F.coeffs1)
        return HomogeneousLift(d=F.d, coeffs0=c0, coeffs1=c1, log_scale=mpf(0), prec=F.prec)


def eval_form(coeffs, d: int, x, y):
    """Evaluate the binary form sum_k coeffs[k] x^k y^(d-k)."""
    r = coeffs[d]
    yk = 1
    for k in range(d - 1, -1, -1):
        yk = yk * y
        r = r * x + coeffs[k] * yk
    return r


def dz0_coeffs(coeffs, d):
    """Coefficients of the z0-partial, a degree d-1 form."""
    return tuple(k * coeffs[k] for k in range(1, d + 1))


def dz1_coeffs(coeffs, d):
    """Coefficients of the z1-partial, a degree d-1 form."""
    return tuple((d - k) * coeffs[k] for k in range(d))


def _form_mul(a, b):
    out = [mpc(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _compose_form(coeffs, d, g0, g1):
    """coeffs o (g0, g1): substitute the degree-e pair into a degree-d form."""
    # Powers g0^k and g1^(d-k), combined term by term.
    e = len(g0) - 1
    pow0 = [[mpc(1)]]
    pow1 = [[mpc(1)]]
    for _ in range(d):
        pow0.append(_form_mul(pow0[-1], g0))
        pow1.append(_form_mul(pow1[-1], g1))
    out = [mpc(0)] * (d * e + 1)
    for k in range(d + 1):
        if coeffs[k] == 0:
            continue
        term = _form_mul(pow0[k], pow1[d - k])
        for i, t in enumerate(term):
            out[i] += coeffs[k] * t
    return out


def iterate_lift(F: HomogeneousLift, n: int, max_form_coeffs: int = MAX_FORM_COEFFS) -> HomogeneousLift:
    """The lift of f^n, renormalized per composition step.

    Raises IterationOverflow when d^n + 1 exceeds ``max_form_coeffs``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if F.d ** n + 1 > max_form_coeffs:
        raise IterationOverflow("d^n + 1 = %d exceeds the cap %d" % (F.d ** n + 1, max_form_coeffs))
    with working_precision(F.prec):
        g0 = list(F.coeffs0)
        g1 = list(F.coeffs1)
        log_scale = F.log_scale
        for _ in range(n - 1):
            # F o G: true scale composes as  a + d*b  before renormalization.
            h0 = _compose_form(F.coeffs0, F.d, g0, g1)
            h1 = _compose_form(F.coeffs1, F.d, g0, g1)
            log_scale = F.log_scale + F.d * log_scale
            s = max(max(abs(c) for c in h0), max(abs(c) for c in h1))
            g0 = [c / s for c in h0]
            g1 = [c / s for c in h1]
            log_scale = log_scale + mpmath.log(s)
        # A single renormalization for n == 1 keeps the contract uniform.
        if n == 1:
            s = max(max(abs(c) for c in g0), max(abs(c) for c in g1))
            if s != 1:
                g0 = [c / s for c in g0]
                g1 = [c / s for c in g1]
                log_scale = log_scale + mpmath.log(s)
        return HomogeneousLift(d=F.d ** n, coeffs0=tuple(g0), coeffs1=tuple(g1),
                               log_scale=log_scale, prec=F.prec)


def eval_map(F: HomogeneousLift, z: ProjectivePoint) -> ProjectivePoint:
    """Apply f to a chart-aware point."""
    with working_precision(F.prec):
        p0, p1 = z.lift()
        m = max(abs(p0), abs(p1))
        p0, p1 = p0 / m, p1 / m
        q0 = eval_form(F.coeffs0, F.d, p0, p1)
        q1 = eval_form(F.coeffs1, F.d, p0, p1)
        if q1 == 0:
            return INFINITY
        return ProjectivePoint.affine(q0 / q1)


def derivative_at(F: HomogeneousLift, z: ProjectivePoint) -> mpc:
    """Chart-aware derivative of f at z.

    Charts are the affine coordinate away from infinity and w = 1/z at
    infinity, chosen independently for input and image, so the chain rule
    composes along arbitrary orbits and the value at a fixed point is the
    multiplier.
    """
    with working_precision(F.prec):
        if z.is_infinity:
            p0, p1 = mpc(1), mpc(0)
            col = 1
            m = mpf(1)
        else:
            m = max(mpf(1), abs(z.value))
            p0, p1 = z.value / m, mpc(1) / m
            col = 0
        d = F.d
        d00 = eval_form(dz0_coeffs(F.coeffs0, d), d - 1, p0, p1)
        d01 = eval_form(dz1_coeffs(F.coeffs0, d), d - 1, p0, p1)
        d10 = eval_form(dz0_coeffs(F.coeffs1, d), d - 1, p0, p1)
        d11 = eval_form(dz1_coeffs(F.coeffs1, d), d - 1, p0, p1)
        q0 = eval_form(F.coeffs0, d, p0, p1)
        q1 = eval_form(F.coeffs1, d, p0, p1)
        dq0 = d00 if col == 0 else d01
        dq1 = d10 if col == 0 else d11
        # The chart-derivative quotient is homogeneous of degree -1 in the
        # representative, hence the 1/m correction.  The image chart matches
        # eval_map: affine exactly when F1 does not vanish.
        if q1 != 0:
            val = (dq0 * q1 - q0 * dq1) / (q1 * q1)
        else:
            val = (dq1 * q0 - q1 * dq0) / (q0 * q0)
        return val / m


@dataclass(frozen=True)
class CriticalStructure:
    """Critical points c_j with multiplicities and the Jacobian scale.

    det DF = kappa * prod_j ((.) ^ C_j)^(m_j) with unit-norm representatives
    C_j, so sum_j m_j = 2d - 2 and log|kappa| collects the norm data.
    """

    kappa_log_abs: mpf
    points: tuple  # of (ProjectivePoint, multiplicity)

    @property
    def total_multiplicity(self):
        return sum(m for _, m in self.points)


def det_jacobian_coeffs(F: HomogeneousLift):
    """Coefficients (ascending in z0) of det DF, a binary form of degree 2d-2."""
    d = F.d
    a = _form_mul(dz0_coeffs(F.coeffs0, d), dz1_coeffs(F.coeffs1, d))
    b = _form_mul(dz1_coeffs(F.coeffs0, d), dz0_coeffs(F.coeffs1, d))
    return [x - y for x, y in zip(a, b)]


def _poly_eval(coeffs, x):
    r = mpc(0)
    for c in reversed(coeffs):
        r = r * x + c
    return r


def _poly_deriv(coeffs):
    return [k * coeffs[k] for k in range(1, len(coeffs))]


def _cluster_doubles(points, radius):
    """Union-find clustering of double-precision sphere embeddings."""
    from .numerics import sphere_embedding

    pts = np.array([sphere_embedding(p) for p in points])
    n = len(points)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        d2 = np.sum((pts[i + 1:] - pts[i]) ** 2, axis=1)
        for j in np.nonzero(d2 <= (2.0 * radius) ** 2)[0]:
            ri, rj = find(i), find(i + 1 + int(j))
            if ri != rj:
                parent[rj] = ri
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def critical_structure(F: HomogeneousLift) -> CriticalStructure:
    """Factor det DF into kappa and 2d-2 projective roots with multiplicity."""
    with working_precision(F.prec + 32):
        d = F.d
        det = det_jacobian_coeffs(F)
        scale = max(abs(c) for c in det)
        thresh = mpf(2) ** (-F.prec // 2) * scale
        deg = len(det) - 1
        while deg >= 0 and abs(det[deg]) <= thresh:
            deg -= 1
        if deg < 0:
            raise DegenerateMap("Jacobian determinant vanishes identically")
        inf_mult = (2 * d - 2) - deg
        points = []
        if deg > 0:
            affine = det[: deg + 1]
            roots_d = np.roots(np.array([complex(c.real, c.imag) for c in reversed(affine)]))
            clusters = _cluster_doubles(list(roots_d), float(mpf(2) ** (-F.prec // 4)))
            dcoeffs = [affine]
            for _ in range(max(len(c) for c in clusters) - 1):
                dcoeffs.append(_poly_deriv(dcoeffs[-1]))
            for idx in clusters:
                mult = len(idx)
                z = mpc(complex(np.mean(roots_d[idx])))
                # A multiplicity-m root is a simple root of the (m-1)-th derivative.
                target = dcoeffs[mult - 1]
                dtarget = _poly_deriv(target)
                for _ in range(80):
                    v = _poly_eval(target, z)
                    dv = _poly_eval(dtarget, z)
                    if dv == 0:
                        break
                    step = v / dv
                    z = z - step
                    if abs(step) < mpf(2) ** (-F.prec - 8) * (1 + abs(z)):
                        break
                points.append((ProjectivePoint.affine(z), mult))
        if inf_mult > 0:
            points.append((INFINITY, inf_mult))
        kappa = mpmath.log(abs(det[deg])) + 2 * F.log_scale
        for pt, mult in points:
            if not pt.is_infinity:
                kappa += mult * mpmath.log(mpmath.hypot(abs(pt.value), 1))
        return CriticalStructure(kappa_log_abs=kappa, points=tuple(points))


def critical_points(F: HomogeneousLift):
    """The critical points as a flat list (without multiplicities)."""
    return [pt for pt, _ in critical_structure(F).points]
