"""Precision management, points of the projective line, the normalized chordal
metric, and p-adic valuations of exact rationals.

All floating scalars are mpmath numbers evaluated at an explicit binary
precision (at least 53 bits, default 128).  The point at infinity is a
first-class chart value and is never encoded as a large float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mpc, mpf

DEFAULT_PRECISION_BITS = 128
MIN_PRECISION_BITS = 53


def working_precision(bits: int):
    """Context manager pinning the mpmath working precision to ``bits``."""
    if bits < MIN_PRECISION_BITS:
        raise ValueError("precision must be >= %d bits, got %d" % (MIN_PRECISION_BITS, bits))
    return mpmath.workprec(bits)


def to_scalar(value) -> mpc:
    """Convert ints, floats, complex, Fractions, or (re, im) Fraction pairs to mpc
    at the current working precision."""
    if isinstance(value, mpc):
        return value
    if isinstance(value, mpf):
        return mpc(value)
    if isinstance(value, Fraction):
        return mpc(mpf(value.numerator) / mpf(value.denominator))
    if isinstance(value, tuple) and len(value) == 2:
        re, im = value
        return to_scalar(re) + mpc(0, 1) * to_scalar(im)
    if isinstance(value, complex):
        return mpc(value.real, value.imag)
    if isinstance(value, (int, float)):
        return mpc(value)
    raise TypeError("cannot convert %r to a scalar" % (value,))


class ProjectivePoint:
    """A point of P^1: either an affine complex value or the point at infinity."""

    __slots__ = ("_value",)

    def __init__(self, value=None):
        # value=None encodes infinity; use the affine()/infinity() constructors.
        self._value = value

    @classmethod
    def affine(cls, value) -> "ProjectivePoint":
        v = to_scalar(value)
        if not (mpmath.isfinite(v.real) and mpmath.isfinite(v.imag)):
            raise ValueError("affine value must be finite; use ProjectivePoint.infinity()")
        return cls(v)

    @classmethod
    def infinity(cls) -> "ProjectivePoint":
        return cls(None)

    @property
    def is_infinity(self) -> bool:
        return self._value is None

    @property
    def value(self) -> mpc:
        if self._value is None:
            raise ValueError("the point at infinity has no affine value")
        return self._value

    def lift(self):
        """A homogeneous representative: (z, 1) for affine z, (1, 0) for infinity."""
        if self._value is None:
            return mpc(1), mpc(0)
        return self._value, mpc(1)

    def to_complex(self):
        """Lossy double-precision value; None for infinity."""
        if self._value is None:
            return None
        return complex(self._value.real, self._value.imag)

    def sphere(self):
        """Double-precision coordinates on the unit sphere (stereographic model).

        Euclidean distance between images equals twice the chordal distance.
        """
        if self._value is None:
            return (0.0, 0.0, 1.0)
        z = self.to_complex()
        s = 1.0 + z.real * z.real + z.imag * z.imag
        return (2.0 * z.real / s, 2.0 * z.imag / s, (s - 2.0) / s)

    def __eq__(self, other):
        if not isinstance(other, ProjectivePoint):
            return NotImplemented
        if self.is_infinity or other.is_infinity:
            return self.is_infinity and other.is_infinity
        return self._value == other._value

    def __hash__(self):
        return hash(None if self._value is None else (self._value.real, self._value.imag))

    def __repr__(self):
        if self._value is None:
            return "ProjectivePoint(inf)"
        return "ProjectivePoint(%s)" % (self._value,)


INFINITY = ProjectivePoint.infinity()


def sphere_embedding(z) -> tuple:
    """Sphere coordinates for a double complex value or None (= infinity)."""
    if z is None:
        return (0.0, 0.0, 1.0)
    z = complex(z)
    s = 1.0 + z.real * z.real + z.imag * z.imag
    if not math.isfinite(s):
        return (0.0, 0.0, 1.0)
    return (2.0 * z.real / s, 2.0 * z.imag / s, (s - 2.0) / s)


def _norm(p0: mpc, p1: mpc) -> mpf:
    return mpmath.hypot(abs(p0), abs(p1))


def chordal_distance(z: ProjectivePoint, w: ProjectivePoint) -> mpf:
    """The normalized chordal metric |p ^ q| / (||p|| ||q||), always in [0, 1]."""
    p0, p1 = z.lift()
    q0, q1 = w.lift()
    wedge = abs(p0 * q1 - p1 * q0)
    dist = wedge / (_norm(p0, p1) * _norm(q0, q1))
    return dist if dist < 1 else mpf(1)


def log_norm(p0, p1) -> mpf:
    """log of the Euclidean norm of a nonzero pair; adds log|c| under scaling by c."""
    p0 = to_scalar(p0)
    p1 = to_scalar(p1)
    n = _norm(p0, p1)
    if n == 0:
        raise ValueError("log_norm of the zero vector is undefined")
    return mpmath.log(n)


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin (exact for n < 3.3e24)."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PAdicContext:
    """A validated prime defining the p-adic absolute value |q|_p = p^(-v_p(q))."""

    p: int

    def __post_init__(self):
        if self.p < 2 or not is_prime(self.p):
            raise ValueError("p must be a prime >= 2, got %r" % (self.p,))


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def padic_valuation(q, p: int) -> int:
    """Exact integer valuation v_p(q) of a nonzero rational."""
    q = Fraction(q)
    if q == 0:
        raise ValueError("v_p(0) is undefined")
    return _int_valuation(q.numerator, p) - _int_valuation(q.denominator, p)


def padic_log_abs(q, ctx: PAdicContext) -> float:
    """log|q|_p = -v_p(q) * log p for a nonzero rational q."""
    return -padic_valuation(q, ctx.p) * math.log(ctx.p)


def divisors(n: int):
    """Positive divisors of n, ascending."""
    out = [m for m in range(1, n + 1) if n % m == 0]
    return out


def mobius(n: int) -> int:
    """Moebius function via trial factorization (mu(1) = 1)."""
    if n < 1:
        raise ValueError("mobius is defined on positive integers")
    mu = 1
    k = 2
    while k * k <= n:
        if n % k == 0:
            n //= k
            if n % k == 0:
                return 0
            mu = -mu
        else:
            k += 1
    if n > 1:
        mu = -mu
    return mu
