"""Exact big-integer route: compose iterates of a rational map over Q, deflate
superattracting fixed points by a gcd, form the product of nonzero multipliers
through resultants, and read off p-adic (or archimedean) multiplier sums
without any root finding.

Integer polynomials are tuples of ints, ascending in the variable, with no
trailing zeros (the zero polynomial is the empty tuple).  Resultants use the
subresultant pseudo-remainder sequence, which keeps coefficient growth
polynomial where naive determinant expansion would explode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import DegenerateMap, DegreeCapExceeded, InternalInconsistency
from .numerics import divisors, mobius, padic_valuation

DEFAULT_DEGREE_CAP = 2 ** 7


# ---------------------------------------------------------------------------
# integer polynomial helpers
# ---------------------------------------------------------------------------


def _trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _deg(p) -> int:
    return len(p) - 1


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def _psub(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def _pmul(a, b):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return _trim(out)


def _pscale(a, k):
    if k == 0:
        return ()
    return _trim([k * x for x in a])


def _pshift(a, k):
    """Multiply by x^k."""
    if not a:
        return ()
    return tuple([0] * k + list(a))


def _pderiv(a):
    return _trim([i * a[i] for i in range(1, len(a))])


def _content(a) -> int:
    g = 0
    for x in a:
        g = math.gcd(g, abs(x))
    return g if g else 1


def _primitive(a):
    g = _content(a)
    return _trim([x // g for x in a])


def _peval(a, x: Fraction) -> Fraction:
    r = Fraction(0)
    for c in reversed(a):
        r = r * x + c
    return r


def _prem(A, B):
    """Pseudo-remainder lc(B)^(deg A - deg B + 1) * A mod B, exactly over Z."""
    A = _trim(A)
    B = _trim(B)
    if not B:
        raise ZeroDivisionError("pseudo-remainder by the zero polynomial")
    dB = _deg(B)
    lb = B[-1]
    steps = _deg(A) - dB + 1
    if steps <= 0:
        return A
    R = list(A)
    used = 0
    while R and len(R) - 1 >= dB:
        coef = R[-1]
        R = [lb * x for x in R]
        used += 1
        shift = len(R) - 1 - dB
        for i, b in enumerate(B):
            R[shift + i] -= coef * b
        while R and R[-1] == 0:
            R.pop()
    if used < steps and R:
        f = lb ** (steps - used)
        R = [f * x for x in R]
    return _trim(R)


def poly_gcd(P, Q):
    """Primitive gcd in Z[x] (positive leading coefficient), primitive PRS."""
    A = _primitive(_trim(P))
    B = _primitive(_trim(Q))
    if not A:
        A, B = B, A
    if not B:
        return A if not A or A[-1] > 0 else _pscale(A, -1)
    if _deg(A) < _deg(B):
        A, B = B, A
    while True:
        if _deg(B) == 0:
            return (1,)
        R = _prem(A, B)
        if not R:
            out = _primitive(B)
            return out if out[-1] > 0 else _pscale(out, -1)
        A, B = B, _primitive(R)


def _pdiv_exact(P, G):
    """Exact quotient P / G in Z[x]; raises if the division is not exact."""
    P = _trim(P)
    G = _trim(G)
    if not G:
        raise ZeroDivisionError("division by the zero polynomial")
    if not P:
        return ()
    rem = [Fraction(x) for x in P]
    q = [Fraction(0)] * (len(P) - len(G) + 1)
    lg = Fraction(G[-1])
    for k in range(len(q) - 1, -1, -1):
        c = rem[k + len(G) - 1] / lg
        q[k] = c
        if c:
            for i, g in enumerate(G):
                rem[k + i] -= c * g
    if any(rem) or any(f.denominator != 1 for f in q):
        raise InternalInconsistency("polynomial division was not exact")
    return _trim([int(f) for f in q])


def resultant_int(P, Q) -> int:
    """Resultant of two integer polynomials by the subresultant PRS.

    Convention: Res(P, Q) = lc(P)^deg(Q) * prod Q(roots of P).
    """
    A = list(_trim(P))
    B = list(_trim(Q))
    if not A or not B:
        return 0
    s = 1
    if _deg(A) < _deg(B):
        if (_deg(A) % 2) and (_deg(B) % 2):
            s = -s
        A, B = B, A
    if _deg(B) == 0:
        return s * B[0] ** _deg(A)
    ca, cb = _content(A), _content(B)
    t = ca ** _deg(B) * cb ** _deg(A)
    A = [x // ca for x in A]
    B = [x // cb for x in B]
    g = h = 1
    while True:
        dA, dB = _deg(A), _deg(B)
        delta = dA - dB
        if (dA % 2) and (dB % 2):
            s = -s
        R = list(_prem(A, B))
        if not R:
            return 0
        A = B
        divisor = g * h ** delta
        B = [x // divisor for x in R]
        g = A[-1]
        h = h if delta == 0 else (g ** delta) // (h ** (delta - 1)) if delta > 1 else g
        if _deg(B) == 0:
            break
    dA = _deg(A)
    out = (B[0] ** dA) // (h ** (dA - 1)) if dA >= 1 else B[0]
    return s * t * out


# ---------------------------------------------------------------------------
# exact rational maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactRationalMap:
    """Integer-coefficient numerator/denominator, coprime, joint content 1."""

    num: tuple
    den: tuple

    @property
    def d(self) -> int:
        return max(_deg(self.num), _deg(self.den))

    @classmethod
    def from_coeffs(cls, num, den, validate: bool = True) -> "ExactRationalMap":
        nf = [Fraction(x) for x in num]
        df = [Fraction(x) for x in den]
        lcm = 1
        for f in nf + df:
            lcm = lcm * f.denominator // math.gcd(lcm, f.denominator)
        ni = _trim([int(f * lcm) for f in nf])
        di = _trim([int(f * lcm) for f in df])
        if not di:
            raise DegenerateMap("denominator vanishes identically")
        if not ni:
            raise ValueError("numerator vanishes identically")
        g = math.gcd(_content(ni), _content(di))
        ni = tuple(x // g for x in ni)
        di = tuple(x // g for x in di)
        if di[-1] < 0:
            ni = _pscale(ni, -1)
            di = _pscale(di, -1)
        m = cls(num=ni, den=di)
        if m.d < 2:
            raise ValueError("degree must be >= 2, got %d" % m.d)
        if validate and _deg(poly_gcd(ni, di)) > 0:
            raise DegenerateMap("numerator and denominator share a polynomial factor")
        return m

    def padded(self):
        """Homogenized coefficient rows of length d + 1."""
        d = self.d
        n = tuple(self.num[k] if k < len(self.num) else 0 for k in range(d + 1))
        q = tuple(self.den[k] if k < len(self.den) else 0 for k in range(d + 1))
        return n, q


def compose_exact(f: ExactRationalMap, n: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> ExactRationalMap:
    """Exact composition f^n with joint content reduction each step."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if f.d ** n > degree_cap:
        raise DegreeCapExceeded("d^n = %d exceeds the exact-degree cap %d" % (f.d ** n, degree_cap))
    fn, fd = f.padded()
    d = f.d
    gn, gd = f.num, f.den
    for _ in range(n - 1):
        pow_n = [(1,)]
        pow_d = [(1,)]
        for _k in range(d):
            pow_n.append(_pmul(pow_n[-1], gn))
            pow_d.append(_pmul(pow_d[-1], gd))
        new_n = ()
        new_d = ()
        for k in range(d + 1):
            base = _pmul(pow_n[k], pow_d[d - k])
            if fn[k]:
                new_n = _padd(new_n, _pscale(base, fn[k]))
            if fd[k]:
                new_d = _padd(new_d, _pscale(base, fd[k]))
        g = math.gcd(_content(new_n), _content(new_d))
        gn = tuple(x // g for x in new_n)
        gd = tuple(x // g for x in new_d)
    if not gd or gd[-1] < 0:
        gn, gd = _pscale(gn, -1), _pscale(gd, -1)
    return ExactRationalMap(num=_trim(gn), den=_trim(gd) if gd else (1,))


def fixed_numerator(f: ExactRationalMap, n: int, degree_cap: int = DEFAULT_DEGREE_CAP):
    """P_n = numerator(f^n) - z * denominator(f^n); affine roots are Fix(f^n) \ {inf}."""
    fn = compose_exact(f, n, degree_cap)
    return _psub(fn.num, _pshift(fn.den, 1))


def _derivative_pair(fn: ExactRationalMap):
    """(f^n)' = A / B in lowest terms over Z."""
    num = _psub(_pmul(_pderiv(fn.num), fn.den), _pmul(fn.num, _pderiv(fn.den)))
    den = _pmul(fn.den, fn.den)
    g = poly_gcd(num, den)
    if _deg(g) > 0:
        num = _pdiv_exact(num, g)
        den = _pdiv_exact(den, g)
    c = math.gcd(_content(num), _content(den))
    num = tuple(x // c for x in num)
    den = tuple(x // c for x in den)
    return num, den


def deflate_superattracting(f: ExactRationalMap, n: int, degree_cap: int = DEFAULT_DEGREE_CAP):
    """Remove zero-multiplier roots from P_n via gcd with the derivative numerator.

    In characteristic 0 every superattracting fixed point is a simple root of
    P_n, so the deflated count equals the gcd degree.
    """
    p_n = fixed_numerator(f, n, degree_cap)
    fn = compose_exact(f, n, degree_cap)
    der_num, _ = _derivative_pair(fn)
    g = poly_gcd(p_n, der_num)
    if _deg(g) == 0:
        return p_n, 0
    return _pdiv_exact(p_n, g), _deg(g)


@dataclass(frozen=True)
class ExactMultiplierProduct:
    n: int
    product: Fraction
    deflated_count: int


def multiplier_product(f: ExactRationalMap, n: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> ExactMultiplierProduct:
    """prod (f^n)'(w) over Fix(f^n) with nonzero multiplier, multiplicity-weighted.

    Affine points enter through resultants against the deflated fixed-point
    polynomial; the infinity fixed point enters through the conjugated chart
    w -> 1/f^n(1/w) evaluated symbolically at w = 0.
    """
    fn = compose_exact(f, n, degree_cap)
    p_tilde, count = deflate_superattracting(f, n, degree_cap)
    a_d, b_d = _derivative_pair(fn)
    product = Fraction(1)
    if _deg(p_tilde) > 0:
        lc = p_tilde[-1]
        res_a = resultant_int(p_tilde, a_d)
        res_b = resultant_int(p_tilde, b_d)
        if res_a == 0 or res_b == 0:
            raise InternalInconsistency(
                "vanishing resultant in the multiplier product (fixed point at a pole?)"
            )
        product = Fraction(res_a, lc ** _deg(a_d)) / Fraction(res_b, lc ** _deg(b_d))
    D = f.d ** n
    if _deg(fn.num) > _deg(fn.den):
        # f^n fixes infinity; its form multiplicity is the degree deficiency of P_n.
        p_n = fixed_numerator(f, n, degree_cap)
        mult_inf = (D + 1) - _deg(p_n)
        lam_num = fn.den[D - 1] if D - 1 < len(fn.den) else 0
        lam_inf = Fraction(lam_num, fn.num[D])
        if lam_inf == 0:
            count += mult_inf
        else:
            product *= lam_inf ** mult_inf
    if product == 0:
        raise InternalInconsistency("zero multiplier survived deflation")
    return ExactMultiplierProduct(n=n, product=product, deflated_count=count)


@dataclass(frozen=True)
class PAdicEstimate:
    n: int
    p: int
    valuation_numer: int  # -v_p(product)
    denom: int            # n * d^n
    estimate: float       # valuation_numer * log(p) / denom


def padic_estimator(f: ExactRationalMap, n: int, p: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> PAdicEstimate:
    """Theorem-style multiplier sum under |.|_p: an exact rational multiple of log p."""
    prod = multiplier_product(f, n, degree_cap).product
    v = padic_valuation(prod, p)
    denom = n * f.d ** n
    return PAdicEstimate(n=n, p=p, valuation_numer=-v, denom=denom,
                         estimate=-v * math.log(p) / denom)


def _log_abs_fraction(q: Fraction) -> float:
    with mpmath.workprec(80):
        return float(mpmath.log(mpmath.mpf(abs(q.numerator))) - mpmath.log(mpmath.mpf(q.denominator)))


def archimedean_crosscheck(f: ExactRationalMap, n: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> float:
    """(1/(n d^n)) log|product| under the usual absolute value.

    Must agree with the floating multiplier-sum estimator in full mode.
    """
    prod = multiplier_product(f, n, degree_cap).product
    return _log_abs_fraction(prod) / (n * f.d ** n)


def full_valuation(f: ExactRationalMap, n: int, p: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> int:
    return padic_valuation(multiplier_product(f, n, degree_cap).product, p)


def exact_period_valuation(f: ExactRationalMap, n: int, p: int, degree_cap: int = DEFAULT_DEGREE_CAP) -> int:
    """v_p of the exact-period multiplier product, by Moebius division of full products."""
    total = 0
    for m in divisors(n):
        mu = mobius(n // m)
        if mu:
            total += mu * (n // m) * full_valuation(f, m, p, degree_cap)
    return total
