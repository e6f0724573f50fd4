"""Command-line front end: parse map specifications, run estimator / rate /
p-adic / verification workflows, emit CSV or JSON.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 numeric failure (divergence, overflow, degree caps).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exactpadic, lyap
from .errors import (
    AmbiguousMatch,
    DegenerateMap,
    DegreeCapExceeded,
    DegreeError,
    InternalInconsistency,
    IterationOverflow,
    LyapmapError,
    ParseError,
    PreimageFailure,
    RootFindingDivergence,
)
from .numerics import DEFAULT_PRECISION_BITS, ProjectivePoint, chordal_distance, is_prime
from .periodic import PeriodicCache
from .potential import GreenEvaluator
from .rmap import HomogeneousLift, critical_structure, make_lift

__version__ = "0.1.0"

NUMERIC_ERRORS = (
    RootFindingDivergence,
    IterationOverflow,
    PreimageFailure,
    DegreeCapExceeded,
    AmbiguousMatch,
    InternalInconsistency,
    DegenerateMap,
)


# ---------------------------------------------------------------------------
# map specification grammar
# ---------------------------------------------------------------------------
#   expr   := term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := ('+'|'-')* power
#   power  := atom (('^'|'**') ('-'? INTEGER))?
#   atom   := NUMBER | 'z' | 'i' | '(' expr ')'
# Coefficients may be integers, decimals, or rationals via '/'; all are kept
# exact (decimals become exact fractions).

_C_ZERO = (Fraction(0), Fraction(0))
_C_ONE = (Fraction(1), Fraction(0))


def _cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _csub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cneg(a):
    return (-a[0], -a[1])


def _is_czero(a):
    return a[0] == 0 and a[1] == 0


def _ptrim(p):
    p = list(p)
    while p and _is_czero(p[-1]):
        p.pop()
    return tuple(p)


def _polyadd(a, b):
    n = max(len(a), len(b))
    return _ptrim(
        [_cadd(a[i] if i < len(a) else _C_ZERO, b[i] if i < len(b) else _C_ZERO) for i in range(n)]
    )


def _polyneg(a):
    return tuple(_cneg(x) for x in a)


def _polymul(a, b):
    if not a or not b:
        return ()
    out = [_C_ZERO] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if _is_czero(ai):
            continue
        for j, bj in enumerate(b):
            out[i + j] = _cadd(out[i + j], _cmul(ai, bj))
    return _ptrim(out)


class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _scan(self):
        text = self.text
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch.isdigit() or (ch == "." and i + 1 < len(text) and text[i + 1].isdigit()):
                j = i
                seen_dot = False
                while j < len(text) and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                    if text[j] == ".":
                        seen_dot = True
                    j += 1
                self.tokens.append(("num", text[i:j], i))
                i = j
                continue
            if ch in "zZ":
                self.tokens.append(("z", ch, i))
                i += 1
                continue
            if ch in "iI":
                self.tokens.append(("i", ch, i))
                i += 1
                continue
            if ch == "*" and i + 1 < len(text) and text[i + 1] == "*":
                self.tokens.append(("op", "^", i))
                i += 2
                continue
            if ch in "+-*/^()":
                kind = "op" if ch in "+-*/^" else ch
                self.tokens.append((kind, ch, i))
                i += 1
                continue
            raise ParseError("unexpected character %r" % ch, i)

    def peek(self):
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return ("end", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.index += 1
        return tok


class _Parser:
    """Recursive descent over rational functions: values are (num, den) pairs."""

    def __init__(self, text):
        self.toks = _Tokenizer(text)

    def parse(self):
        value = self._expr()
        kind, _, pos = self.toks.peek()
        if kind != "end":
            raise ParseError("unexpected trailing input", pos)
        return value

    def _expr(self):
        value = self._term()
        while True:
            kind, op, _ = self.toks.peek()
            if kind == "op" and op in "+-":
                self.toks.next()
                rhs = self._term()
                n1, d1 = value
                n2, d2 = rhs
                if op == "-":
                    n2 = _polyneg(n2)
                value = (_polyadd(_polymul(n1, d2), _polymul(n2, d1)), _polymul(d1, d2))
            else:
                return value

    def _term(self):
        value = self._factor()
        while True:
            kind, op, pos = self.toks.peek()
            if kind == "op" and op in "*/":
                self.toks.next()
                rhs = self._factor()
                n1, d1 = value
                n2, d2 = rhs
                if op == "*":
                    value = (_polymul(n1, n2), _polymul(d1, d2))
                else:
                    if not n2:
                        raise ParseError("division by zero", pos)
                    value = (_polymul(n1, d2), _polymul(d1, n2))
            else:
                return value

    def _factor(self):
        kind, op, _ = self.toks.peek()
        sign = 1
        while kind == "op" and op in "+-":
            self.toks.next()
            if op == "-":
                sign = -sign
            kind, op, _ = self.toks.peek()
        value = self._power()
        if sign < 0:
            value = (_polyneg(value[0]), value[1])
        return value

    def _power(self):
        value = self._atom()
        kind, op, pos = self.toks.peek()
        if kind == "op" and op == "^":
            self.toks.next()
            exp = self._exponent()
            value = self._ipow(value, exp, pos)
        return value

    def _exponent(self):
        kind, val, pos = self.toks.next()
        neg = False
        if kind == "op" and val in "+-":
            neg = val == "-"
            kind, val, pos = self.toks.next()
        if kind != "num" or "." in val:
            raise ParseError("exponent must be an integer", pos)
        e = int(val)
        return -e if neg else e

    def _ipow(self, value, e, pos):
        if e < 0:
            n, d = value
            if not n:
                raise ParseError("zero raised to a negative power", pos)
            value = (d, n)
            e = -e
        out = ((_C_ONE,), (_C_ONE,))
        base = value
        while e:
            if e & 1:
                out = (_polymul(out[0], base[0]), _polymul(out[1], base[1]))
            base = (_polymul(base[0], base[0]), _polymul(base[1], base[1]))
            e >>= 1
        return out

    def _atom(self):
        kind, val, pos = self.toks.next()
        if kind == "num":
            if "." in val:
                coeff = (Fraction(val), Fraction(0))
            else:
                coeff = (Fraction(int(val)), Fraction(0))
            return ((coeff,), (_C_ONE,))
        if kind == "z":
            return ((_C_ZERO, _C_ONE), (_C_ONE,))
        if kind == "i":
            return (((Fraction(0), Fraction(1)),), (_C_ONE,))
        if kind == "(":
            value = self._expr()
            kind, _, pos2 = self.toks.next()
            if kind != ")":
                raise ParseError("expected ')'", pos2)
            return value
        raise ParseError("expected a number, 'z', 'i', or '('", pos)


@dataclass(frozen=True)
class MapSpec:
    """Parsed rational map: exact complex-rational coefficient rows, ascending in z."""

    text: str
    num: tuple
    den: tuple

    @property
    def degree(self) -> int:
        return max(len(self.num), len(self.den)) - 1

    @property
    def is_real_rational(self) -> bool:
        return all(c[1] == 0 for c in self.num + self.den)

    def to_lift(self, precision: int = DEFAULT_PRECISION_BITS) -> HomogeneousLift:
        return make_lift(self.num, self.den, precision)

    def to_exact(self) -> exactpadic.ExactRationalMap:
        if not self.is_real_rational:
            raise ValueError("the exact p-adic route needs rational real coefficients")
        return exactpadic.ExactRationalMap.from_coeffs(
            [c[0] for c in self.num], [c[0] for c in self.den]
        )


def parse_map_spec(text: str) -> MapSpec:
    """Parse a rational function in z (e.g. 'z^2 - 1', '(z^2+1)/(2*z)')."""
    num, den = _Parser(text).parse()
    num = _ptrim(num)
    den = _ptrim(den)
    if not den:
        raise ParseError("denominator vanishes identically", 0)
    if not num:
        raise DegreeError("the zero map has no degree")
    d = max(len(num), len(den)) - 1
    if d < 2:
        raise DegreeError("degree must be >= 2, got %d" % d)
    return MapSpec(text=text, num=num, den=den)


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


def _emit(rows, meta, fmt, out_path):
    if fmt == "json":
        payload = json.dumps({"meta": meta, "rows": rows}, indent=2, sort_keys=True)
    else:
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            for r in rows:
                writer.writerow({k: ("" if v is None else v) for k, v in r.items()})
        payload = buf.getvalue()
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(payload)
            if fmt == "json":
                fh.write("\n")
    else:
        sys.stdout.write(payload)
        if fmt == "json":
            sys.stdout.write("\n")


def _meta(args, spec):
    meta = {
        "tool": "lyapmap",
        "version": __version__,
        "map": spec.text,
        "degree": spec.degree,
        "precision_bits": args.precision_bits,
    }
    return meta


def _random_points(seed, count, bound=100.0):
    """Seeded sample of projective points, roughly uniform on the sphere."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        u = rng.uniform(-1.0, 1.0)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        if 1.0 - u < 1e-6:
            continue
        r = math.sqrt(max(0.0, 1.0 - u * u))
        z = complex(r * math.cos(theta), r * math.sin(theta)) / (1.0 - u)
        if abs(z) > bound:
            continue
        pts.append(ProjectivePoint.affine(z))
    return pts


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_estimate(args):
    spec = parse_map_spec(args.map)
    F = spec.to_lift(args.precision_bits)
    if args.mode in lyap.PERIODIC_MODES:
        if args.n is None:
            raise ParseError("--n is required for mode %r" % args.mode, 0)
        est = lyap.estimator(F, args.n, args.mode)
    elif args.mode == lyap.MODE_GREEN:
        est = lyap.lyapunov_green_critical(F, green_tol=args.green_tol)
    elif args.mode == lyap.MODE_MONTE_CARLO:
        est = lyap.lyapunov_monte_carlo(F, args.samples, burn_in=args.burn_in, seed=args.seed)
    else:
        raise ParseError("unknown mode %r" % args.mode, 0)
    row = {
        "mode": est.mode,
        "n": est.n,
        "value": est.value,
        "excluded_count": est.excluded_count,
        "sample_count": est.sample_count,
        "std_error": est.std_error,
    }
    _emit([row], _meta(args, spec), args.format, args.out)
    return 0


def _cmd_rates(args):
    spec = parse_map_spec(args.map)
    F = spec.to_lift(args.precision_bits)
    report = lyap.rate_table(F, args.n_max)
    rows = [
        {
            "n": r.n,
            "mode": r.mode,
            "estimate": r.estimate,
            "error": r.error,
            "error_ndinv": r.error_ndinv,
            "error_dhalf": r.error_dhalf,
        }
        for r in report.rows
    ]
    meta = _meta(args, spec)
    meta.update(
        {
            "reference_value": report.reference_value,
            "reference_mode": report.reference_mode,
            "full_rate_bounded": report.full_rate_bounded,
            "exact_rate_bounded": report.exact_rate_bounded,
        }
    )
    _emit(rows, meta, args.format, args.out)
    return 0


def _cmd_padic(args):
    spec = parse_map_spec(args.map)
    if not is_prime(args.p):
        raise ParseError("--p must be prime, got %d" % args.p, 0)
    f = spec.to_exact()
    ns = [args.n] if args.n is not None else list(range(1, args.n_max + 1))
    rows = []
    for n in ns:
        est = exactpadic.padic_estimator(f, n, args.p, degree_cap=args.degree_cap)
        rows.append(
            {
                "n": est.n,
                "p": est.p,
                "valuation_numer": est.valuation_numer,
                "denom": est.denom,
                "estimate": est.estimate,
            }
        )
    _emit(rows, _meta(args, spec), args.format, args.out)
    return 0


def _cmd_verify(args):
    spec = parse_map_spec(args.map)
    F = spec.to_lift(args.precision_bits)
    cache = PeriodicCache(F)
    checks = []

    def record(name, ok, detail):
        checks.append({"check": name, "status": "PASS" if ok else "FAIL", "detail": detail})
        print("%s %s (%s)" % ("PASS" if ok else "FAIL", name, detail))

    # Moebius identity across all levels up to n_max.
    for n in range(2, args.n_max + 1):
        res = lyap.mobius_check(F, n, cache)
        record("mobius_residual_n%d" % n, res < 1e-9, "residual=%.3e" % res)

    # Functional equation of the Green function at seeded points.
    G = GreenEvaluator(F, tol=args.green_tol)
    worst = 0.0
    for pt in _random_points(args.seed, args.points):
        worst = max(worst, abs(float(G.functional_equation_residual(pt))))
    record("functional_equation", worst <= 3.0 * args.green_tol, "max_residual=%.3e" % worst)

    # Multiplier formula at seeded points away from critical points.
    cs = critical_structure(G.lift)
    ref = lyap.lyapunov_green_critical(F, green_tol=args.green_tol, evaluator=G)
    worst = 0.0
    used = 0
    for pt in _random_points(args.seed + 1, 4 * args.points):
        if used >= args.points:
            break
        if any(float(chordal_distance(pt, c)) < 1e-6 for c, _ in cs.points):
            continue
        used += 1
        worst = max(
            worst,
            lyap.multiplier_formula_residual(F, pt, green_tol=args.green_tol, evaluator=G, reference=ref),
        )
    record("multiplier_formula", worst < 1e-6, "max_residual=%.3e over %d points" % (worst, used))

    # Exact/floating route equivalence for rational maps.
    if spec.is_real_rational:
        f_exact = spec.to_exact()
        n_cap = args.exact_n_max
        while f_exact.d ** n_cap > exactpadic.DEFAULT_DEGREE_CAP:
            n_cap -= 1
        for n in range(1, n_cap + 1):
            lhs = exactpadic.archimedean_crosscheck(f_exact, n)
            rhs = lyap.estimator(F, n, lyap.MODE_FULL, cache).value
            record("route_equivalence_n%d" % n, abs(lhs - rhs) < 1e-6, "diff=%.3e" % abs(lhs - rhs))
    else:
        checks.append({"check": "route_equivalence", "status": "SKIP", "detail": "non-rational coefficients"})
        print("SKIP route_equivalence (non-rational coefficients)")

    failures = sum(1 for c in checks if c["status"] == "FAIL")
    meta = _meta(args, spec)
    meta["failures"] = failures
    _emit(checks, meta, args.format, args.out)
    return 1 if failures else 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="lyapmap",
        description="Lyapunov exponents of rational maps via periodic points, "
        "Green/critical-point evaluation, Monte Carlo, and exact p-adic products.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--map", required=True, help="rational function in z, e.g. 'z^2 - 1'")
        sp.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION_BITS)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default=None, help="output path (default stdout)")

    sp = sub.add_parser("estimate", help="one Lyapunov estimate")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument(
        "--mode",
        default=lyap.MODE_FULL,
        choices=lyap.PERIODIC_MODES + (lyap.MODE_GREEN, lyap.MODE_MONTE_CARLO),
    )
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--burn-in", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--green-tol", type=float, default=1e-12)
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("rates", help="estimates and error rates over 1..n_max")
    common(sp)
    sp.add_argument("--n-max", type=int, required=True)
    sp.set_defaults(func=_cmd_rates)

    sp = sub.add_parser("padic", help="exact p-adic estimator table")
    common(sp)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--n-max", type=int, default=6)
    sp.add_argument("--degree-cap", type=int, default=exactpadic.DEFAULT_DEGREE_CAP)
    sp.set_defaults(func=_cmd_padic)

    sp = sub.add_parser("verify", help="run the invariant suite; nonzero exit on failure")
    common(sp)
    sp.add_argument("--n-max", type=int, default=8)
    sp.add_argument("--exact-n-max", type=int, default=6)
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--green-tol", type=float, default=1e-8)
    sp.set_defaults(func=_cmd_verify)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, DegreeError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print("numeric failure: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 3


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
