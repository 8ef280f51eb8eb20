"""Exact real inputs and certified rational enclosures.

A :class:`RealExpr` is a symbolic description of one real number (rational,
square or cube root, quadratic surd, exact decimal, periodic continued
fraction). :func:`enclose` turns it into a :class:`RationalEnclosure` of any
requested width. :class:`QuadSurd` is an exact element of Q(sqrt(c)) used
wherever a computation must stay exact at a quadratic irrational.
"""

import logging
import math
import re
from collections.abc import Iterator
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Union

from dioph_spectrum.errors import DomainError, ExpressionSyntaxError, PrecisionBudgetExceeded

logger = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 16
_START_BITS = 64
_START_TERMS = 8


def _squarefree_split(c: int) -> tuple[int, int]:
    """Return (k, m) with c = k*k*m and m squarefree."""
    k, m = 1, c
    f = 2
    while f * f <= m:
        while m % (f * f) == 0:
            m //= f * f
            k *= f
        f += 1
    return k, m


def _icbrt(n: int) -> int:
    """Floor of the real cube root of a non-negative integer."""
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + 2) // 3)
    while True:
        y = (2 * x + n // (x * x)) // 3
        if y >= x:
            break
        x = y
    while x * x * x > n:
        x -= 1
    while (x + 1) ** 3 <= n:
        x += 1
    return x


class QuadSurd:
    """Exact number p + r*sqrt(c) with rational p, r and squarefree c > 1.

    Arithmetic with ``int`` and ``Fraction`` is supported in both operand
    orders. Results whose surd part vanishes are returned as ``Fraction``.
    """

    __slots__ = ("_p", "_r", "_c")

    def __init__(self, p: int | Fraction, r: int | Fraction, c: int):
        k, m = _squarefree_split(c)
        if c < 2 or m == 1 or r == 0:
            raise DomainError(
                f"QuadSurd needs a non-zero surd part over a non-square: {p}, {r}, {c}"
            )
        self._p = Fraction(p)
        self._r = Fraction(r) * k
        self._c = m

    @classmethod
    def make(cls, p: int | Fraction, r: int | Fraction, c: int) -> "Exact":
        """Build p + r*sqrt(c), collapsing to Fraction when it is rational."""
        if c < 0:
            raise DomainError(f"sqrt of negative number {c}")
        k, m = _squarefree_split(c) if c > 0 else (0, 1)
        if r == 0 or m == 1:
            return Fraction(p) + Fraction(r) * k
        return cls(p, r, c)

    @property
    def rational_part(self) -> Fraction:
        return self._p

    @property
    def surd_part(self) -> Fraction:
        return self._r

    @property
    def radicand(self) -> int:
        return self._c

    def canonical(self) -> tuple[int, int, int, int]:
        """Return (a, b, c, d) with value (a + b*sqrt(c))/d, d > 0 and gcd(a, b, d) = 1."""
        d = math.lcm(self._p.denominator, self._r.denominator)
        a = int(self._p * d)
        b = int(self._r * d)
        g = math.gcd(math.gcd(a, b), d)
        return a // g, b // g, self._c, d // g

    def conjugate(self) -> "QuadSurd":
        return QuadSurd(self._p, -self._r, self._c)

    def sign(self) -> int:
        sp = (self._p > 0) - (self._p < 0)
        sr = (self._r > 0) - (self._r < 0)
        if sp == 0 or sp == sr:
            return sr
        if self._p * self._p > self._r * self._r * self._c:
            return sp
        return sr

    def _coerce(self, other: object) -> tuple[Fraction, Fraction] | None:
        if isinstance(other, QuadSurd):
            if other._c != self._c:
                raise DomainError(
                    f"Cannot combine sqrt({self._c}) and sqrt({other._c}) exactly"
                )
            return other._p, other._r
        if isinstance(other, (int, Fraction)):
            return Fraction(other), Fraction(0)
        return None

    def __add__(self, other: object) -> "Exact":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadSurd.make(self._p + o[0], self._r + o[1], self._c)

    __radd__ = __add__

    def __neg__(self) -> "QuadSurd":
        return QuadSurd(-self._p, -self._r, self._c)

    def __pos__(self) -> "QuadSurd":
        return self

    def __abs__(self) -> "QuadSurd":
        return -self if self.sign() < 0 else self

    def __sub__(self, other: object) -> "Exact":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadSurd.make(self._p - o[0], self._r - o[1], self._c)

    def __rsub__(self, other: object) -> "Exact":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadSurd.make(o[0] - self._p, o[1] - self._r, self._c)

    def __mul__(self, other: object) -> "Exact":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        s, t = o
        return QuadSurd.make(
            self._p * s + self._r * t * self._c, self._p * t + self._r * s, self._c
        )

    __rmul__ = __mul__

    def _inverse(self) -> "Exact":
        norm = self._p * self._p - self._r * self._r * self._c
        return QuadSurd.make(self._p / norm, -self._r / norm, self._c)

    def __truediv__(self, other: object) -> "Exact":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        s, t = o
        if s == 0 and t == 0:
            raise ZeroDivisionError("QuadSurd division by zero")
        if t == 0:
            return QuadSurd.make(self._p / s, self._r / s, self._c)
        return self * QuadSurd(s, t, self._c)._inverse()

    def __rtruediv__(self, other: object) -> "Exact":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._inverse() * o[0]

    def _cmp(self, other: object) -> int | None:
        if isinstance(other, float):
            if math.isinf(other):
                return -1 if other > 0 else 1
            other = Fraction(other)
        o = self._coerce(other)
        if o is None:
            return None
        diff = QuadSurd.make(self._p - o[0], self._r - o[1], self._c)
        if isinstance(diff, Fraction):
            return (diff > 0) - (diff < 0)
        return diff.sign()

    def __eq__(self, other: object) -> bool:
        if isinstance(other, QuadSurd):
            return (self._p, self._r, self._c) == (other._p, other._r, other._c)
        if isinstance(other, (int, Fraction, float)):
            return False
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._p, self._r, self._c))

    def __lt__(self, other: object) -> bool:
        c = self._cmp(other)
        return NotImplemented if c is None else c < 0

    def __le__(self, other: object) -> bool:
        c = self._cmp(other)
        return NotImplemented if c is None else c <= 0

    def __gt__(self, other: object) -> bool:
        c = self._cmp(other)
        return NotImplemented if c is None else c > 0

    def __ge__(self, other: object) -> bool:
        c = self._cmp(other)
        return NotImplemented if c is None else c >= 0

    def __float__(self) -> float:
        return float(self._p) + float(self._r) * math.sqrt(self._c)

    def __repr__(self) -> str:
        return f"QuadSurd({self._p!s}, {self._r!s}, {self._c})"

    def __str__(self) -> str:
        a, b, c, d = self.canonical()
        return f"surd({a},{b},{c},{d})"


Exact = Union[Fraction, QuadSurd]


class RealKind(Enum):
    """Kinds of exact real descriptions."""

    RATIONAL = "rational"
    SQRT = "sqrt"
    CBRT = "cbrt"
    QUAD_SURD = "quad_surd"
    DECIMAL = "decimal"
    PERIODIC_CF = "periodic_cf"


@dataclass(frozen=True)
class RealExpr:
    """Exact symbolic description of a real number.

    Use the classmethod constructors; they validate and canonicalize.
    """

    kind: RealKind
    args: tuple

    @classmethod
    def rational(cls, p: int, q: int = 1) -> "RealExpr":
        if q == 0:
            raise DomainError("Zero denominator in rational")
        f = Fraction(p, q)
        return cls(RealKind.RATIONAL, (f.numerator, f.denominator))

    @classmethod
    def sqrt(cls, n: int) -> "RealExpr":
        if n < 0:
            raise DomainError(f"sqrt of negative number {n}")
        return cls(RealKind.SQRT, (n,))

    @classmethod
    def cbrt(cls, n: int) -> "RealExpr":
        if n < 0:
            raise DomainError(f"cbrt argument must be non-negative, got {n}")
        return cls(RealKind.CBRT, (n,))

    @classmethod
    def quad_surd(cls, a: int, b: int, c: int, d: int) -> "RealExpr":
        """(a + b*sqrt(c))/d in canonical form (d > 0, gcd 1, squarefree c)."""
        if d == 0:
            raise DomainError("Zero denominator in quadratic surd")
        if c < 0:
            raise DomainError(f"sqrt of negative number {c}")
        value = QuadSurd.make(Fraction(a, d), Fraction(b, d), c)
        if isinstance(value, Fraction):
            return cls(RealKind.QUAD_SURD, (value.numerator, 0, 0, value.denominator))
        return cls(RealKind.QUAD_SURD, value.canonical())

    @classmethod
    def decimal(cls, digits: str, exponent: int = 0) -> "RealExpr":
        if not re.fullmatch(r"-?\d+", digits):
            raise DomainError(f"Decimal digit string expected, got {digits!r}")
        return cls(RealKind.DECIMAL, (digits, exponent))

    @classmethod
    def periodic_cf(cls, preperiod: list[int], period: list[int]) -> "RealExpr":
        if not period:
            raise DomainError("Continued fraction period must be non-empty")
        if not preperiod:
            raise DomainError("Continued fraction needs a leading partial quotient")
        if preperiod[0] < 0 or any(a < 1 for a in preperiod[1:]) or any(a < 1 for a in period):
            raise DomainError("Partial quotients must be >= 1 (the first may be 0)")
        return cls(RealKind.PERIODIC_CF, (tuple(preperiod), tuple(period)))

    def exact_value(self) -> Exact | None:
        """Exact value when the number is rational or quadratic, else None."""
        if self.kind == RealKind.RATIONAL:
            return Fraction(*self.args)
        if self.kind == RealKind.DECIMAL:
            digits, exponent = self.args
            return Fraction(int(digits)) * Fraction(10) ** exponent
        if self.kind == RealKind.SQRT:
            return QuadSurd.make(0, 1, self.args[0])
        if self.kind == RealKind.QUAD_SURD:
            a, b, c, d = self.args
            return QuadSurd.make(Fraction(a, d), Fraction(b, d), c)
        if self.kind == RealKind.CBRT:
            n = self.args[0]
            r = _icbrt(n)
            return Fraction(r) if r**3 == n else None
        return _periodic_cf_value(*self.args)

    def is_rational(self) -> bool:
        return isinstance(self.exact_value(), Fraction)

    def is_zero(self) -> bool:
        return self.exact_value() == 0

    def text(self) -> str:
        """Render back into the input grammar."""
        if self.kind == RealKind.RATIONAL:
            return f"{self.args[0]}/{self.args[1]}"
        if self.kind == RealKind.SQRT:
            return f"sqrt({self.args[0]})"
        if self.kind == RealKind.CBRT:
            return f"cbrt({self.args[0]})"
        if self.kind == RealKind.QUAD_SURD:
            return "surd({},{},{},{})".format(*self.args)
        if self.kind == RealKind.DECIMAL:
            digits, exponent = self.args
            return f"dec:{digits}e{exponent}"
        pre, per = self.args
        return "cf:[{};{}|{}]".format(
            pre[0], ",".join(map(str, pre[1:])), ",".join(map(str, per))
        )

    def __str__(self) -> str:
        return self.text()


def _periodic_cf_value(preperiod: tuple[int, ...], period: tuple[int, ...]) -> QuadSurd:
    """Closed form of an eventually periodic continued fraction (always quadratic)."""
    # Purely periodic tail y = [p1; ..., pk, y] solves y = (P*y + P')/(Q*y + Q').
    p_prev, p = 1, period[0]
    q_prev, q = 0, 1
    for a in period[1:]:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    # q*y^2 + (q_prev - p)*y - p_prev = 0, y > 1
    disc = (q_prev - p) ** 2 + 4 * q * p_prev
    y = QuadSurd.make(Fraction(p - q_prev, 2 * q), Fraction(1, 2 * q), disc)
    value: Exact = y
    for a in reversed(preperiod):
        value = a + 1 / value
    return value  # type: ignore[return-value]


_RATIONAL_RE = re.compile(r"(-?\d+)/(-?\d+)")
_ROOT_RE = re.compile(r"(sqrt|cbrt)\((-?\d+)\)")
_SURD_RE = re.compile(r"surd\((-?\d+),(-?\d+),(-?\d+),(-?\d+)\)")
_DEC_RE = re.compile(r"dec:(-?)(\d+)(?:\.(\d+))?(?:[eE]([+-]?\d+))?")
_CF_RE = re.compile(r"cf:\[(\d+);([\d,]*)\|([\d,]+)\]")


def _int_list(text: str) -> list[int]:
    if not text:
        return []
    parts = text.split(",")
    if any(not p for p in parts):
        raise ExpressionSyntaxError(f"Malformed integer list: {text!r}")
    return [int(p) for p in parts]


def parse_real(text: str) -> RealExpr:
    """Parse the real-number grammar.

    Grammar: ``sqrt(<uint>)``, ``cbrt(<uint>)``, ``<int>/<uint>``,
    ``dec:<digits>[e<int>]``, ``cf:[a0;a1,...|p1,...]`` and
    ``surd(a,b,c,d)`` for (a + b*sqrt(c))/d.

    Raises:
        ExpressionSyntaxError: text does not match the grammar
        DomainError: text matches but denotes no real (negative root, zero denominator)
    """
    s = text.strip().replace(" ", "")
    if m := _RATIONAL_RE.fullmatch(s):
        p, q = int(m.group(1)), int(m.group(2))
        if q < 0:
            raise ExpressionSyntaxError(f"Denominator must be unsigned in {text!r}")
        return RealExpr.rational(p, q)
    if m := _ROOT_RE.fullmatch(s):
        n = int(m.group(2))
        return RealExpr.sqrt(n) if m.group(1) == "sqrt" else RealExpr.cbrt(n)
    if m := _SURD_RE.fullmatch(s):
        return RealExpr.quad_surd(*(int(g) for g in m.groups()))
    if m := _DEC_RE.fullmatch(s):
        sign, whole, frac, exp = m.groups()
        frac = frac or ""
        exponent = int(exp or 0) - len(frac)
        return RealExpr.decimal(f"{sign}{whole}{frac}", exponent)
    if m := _CF_RE.fullmatch(s):
        pre = [int(m.group(1))] + _int_list(m.group(2))
        return RealExpr.periodic_cf(pre, _int_list(m.group(3)))
    raise ExpressionSyntaxError(f"Cannot parse real number {text!r}")


def parse_exact(text: str) -> Exact | float:
    """Parse an exact value: integer, p/q, surd(a,b,c,d), sqrt(n) or 'inf'."""
    s = text.strip().replace(" ", "").lower()
    if s in ("inf", "+inf", "infinity", "oo"):
        return math.inf
    if re.fullmatch(r"-?\d+", s):
        return Fraction(int(s))
    expr = parse_real(s)
    value = expr.exact_value()
    if value is None:
        raise DomainError(f"{text!r} is not a rational or quadratic number")
    return value


def format_exact(value: Exact | float | int) -> str:
    """Render an exact value as 'p/q', 'surd(a,b,c,d)' or 'inf'."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RationalEnclosure:
    """Closed interval [lo, hi] with rational endpoints containing a real."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise DomainError(f"Empty enclosure [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, value: Fraction | int) -> "RationalEnclosure":
        return cls(Fraction(value), Fraction(value))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value: Exact | int) -> bool:
        return self.lo <= value <= self.hi

    def scale(self, k: int | Fraction) -> "RationalEnclosure":
        a, b = self.lo * k, self.hi * k
        return RationalEnclosure(min(a, b), max(a, b))

    def shift(self, t: int | Fraction) -> "RationalEnclosure":
        return RationalEnclosure(self.lo + t, self.hi + t)

    def abs(self) -> "RationalEnclosure":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return RationalEnclosure(-self.hi, -self.lo)
        return RationalEnclosure(Fraction(0), max(-self.lo, self.hi))

    def square(self) -> "RationalEnclosure":
        a = self.abs()
        return RationalEnclosure(a.lo * a.lo, a.hi * a.hi)

    def __add__(self, other: "RationalEnclosure") -> "RationalEnclosure":
        return RationalEnclosure(self.lo + other.lo, self.hi + other.hi)

    def max_with(self, other: "RationalEnclosure") -> "RationalEnclosure":
        return RationalEnclosure(max(self.lo, other.lo), max(self.hi, other.hi))


def _sqrt_enclosure(n: int, bits: int) -> RationalEnclosure:
    s = math.isqrt(n << (2 * bits))
    scale = 1 << bits
    if s * s == n << (2 * bits):
        return RationalEnclosure.point(Fraction(s, scale))
    return RationalEnclosure(Fraction(s, scale), Fraction(s + 1, scale))


def _cbrt_enclosure(n: int, bits: int) -> RationalEnclosure:
    m = n << (3 * bits)
    s = _icbrt(m)
    scale = 1 << bits
    if s**3 == m:
        return RationalEnclosure.point(Fraction(s, scale))
    return RationalEnclosure(Fraction(s, scale), Fraction(s + 1, scale))


def cf_terms(preperiod: tuple[int, ...], period: tuple[int, ...]) -> Iterator[int]:
    """Partial quotients of an eventually periodic continued fraction."""
    yield from preperiod
    while True:
        yield from period


def convergents(x: RealExpr, count: int) -> list[Fraction]:
    """First ``count`` continued-fraction convergents of a periodic_cf expression."""
    if x.kind != RealKind.PERIODIC_CF:
        raise DomainError("convergents() needs a periodic_cf expression")
    result: list[Fraction] = []
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    terms = cf_terms(*x.args)
    for _ in range(count):
        a = next(terms)
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        result.append(Fraction(p, q))
    return result


def _cf_enclosure(x: RealExpr, terms: int) -> RationalEnclosure:
    c = convergents(x, terms + 1)
    a, b = c[-2], c[-1]
    return RationalEnclosure(min(a, b), max(a, b))


def _enclosure_at(x: RealExpr, attempt: int) -> RationalEnclosure:
    bits = _START_BITS << attempt
    if x.kind == RealKind.SQRT:
        return _sqrt_enclosure(x.args[0], bits)
    if x.kind == RealKind.CBRT:
        return _cbrt_enclosure(x.args[0], bits)
    if x.kind == RealKind.QUAD_SURD:
        a, b, c, d = x.args
        root = _sqrt_enclosure(c, bits) if b else RationalEnclosure.point(0)
        return root.scale(Fraction(b, d)).shift(Fraction(a, d))
    return _cf_enclosure(x, _START_TERMS << attempt)


def enclose(
    x: RealExpr, eps: Fraction | int, max_retries: int = DEFAULT_MAX_RETRIES
) -> RationalEnclosure:
    """Certified rational enclosure of ``x`` with width at most ``eps``.

    Working precision doubles on each retry; after ``max_retries`` doublings
    the call gives up.

    Raises:
        DomainError: eps is not positive
        PrecisionBudgetExceeded: retry cap reached before width <= eps
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if x.kind in (RealKind.RATIONAL, RealKind.DECIMAL):
        return RationalEnclosure.point(x.exact_value())  # type: ignore[arg-type]
    for attempt in range(max_retries + 1):
        enc = _enclosure_at(x, attempt)
        if enc.width <= eps:
            return enc
        logger.debug("enclose %s: width %.3e > eps after attempt %d", x, float(enc.width), attempt)
    raise PrecisionBudgetExceeded(
        f"Could not enclose {x} to width {eps} within {max_retries} refinements",
        {"expr": x.text(), "eps": str(eps), "retries": max_retries},
    )


def nearest_int(v: RationalEnclosure) -> tuple[int, bool]:
    """Nearest integer to the enclosed real, and whether it is certain."""
    n_lo = math.floor(v.lo + Fraction(1, 2))
    n_hi = math.floor(v.hi + Fraction(1, 2))
    if v.width < Fraction(1, 2) and n_lo == n_hi:
        return n_lo, True
    return math.floor(v.mid + Fraction(1, 2)), False


def approx_float(x: RealExpr) -> float:
    """Double-precision value of ``x`` (not certified)."""
    return float(enclose(x, Fraction(1, 1 << 60)).mid)
