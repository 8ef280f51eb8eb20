"""Tests for exact real inputs and enclosures."""

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dioph_spectrum.errors import DomainError, ExpressionSyntaxError, PrecisionBudgetExceeded
from dioph_spectrum.reals import (
    QuadSurd,
    RationalEnclosure,
    RealExpr,
    RealKind,
    convergents,
    enclose,
    format_exact,
    nearest_int,
    parse_exact,
    parse_real,
)

GOLDEN = QuadSurd.make(Fraction(1, 2), Fraction(1, 2), 5)


class TestParseReal:
    """Tests for the real-number grammar."""

    def test_sqrt(self):
        """Test sqrt maps to its constructor."""
        assert parse_real("sqrt(2)") == RealExpr.sqrt(2)

    def test_rational_identity(self):
        """Test p/q parses to a reduced rational."""
        assert parse_real("3/1") == RealExpr.rational(3, 1)
        assert parse_real("6/4").args == (3, 2)

    def test_golden_continued_fraction(self):
        """Test [1; 1, 1, ...] denotes the golden ratio."""
        expr = parse_real("cf:[1;|1]")
        assert expr.kind == RealKind.PERIODIC_CF
        assert expr.exact_value() == GOLDEN
        assert convergents(expr, 4) == [1, 2, Fraction(3, 2), Fraction(5, 3)]

    def test_decimal(self):
        """Test decimals become exact rationals."""
        expr = parse_real("dec:1.25")
        assert expr.exact_value() == Fraction(5, 4)

    def test_surd_canonical(self):
        """Test surd(a,b,c,d) is stored in canonical form."""
        expr = parse_real("surd(-2,2,5,4)")
        assert expr.args == (-1, 1, 5, 2)

    def test_text_round_trip(self):
        """Test text() renders back into the grammar."""
        for text in ("sqrt(2)", "cbrt(2)", "3/7", "surd(-1,1,5,2)", "cf:[1;2|1,2]"):
            assert parse_real(parse_real(text).text()) == parse_real(text)

    @pytest.mark.parametrize("text", ["sqrt2", "1//2", "cf:[1;|]", "", "pi"])
    def test_malformed(self, text):
        """Test malformed text raises ExpressionSyntaxError."""
        with pytest.raises(ExpressionSyntaxError):
            parse_real(text)

    def test_negative_sqrt(self):
        """Test sqrt of a negative number is a domain error."""
        with pytest.raises(DomainError):
            parse_real("sqrt(-2)")

    def test_zero_denominator(self):
        """Test a zero denominator is a domain error."""
        with pytest.raises(DomainError):
            parse_real("1/0")


class TestParseExact:
    """Tests for exact-value parsing."""

    def test_integer_and_rational(self):
        """Test integers and p/q."""
        assert parse_exact("2") == 2
        assert parse_exact("9/20") == Fraction(9, 20)

    def test_infinity(self):
        """Test inf parses to float infinity."""
        assert parse_exact("inf") == math.inf

    def test_surd(self):
        """Test the golden-ratio conjugate as a surd."""
        value = parse_exact("surd(-1,1,5,2)")
        assert value == GOLDEN - 1

    def test_cube_root_rejected(self):
        """Test non-quadratic irrationals are not exact values."""
        with pytest.raises(DomainError):
            parse_exact("cbrt(2)")

    def test_format(self):
        """Test format_exact renderings."""
        assert format_exact(Fraction(2, 3)) == "2/3"
        assert format_exact(math.inf) == "inf"
        assert format_exact(GOLDEN - 1) == "surd(-1,1,5,2)"


class TestQuadSurd:
    """Tests for exact arithmetic in Q(sqrt(c))."""

    def test_golden_identity(self):
        """Test x^2 = 1 - x for x = gamma - 1."""
        x = GOLDEN - 1
        assert x * x == 1 - x
        assert x * x / (1 - x) == 1

    def test_collapse_to_fraction(self):
        """Test results with a vanishing surd part are Fractions."""
        s = QuadSurd.make(0, 1, 2)
        assert isinstance(s * s, Fraction)
        assert s * s == 2

    def test_perfect_square_radicand(self):
        """Test make() returns a Fraction for square radicands."""
        assert QuadSurd.make(1, 2, 9) == 7

    def test_mixed_fields_rejected(self):
        """Test sqrt(2) and sqrt(3) cannot be combined exactly."""
        with pytest.raises(DomainError):
            QuadSurd.make(0, 1, 2) + QuadSurd.make(0, 1, 3)

    def test_ordering(self):
        """Test comparisons against Fractions."""
        x = GOLDEN - 1
        assert Fraction(61, 100) < x < Fraction(62, 100)
        assert x.sign() == 1
        assert (-x).sign() == -1

    @given(
        st.fractions(min_value=-10, max_value=10, max_denominator=100),
        st.fractions(min_value=-10, max_value=10, max_denominator=100).filter(lambda r: r != 0),
        st.sampled_from([2, 3, 5, 7]),
        st.fractions(min_value=-10, max_value=10, max_denominator=100),
    )
    def test_arithmetic_matches_float(self, p, r, c, t):
        """Test sums and products agree with float evaluation."""
        x = QuadSurd.make(p, r, c)
        assert float(x + t) == pytest.approx(float(x) + float(t), abs=1e-9)
        assert float(x * t) == pytest.approx(float(x) * float(t), abs=1e-9)
        assert float(x * x) == pytest.approx(float(x) ** 2, rel=1e-9, abs=1e-9)

    @given(
        st.fractions(min_value=-10, max_value=10, max_denominator=100),
        st.fractions(min_value=-10, max_value=10, max_denominator=100).filter(lambda r: r != 0),
    )
    def test_sign_matches_float(self, p, r):
        """Test the exact sign agrees with the float value."""
        x = QuadSurd.make(p, r, 5)
        assert x.sign() == (1 if float(x) > 0 else -1)


class TestEnclose:
    """Tests for certified enclosures."""

    def test_rational_point(self):
        """Test a rational encloses to a point."""
        enc = enclose(RealExpr.rational(22, 7), Fraction(1, 10))
        assert enc.lo == enc.hi == Fraction(22, 7)

    def test_sqrt2(self):
        """Test sqrt(2) to width 1/100."""
        enc = enclose(RealExpr.sqrt(2), Fraction(1, 100))
        assert enc.width <= Fraction(1, 100)
        assert enc.lo * enc.lo <= 2 <= enc.hi * enc.hi

    def test_golden_cf(self):
        """Test the golden ratio from convergents."""
        enc = enclose(parse_real("cf:[1;|1]"), Fraction(1, 10))
        assert enc.width <= Fraction(1, 10)
        assert enc.contains(GOLDEN)

    def test_cbrt(self):
        """Test cube roots bracket the value."""
        enc = enclose(RealExpr.cbrt(2), Fraction(1, 10**30))
        assert enc.lo**3 <= 2 <= enc.hi**3

    def test_budget_exceeded(self):
        """Test a tiny width with no retries exhausts the budget."""
        with pytest.raises(PrecisionBudgetExceeded):
            enclose(RealExpr.sqrt(2), Fraction(1, 10**50), max_retries=0)

    def test_non_positive_eps(self):
        """Test eps must be positive."""
        with pytest.raises(DomainError):
            enclose(RealExpr.sqrt(2), 0)


class TestNearestInt:
    """Tests for nearest-integer decisions."""

    def test_certain(self):
        """Test intervals inside (n - 1/2, n + 1/2)."""
        v = RationalEnclosure(Fraction(14, 10), Fraction(15, 10) - Fraction(1, 1000))
        assert nearest_int(v) == (1, True)
        v = RationalEnclosure(Fraction(282, 100), Fraction(283, 100))
        assert nearest_int(v) == (3, True)

    def test_ambiguous(self):
        """Test an interval straddling 3/2."""
        v = RationalEnclosure(Fraction(149, 100), Fraction(151, 100))
        _, certain = nearest_int(v)
        assert certain is False

    def test_empty_enclosure(self):
        """Test lo > hi is rejected."""
        with pytest.raises(DomainError):
            RationalEnclosure(Fraction(1), Fraction(0))
