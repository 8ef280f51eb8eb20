"""Minimal points of a pair (xi, eta) under a height or norm gauge.

Enumeration runs in two stages. A numpy float64 pass over chunks of the
x0 range keeps every point whose approximate error could still be a
record; chunks run on a thread pool. A sequential pass then certifies
those candidates with rational enclosures, so the result does not depend
on how the range was partitioned.
"""

import itertools
import json
import logging
from bisect import bisect_left
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
from pydantic import ValidationError

from dioph_spectrum.errors import (
    DegeneratePair,
    DomainError,
    FormatError,
    IoError,
    PrecisionBudgetExceeded,
)
from dioph_spectrum.reals import (
    DEFAULT_MAX_RETRIES,
    Exact,
    QuadSurd,
    RationalEnclosure,
    RealExpr,
    RealKind,
    approx_float,
    enclose,
    format_exact,
    nearest_int,
    parse_exact,
    parse_real,
)
from dioph_spectrum.schemas import PointRecord, PointsHeader

logger = logging.getLogger(__name__)

DEFAULT_PRECISION = Fraction(1, 10**15)
CHUNK_SIZE = 1 << 16
_BASE_BITS = 64
LOG_PREC = 113
VERIFY_REACH = 2


class Gauge(str, Enum):
    """Choice of (N, Delta) pair."""

    HEIGHT = "HEIGHT"
    NORM = "NORM"


@dataclass(frozen=True)
class PairTarget:
    """The pair (xi, eta); neither coordinate may be zero."""

    xi: RealExpr
    eta: RealExpr

    def __post_init__(self) -> None:
        for name, value in (("xi", self.xi), ("eta", self.eta)):
            if value.is_zero():
                raise DomainError(f"{name} must be non-zero", {name: value.text()})

    @classmethod
    def parse(cls, xi: str, eta: str) -> "PairTarget":
        return cls(parse_real(xi), parse_real(eta))

    def __str__(self) -> str:
        return f"({self.xi}, {self.eta})"


@dataclass(frozen=True)
class MinimalPoint:
    index: int
    x: tuple[int, int, int]
    log_X: float
    log_Delta: float


@dataclass(frozen=True)
class MinimalPointSequence:
    """Minimal points with N(x) <= x0_max, in increasing order of N."""

    pair: PairTarget
    gauge: Gauge
    points: tuple[MinimalPoint, ...]
    x0_max: int
    precision: Fraction = DEFAULT_PRECISION

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[MinimalPoint]:
        return iter(self.points)

    def __getitem__(self, i: int) -> MinimalPoint:
        return self.points[i]

    @property
    def log_X(self) -> np.ndarray:
        return np.array([p.log_X for p in self.points], dtype=np.float64)

    @property
    def log_Delta(self) -> np.ndarray:
        return np.array([p.log_Delta for p in self.points], dtype=np.float64)


def round15(value: mpmath.mpf) -> float:
    """Round to 15 significant digits so the decimal rendering round-trips."""
    return float(mpmath.nstr(value, 15, strip_zeros=False))


def mpf_of(value: Fraction) -> mpmath.mpf:
    return mpmath.mpf(value.numerator) / value.denominator


class PairEnclosures:
    """Rational enclosures of (xi, eta), of width at most 2^-(64 * 2^level) at ``level``."""

    def __init__(self, pair: PairTarget, max_retries: int = DEFAULT_MAX_RETRIES):
        self.pair = pair
        self.max_retries = max_retries
        self._levels: list[tuple[RationalEnclosure, RationalEnclosure]] = []

    def __call__(self, level: int) -> tuple[RationalEnclosure, RationalEnclosure]:
        while len(self._levels) <= level:
            eps = Fraction(1, 1 << (_BASE_BITS << len(self._levels)))
            self._levels.append(
                (
                    enclose(self.pair.xi, eps, self.max_retries),
                    enclose(self.pair.eta, eps, self.max_retries),
                )
            )
        return self._levels[level]


class _Certifier:
    """Exact decisions on candidate points, refining enclosures on demand."""

    def __init__(self, pair: PairTarget, gauge: Gauge, max_retries: int):
        self.pair = pair
        self.gauge = gauge
        self.max_retries = max_retries
        self.coords = PairEnclosures(pair, max_retries)
        self._exact: tuple[Exact, Exact] | None = None
        xi_v, eta_v = pair.xi.exact_value(), pair.eta.exact_value()
        if xi_v is not None and eta_v is not None:
            self._exact = (xi_v, eta_v)

    def measure(self, x: tuple[int, int, int], level: int) -> RationalEnclosure:
        """Enclosure of Delta (HEIGHT) or Delta squared (NORM)."""
        xi, eta = self.coords(level)
        x0, x1, x2 = x
        c1 = xi.scale(x0).shift(-x1)
        c2 = eta.scale(x0).shift(-x2)
        if self.gauge == Gauge.HEIGHT:
            return c1.abs().max_with(c2.abs())
        c3 = eta.scale(x1) + xi.scale(-x2)
        return c1.square() + c2.square() + c3.square()

    def exact_measure(self, x: tuple[int, int, int]) -> Exact | None:
        if self._exact is None:
            return None
        xi, eta = self._exact
        x0, x1, x2 = x
        try:
            c1, c2 = x0 * xi - x1, x0 * eta - x2
            if self.gauge == Gauge.HEIGHT:
                return max(abs(c1), abs(c2))
            c3 = x1 * eta - x2 * xi
            return c1 * c1 + c2 * c2 + c3 * c3
        except DomainError:
            return None

    def nearest(self, x0: int) -> tuple[int, int]:
        for level in range(self.max_retries + 1):
            xi, eta = self.coords(level)
            n1, ok1 = nearest_int(xi.scale(x0))
            n2, ok2 = nearest_int(eta.scale(x0))
            if ok1 and ok2:
                return n1, n2
        raise PrecisionBudgetExceeded(
            f"Nearest integers of x0*xi, x0*eta undecidable at x0={x0}",
            {"x0": x0, "retries": self.max_retries},
        )

    def less(self, x: tuple[int, int, int], y: tuple[int, int, int]) -> bool:
        """True iff Delta(x) < Delta(y) strictly; ties count as not less."""
        for level in range(self.max_retries + 1):
            a, b = self.measure(x, level), self.measure(y, level)
            if a.hi < b.lo:
                return True
            if a.lo >= b.hi:
                return False
        ea, eb = self.exact_measure(x), self.exact_measure(y)
        if ea is not None and eb is not None:
            return ea < eb
        logger.warning("Delta of %s and %s indistinguishable; treating as a tie", x, y)
        return False

    def logs(self, x: tuple[int, int, int], precision: Fraction) -> tuple[float, float]:
        """Certified (log N, log Delta) rounded to 15 significant digits."""
        for level in range(self.max_retries + 1):
            m = self.measure(x, level)
            if m.hi == 0:
                raise DegeneratePair(f"Delta vanishes at {x}", {"x": list(x)})
            # |log hi - log lo| <= width / lo
            if m.lo > 0 and m.width <= precision * m.lo:
                break
        else:
            raise PrecisionBudgetExceeded(
                f"Could not certify log Delta at {x} to {precision}",
                {"x": list(x), "retries": self.max_retries},
            )
        with mpmath.workprec(LOG_PREC):
            if self.gauge == Gauge.HEIGHT:
                log_n = mpmath.log(abs(x[0]))
                log_d = mpmath.log(mpf_of(m.mid))
            else:
                log_n = mpmath.log(x[0] ** 2 + x[1] ** 2 + x[2] ** 2) / 2
                log_d = mpmath.log(mpf_of(m.mid)) / 2
            return round15(log_n), round15(log_d)


def _check_degenerate(pair: PairTarget, x0_max: int) -> None:
    for name, expr in (("xi", pair.xi), ("eta", pair.eta)):
        value = expr.exact_value()
        if isinstance(value, Fraction) and value.denominator <= x0_max:
            raise DegeneratePair(
                f"{name} = {value} is rational: x0 = {value.denominator} gives an exact zero",
                {name: str(value), "x0": value.denominator},
            )


def _height_chunk(start: int, stop: int, xi: float, eta: float, slack: float) -> list[int]:
    x0 = np.arange(start, stop, dtype=np.float64)
    a, b = x0 * xi, x0 * eta
    d = np.maximum(np.abs(a - np.rint(a)), np.abs(b - np.rint(b)))
    prev_min = np.minimum.accumulate(np.concatenate(([np.inf], d[:-1])))
    return (np.nonzero(d < prev_min + slack)[0] + start).tolist()


_OFFSETS = np.array(list(itertools.product((-1, 0, 1), repeat=2)), dtype=np.int64)


def _norm_chunk(
    start: int, stop: int, xi: float, eta: float, slack: float, n_max: int
) -> list[tuple[int, int, int]]:
    base = np.arange(start, stop, dtype=np.int64)
    n1 = np.rint(base * xi).astype(np.int64)
    n2 = np.rint(base * eta).astype(np.int64)
    x0 = np.repeat(base, len(_OFFSETS))
    x1 = np.repeat(n1, len(_OFFSETS)) + np.tile(_OFFSETS[:, 0], len(base))
    x2 = np.repeat(n2, len(_OFFSETS)) + np.tile(_OFFSETS[:, 1], len(base))
    n2sq = x0 * x0 + x1 * x1 + x2 * x2
    keep = n2sq <= n_max * n_max
    x0, x1, x2, n2sq = x0[keep], x1[keep], x2[keep], n2sq[keep]
    c1 = x0 * xi - x1
    c2 = x0 * eta - x2
    c3 = x1 * eta - x2 * xi
    d = c1 * c1 + c2 * c2 + c3 * c3
    order = np.lexsort((x2, x1, x0, n2sq))
    d = d[order]
    prev_min = np.minimum.accumulate(np.concatenate(([np.inf], d[:-1])))
    sel = order[d < prev_min + slack]
    return list(zip(x0[sel].tolist(), x1[sel].tolist(), x2[sel].tolist()))


def _chunks(x0_max: int) -> list[tuple[int, int]]:
    return [(s, min(s + CHUNK_SIZE, x0_max + 1)) for s in range(1, x0_max + 1, CHUNK_SIZE)]


def enumerate_points(
    pair: PairTarget,
    x0_max: int,
    gauge: Gauge = Gauge.HEIGHT,
    precision: Fraction = DEFAULT_PRECISION,
    threads: int = 1,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> MinimalPointSequence:
    """All minimal points of ``pair`` with N(x) <= x0_max.

    Args:
        pair: Target pair
        x0_max: Enumeration bound on N(x)
        gauge: HEIGHT or NORM
        precision: Absolute error bound on the certified logarithms
        threads: Worker threads for the float prefilter
        max_retries: Enclosure refinement cap

    Raises:
        DegeneratePair: an exact zero error component occurs in range
        PrecisionBudgetExceeded: a nearest-integer or log decision is unresolvable
    """
    precision = Fraction(precision)
    if precision <= 0:
        raise DomainError(f"precision must be positive, got {precision}")
    if x0_max < 1:
        return MinimalPointSequence(pair, gauge, (), max(x0_max, 0), precision)
    _check_degenerate(pair, x0_max)

    xi_f, eta_f = approx_float(pair.xi), approx_float(pair.eta)
    scale = abs(xi_f) + abs(eta_f) + 1
    chunks = _chunks(x0_max)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        if gauge == Gauge.HEIGHT:
            slack = 4 * x0_max * scale * 2.0**-52
            parts = pool.map(lambda c: _height_chunk(c[0], c[1], xi_f, eta_f, slack), chunks)
            candidates = [x0 for part in parts for x0 in part]
        else:
            slack = 8 * x0_max * scale * scale * 2.0**-52
            parts = pool.map(
                lambda c: _norm_chunk(c[0], c[1], xi_f, eta_f, slack, x0_max), chunks
            )
            triples = [t for part in parts for t in part]
            triples.sort(key=lambda t: (t[0] ** 2 + t[1] ** 2 + t[2] ** 2, t))
    logger.debug(
        "prefilter kept %d candidates over %d chunks",
        len(candidates) if gauge == Gauge.HEIGHT else len(triples),
        len(chunks),
    )

    cert = _Certifier(pair, gauge, max_retries)
    records: list[tuple[int, int, int]] = []
    if gauge == Gauge.HEIGHT:
        for x0 in candidates:
            n1, n2 = cert.nearest(x0)
            x = (x0, n1, n2)
            if not records or cert.less(x, records[-1]):
                records.append(x)
    else:
        for x in triples:
            if not records or cert.less(x, records[-1]):
                # a smaller Delta at the same norm supersedes the previous record
                if records and _norm_sq(records[-1]) == _norm_sq(x):
                    records.pop()
                records.append(x)

    points = []
    for i, x in enumerate(records):
        log_x, log_d = cert.logs(x, precision)
        points.append(MinimalPoint(i, x, log_x, log_d))
    logger.info(
        "%d minimal points for %s up to %d (%s)",
        len(points), pair, x0_max, gauge.value,
        extra={"points": len(points), "x0_max": x0_max, "gauge": gauge.value},
    )
    return MinimalPointSequence(pair, gauge, tuple(points), x0_max, precision)


def _norm_sq(x: tuple[int, int, int]) -> int:
    return x[0] ** 2 + x[1] ** 2 + x[2] ** 2


def _mp_value(expr: RealExpr) -> mpmath.mpf:
    """Closed-form high-precision value, independent of :func:`enclose`."""
    if expr.kind == RealKind.SQRT:
        return mpmath.sqrt(expr.args[0])
    if expr.kind == RealKind.CBRT:
        return mpmath.cbrt(expr.args[0])
    if expr.kind == RealKind.QUAD_SURD:
        a, b, c, d = expr.args
        return (a + b * mpmath.sqrt(c)) / d
    value = expr.exact_value()
    if isinstance(value, QuadSurd):
        return mpf_of(value.rational_part) + mpf_of(value.surd_part) * mpmath.sqrt(value.radicand)
    return mpf_of(value)  # type: ignore[arg-type]


def verify_minimality(seq: MinimalPointSequence, check_x0_max: int) -> bool:
    """Re-check the optimality property against an independent scan.

    The scan takes every x0 up to ``check_x0_max`` with x1, x2 within
    VERIFY_REACH of the nearest integers to x0*xi, x0*eta, a wider box than
    the enumeration uses. For every listed point x_i, no scanned z with
    N(z) < N(x_{i+1}) may have Delta(z) < Delta(x_i). Delta of each listed
    point is recomputed from its coordinates.
    """
    if not seq.points:
        return True
    if check_x0_max > seq.x0_max:
        logger.warning("check bound %d exceeds enumeration bound %d", check_x0_max, seq.x0_max)
        check_x0_max = seq.x0_max
    height = seq.gauge == Gauge.HEIGHT
    window = range(-VERIFY_REACH, VERIFY_REACH + 1)

    with mpmath.workdps(40):
        xi, eta = _mp_value(seq.pair.xi), _mp_value(seq.pair.eta)

        def size(x: tuple[int, int, int]) -> int:
            return abs(x[0]) if height else _norm_sq(x)

        def delta(x: tuple[int, int, int]) -> mpmath.mpf:
            c1, c2 = x[0] * xi - x[1], x[0] * eta - x[2]
            if height:
                return max(abs(c1), abs(c2))
            c3 = x[1] * eta - x[2] * xi
            return mpmath.sqrt(c1 * c1 + c2 * c2 + c3 * c3)

        limit = check_x0_max if height else check_x0_max**2
        scanned: list[tuple[int, mpmath.mpf]] = []
        for x0 in range(1, check_x0_max + 1):
            m1, m2 = int(mpmath.nint(x0 * xi)), int(mpmath.nint(x0 * eta))
            for o1, o2 in itertools.product(window, repeat=2):
                z = (x0, m1 + o1, m2 + o2)
                if size(z) <= limit:
                    scanned.append((size(z), delta(z)))
        scanned.sort(key=lambda e: e[0])
        sizes = [s for s, _ in scanned]
        running: list[mpmath.mpf] = []
        for _, d in scanned:
            running.append(d if not running else min(running[-1], d))

        for i, p in enumerate(seq.points):
            if size(p.x) > limit:
                break
            bound = size(seq.points[i + 1].x) if i + 1 < len(seq) else limit + 1
            k = bisect_left(sizes, min(bound, limit + 1))
            if k and running[k - 1] < delta(p.x):
                logger.debug("point %d at %s is beaten below N=%s", i, p.x, bound)
                return False
    return True


def save_points(seq: MinimalPointSequence, path: str | Path) -> None:
    """Write a points file: one header line, then one JSON record per point."""
    header = PointsHeader(
        xi=seq.pair.xi.text(),
        eta=seq.pair.eta.text(),
        gauge=seq.gauge.value,
        x0_max=seq.x0_max,
        precision=format_exact(seq.precision),
    )
    lines = [json.dumps(header.model_dump())]
    for p in seq.points:
        record = PointRecord(i=p.index, x=p.x, log_x=p.log_X, log_delta=p.log_Delta)
        lines.append(json.dumps(record.model_dump()))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise IoError(f"Cannot write points file {path}: {e}") from e


def load_points(path: str | Path) -> MinimalPointSequence:
    """Read a points file written by :func:`save_points`.

    Raises:
        IoError: file cannot be read
        FormatError: schema mismatch or non-monotone records
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoError(f"Cannot read points file {path}: {e}") from e
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError(f"Points file {path} has no header line")

    try:
        header = PointsHeader.model_validate_json(lines[0])
        records = [PointRecord.model_validate_json(line) for line in lines[1:]]
    except ValidationError as e:
        raise FormatError(f"Points file {path} does not match the schema: {e}") from e

    points = []
    for k, r in enumerate(records):
        if r.i != k:
            raise FormatError(f"Record {k} has index {r.i}", {"line": k + 2})
        if points and not (r.log_x > points[-1].log_X and r.log_delta < points[-1].log_Delta):
            raise FormatError(
                f"Record {k} breaks monotonicity of log_x / log_delta", {"line": k + 2}
            )
        points.append(MinimalPoint(r.i, tuple(r.x), r.log_x, r.log_delta))

    precision = parse_exact(header.precision)
    if not isinstance(precision, Fraction) or precision <= 0:
        raise FormatError(f"precision must be a positive rational, got {header.precision}")
    return MinimalPointSequence(
        pair=PairTarget.parse(header.xi, header.eta),
        gauge=Gauge(header.gauge),
        points=tuple(points),
        x0_max=header.x0_max,
        precision=precision,
    )


def log_scale_check(seq: MinimalPointSequence) -> bool:
    """True iff log_X strictly increases and log_Delta strictly decreases."""
    lx, ld = seq.log_X, seq.log_Delta
    return bool(np.all(np.diff(lx) > 0) and np.all(np.diff(ld) < 0))


def gauge_log_distance(a: MinimalPointSequence, b: MinimalPointSequence) -> float:
    """Largest gap between the log-error staircases of two gauges.

    Both sequences define a step function X -> log Delta (the error of the
    last minimal point with log N <= log X). The result is the sup of their
    difference over the common range; it stays bounded for comparable gauges.
    """
    if not a.points or not b.points:
        return 0.0
    grid = np.union1d(a.log_X, b.log_X)
    grid = grid[grid >= max(a.log_X[0], b.log_X[0])]

    def step(seq: MinimalPointSequence) -> np.ndarray:
        idx = np.searchsorted(seq.log_X, grid, side="right") - 1
        return seq.log_Delta[idx]

    return float(np.max(np.abs(step(a) - step(b)))) if len(grid) else 0.0
