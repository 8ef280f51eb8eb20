"""Successive minima of the parametric bodies attached to u = (1, xi, eta).

For q >= 0 the body C(q) is {x : |x| <= 1, |x.u| <= e^-q} and the dual
body C*(q) is {x : |x| <= e^q, |x ^ u| <= 1}. L_j(q) and L*_j(q) are the
logarithms of their successive minima with respect to Z^3. Both are found
by enumerating lattice points inside a dilate of the body: a numpy float
pass collects candidates with some slack, the candidates are ranked by
certified logarithms of their gauge, and a greedy pass keeps the first
three linearly independent ones. The dilation starts small and doubles
until three independent points fit, so no minimum is missed.
"""

import csv
import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from dioph_spectrum.errors import (
    DegeneratePair,
    DomainError,
    InsufficientData,
    IoError,
    PrecisionBudgetExceeded,
    QTooLarge,
    RangeError,
)
from dioph_spectrum.exponents import HasLogs
from dioph_spectrum.minimal_points import (
    DEFAULT_PRECISION,
    LOG_PREC,
    Gauge,
    PairEnclosures,
    PairTarget,
    mpf_of,
    round15,
)
from dioph_spectrum.reals import DEFAULT_MAX_RETRIES, Exact, RationalEnclosure, approx_float
from dioph_spectrum.three_system import PLFunction, kappa

logger = logging.getLogger(__name__)

DEFAULT_Q_MAX = 30.0
CSV_DIGITS = 9
CSV_HEADER = ("q", "L1", "L2", "L3", "L1s", "L2s", "L3s", "sum_gap", "dual_gap")
CHUNK_SIZE = 1 << 18
MAX_DILATIONS = 48

Triple = tuple[int, int, int]


def _cross(a: Triple, b: Triple) -> Triple:
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _det(a: Triple, b: Triple, c: Triple) -> int:
    x = _cross(b, c)
    return a[0] * x[0] + a[1] * x[1] + a[2] * x[2]


def _norm_sq(x: Triple) -> int:
    return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]


class _Direction:
    """Certified logarithms of |x.u| and |x ^ u| for u = (1, xi, eta)."""

    def __init__(self, pair: PairTarget, max_retries: int):
        self.coords = PairEnclosures(pair, max_retries)
        self.max_retries = max_retries

    def dot(self, x: Triple, level: int) -> RationalEnclosure:
        xi, eta = self.coords(level)
        return (xi.scale(x[1]) + eta.scale(x[2])).shift(x[0])

    def wedge_sq(self, x: Triple, level: int) -> RationalEnclosure:
        xi, eta = self.coords(level)
        x0, x1, x2 = x
        c1 = xi.scale(x0).shift(-x1)
        c2 = eta.scale(x0).shift(-x2)
        c3 = eta.scale(x1) + xi.scale(-x2)
        return c1.square() + c2.square() + c3.square()

    def _log(self, x: Triple, measure, precision: Fraction, what: str) -> mpmath.mpf:
        for level in range(self.max_retries + 1):
            m = measure(x, level)
            if m.hi == 0:
                raise DegeneratePair(f"{what} vanishes at {x}", {"x": list(x)})
            if m.lo > 0 and m.width <= precision * m.lo:
                break
        else:
            raise PrecisionBudgetExceeded(
                f"Could not certify log {what} at {x} to {precision}",
                {"x": list(x), "retries": self.max_retries},
            )
        with mpmath.workprec(LOG_PREC):
            return mpmath.log(mpf_of(m.mid))

    def log_dot(self, x: Triple, precision: Fraction) -> mpmath.mpf:
        return self._log(x, lambda y, lv: self.dot(y, lv).abs(), precision, "|x.u|")

    def log_wedge(self, x: Triple, precision: Fraction) -> mpmath.mpf:
        # precision on the square halves under the square root
        return self._log(x, self.wedge_sq, precision, "|x^u|") / 2


def _log_norm(x: Triple) -> mpmath.mpf:
    with mpmath.workprec(LOG_PREC):
        return mpmath.log(_norm_sq(x)) / 2


def _check_q(q: float, q_max: float) -> None:
    if q < 0:
        raise DomainError(f"q must be non-negative, got {q}")
    if q > q_max:
        raise QTooLarge(
            f"q={q:g} exceeds the enumeration cap {q_max:g}", {"q": q, "q_max": q_max}
        )


def _greedy_minima(ranked: Sequence[tuple[mpmath.mpf, Triple]]) -> list[tuple[mpmath.mpf, Triple]]:
    """First three linearly independent entries of a ranked candidate list."""
    chosen: list[tuple[mpmath.mpf, Triple]] = []
    for value, x in ranked:
        if not chosen:
            chosen.append((value, x))
        elif len(chosen) == 1:
            if _cross(chosen[0][1], x) != (0, 0, 0):
                chosen.append((value, x))
        elif _det(chosen[0][1], chosen[1][1], x) != 0:
            chosen.append((value, x))
            break
    return chosen


def _primal_chunk(
    rows: np.ndarray, m: int, xi: float, eta: float, r: float, width: float, err: float
) -> list[Triple]:
    """Points with |x| <= r and |x.u| <= width for x1 in ``rows``, |x2| <= m."""
    cols = np.arange(-m, m + 1, dtype=np.int64)
    x1 = np.repeat(rows, len(cols))
    x2 = np.tile(cols, len(rows))
    t = x1 * xi + x2 * eta
    base = np.rint(-t).astype(np.int64)
    k = math.ceil(width) + 1
    out: list[Triple] = []
    for off in range(-k, k + 1):
        x0 = base + off
        nsq = x0 * x0 + x1 * x1 + x2 * x2
        keep = (np.abs(x0 + t) <= width + err) & (nsq <= r * r * (1 + 1e-9)) & (nsq > 0)
        out.extend(zip(x0[keep].tolist(), x1[keep].tolist(), x2[keep].tolist()))
    return out


def _dual_chunk(
    start: int, stop: int, k: int, xi: float, eta: float, r: float, radius: float, err: float
) -> list[Triple]:
    """Points with |x ^ u| <= r and |x| <= radius for x0 in [start, stop)."""
    base = np.arange(start, stop, dtype=np.int64)
    n1 = np.rint(base * xi).astype(np.int64)
    n2 = np.rint(base * eta).astype(np.int64)
    out: list[Triple] = []
    bound = (r + err) ** 2
    for o1 in range(-k, k + 1):
        for o2 in range(-k, k + 1):
            x1, x2 = n1 + o1, n2 + o2
            c1 = base * xi - x1
            c2 = base * eta - x2
            c3 = x1 * eta - x2 * xi
            nsq = (base * base + x1 * x1 + x2 * x2).astype(np.float64)
            keep = (c1 * c1 + c2 * c2 + c3 * c3 <= bound) & (nsq <= radius * radius * (1 + 1e-9))
            keep &= nsq > 0
            out.extend(zip(base[keep].tolist(), x1[keep].tolist(), x2[keep].tolist()))
    return out


def _run_chunks(fn, chunks: list, threads: int) -> list[Triple]:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = pool.map(fn, chunks)
        return [x for part in parts for x in part]


def successive_minima(
    pair: PairTarget,
    q: float,
    precision: Fraction = DEFAULT_PRECISION,
    *,
    q_max: float = DEFAULT_Q_MAX,
    threads: int = 1,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> tuple[float, float, float]:
    """(L1, L2, L3) at q for the gauge F_q(x) = max(|x|, e^q |x.u|).

    Raises:
        QTooLarge: q above ``q_max``
        PrecisionBudgetExceeded: a candidate's gauge cannot be certified
    """
    _check_q(q, q_max)
    precision = Fraction(precision)
    direction = _Direction(pair, max_retries)
    xi, eta = approx_float(pair.xi), approx_float(pair.eta)
    scale = abs(xi) + abs(eta) + 1
    r = 2 * math.exp(q / 3)
    for _ in range(MAX_DILATIONS):
        m = math.ceil(r)
        width = r * math.exp(-q)
        err = 8 * m * scale * 2.0**-52
        rows = np.arange(-m, m + 1, dtype=np.int64)
        per_chunk = max(1, CHUNK_SIZE // (2 * m + 1))
        chunks = [rows[i : i + per_chunk] for i in range(0, len(rows), per_chunk)]
        candidates = _run_chunks(
            lambda c: _primal_chunk(c, m, xi, eta, r, width, err), chunks, threads
        )
        with mpmath.workprec(LOG_PREC):
            log_r = mpmath.log(r)
            ranked = []
            for x in candidates:
                value = max(_log_norm(x), q + direction.log_dot(x, precision))
                if value <= log_r:
                    ranked.append((value, x))
        ranked.sort(key=lambda e: (e[0], e[1]))
        chosen = _greedy_minima(ranked)
        if len(chosen) == 3:
            logger.debug("q=%g: %d candidates within radius %.4g", q, len(ranked), r)
            return tuple(round15(v) for v, _ in chosen)  # type: ignore[return-value]
        r *= 2
    raise PrecisionBudgetExceeded(f"No three independent points found at q={q:g}")


def dual_successive_minima(
    pair: PairTarget,
    q: float,
    precision: Fraction = DEFAULT_PRECISION,
    *,
    q_max: float = DEFAULT_Q_MAX,
    threads: int = 1,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> tuple[float, float, float]:
    """(L*1, L*2, L*3) at q for the gauge G_q(x) = max(|x ^ u|, e^-q |x|).

    Points are searched near the line Ru; x and -x have the same gauge,
    so only x0 >= 0 is scanned.
    """
    _check_q(q, q_max)
    precision = Fraction(precision)
    direction = _Direction(pair, max_retries)
    xi, eta = approx_float(pair.xi), approx_float(pair.eta)
    scale = abs(xi) + abs(eta) + 1
    r = math.exp(-q / 3)
    for _ in range(MAX_DILATIONS):
        radius = r * math.exp(q)
        top = math.floor(radius) + 1
        k = math.ceil(r) + 1
        err = 8 * top * scale * 2.0**-52
        chunks = [(s, min(s + CHUNK_SIZE, top)) for s in range(0, top, CHUNK_SIZE)]
        candidates = _run_chunks(
            lambda c: _dual_chunk(c[0], c[1], k, xi, eta, r, radius, err), chunks, threads
        )
        with mpmath.workprec(LOG_PREC):
            log_r = mpmath.log(r)
            ranked = []
            for x in candidates:
                value = max(direction.log_wedge(x, precision), _log_norm(x) - q)
                if value <= log_r:
                    ranked.append((value, x))
        ranked.sort(key=lambda e: (e[0], e[1]))
        chosen = _greedy_minima(ranked)
        if len(chosen) == 3:
            logger.debug("q=%g: %d dual candidates within %.4g", q, len(ranked), r)
            return tuple(round15(v) for v, _ in chosen)  # type: ignore[return-value]
        r *= 2
    raise PrecisionBudgetExceeded(f"No three independent dual points found at q={q:g}")


def L_star_point(
    x: Triple,
    pair: PairTarget,
    q: float,
    precision: Fraction = DEFAULT_PRECISION,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> float:
    """max(log |x ^ u|, log |x| - q), certified to ``precision``."""
    if tuple(x) == (0, 0, 0):
        raise DomainError("x must be non-zero")
    direction = _Direction(pair, max_retries)
    with mpmath.workprec(LOG_PREC):
        return round15(max(direction.log_wedge(x, Fraction(precision)), _log_norm(x) - q))


def L1_star_from_points(points: Iterable[HasLogs], q: float) -> float:
    """min over minimal points of max(log Delta_i, log X_i - q).

    Later minimal points have a larger log X, so their terms are at least
    log X_last - q. The minimum is certified once that bound is not below
    the current minimum.

    Raises:
        RangeError: the points do not reach far enough for this q
    """
    pts = list(points)
    if getattr(points, "gauge", Gauge.NORM) != Gauge.NORM:
        logger.warning("L*1 from height-gauge points is only correct up to a bounded error")
    if not pts:
        raise RangeError("No minimal points to evaluate L*1")
    best = min(max(p.log_Delta, p.log_X - q) for p in pts)
    if pts[-1].log_X - q < best:
        raise RangeError(
            f"Minimal points up to log X = {pts[-1].log_X:.6f} do not certify L*1 at q={q:g}",
            {"q": q, "last_log_X": pts[-1].log_X},
        )
    return best


@dataclass(frozen=True)
class ParametricSample:
    q: float
    L1: float
    L2: float
    L3: float
    L1s: float
    L2s: float
    L3s: float

    @property
    def sum_gap(self) -> float:
        return self.L1 + self.L2 + self.L3 - self.q

    @property
    def dual_gap(self) -> float:
        return self.L3 + self.L1s

    def row(self) -> list[float]:
        return [
            self.q, self.L1, self.L2, self.L3, self.L1s, self.L2s, self.L3s,
            self.sum_gap, self.dual_gap,
        ]


@dataclass(frozen=True)
class ParametricProfile:
    """Sampled trajectories and their summaries.

    Attributes:
        pair: Target pair
        samples: One entry per grid point, ordered by q
        psi_bars: Tail max of L_j(q)/q for j = 1, 2, 3
        psi_unders: Tail min of L_j(q)/q
        duality_gap_sup: max |L3 + L*1| over the grid
        minkowski_gap_sup: max |L1 + L2 + L3 - q| over the grid
        duality_slope: Least-squares slope of L3 + L*1 against q
        minkowski_slope: Least-squares slope of L1 + L2 + L3 - q against q
        formula_gap_sup: max |L*1 from points - L*1 by enumeration|, when points were given
        kappa_L3: kappa of the snapped L3, or None when too few peaks were sampled
    """

    pair: PairTarget
    samples: tuple[ParametricSample, ...]
    psi_bars: tuple[float, float, float]
    psi_unders: tuple[float, float, float]
    duality_gap_sup: float
    minkowski_gap_sup: float
    duality_slope: float
    minkowski_slope: float
    formula_gap_sup: float | None
    kappa_L3: Exact | None


def q_grid(q_min: float, q_max: float, step: float) -> list[float]:
    """q_min, q_min + step, ... up to q_max inclusive, built in exact decimal steps."""
    if step <= 0:
        raise DomainError(f"step must be positive, got {step}")
    if q_max < q_min:
        raise DomainError(f"empty grid: q_max={q_max} < q_min={q_min}")
    lo, hi, st = (Fraction(str(v)) for v in (q_min, q_max, step))
    n = int((hi - lo) / st)
    return [float(lo + i * st) for i in range(n + 1)]


def _decimal(value: float, digits: int = CSV_DIGITS) -> Fraction:
    return Fraction(f"{value:.{digits}g}")


def snap_l3(qs: Sequence[float], values: Sequence[float], step: float) -> PLFunction:
    """Sawtooth with slopes {0, 1} through the sampled peaks of L3.

    Peaks are local maxima of L3(q)/q on the grid; two maxima closer than
    twice the step are merged into the larger one. Between consecutive
    peaks the sawtooth stays flat and rises just in time to reach the next
    peak, so its change points are exactly the peaks.
    """
    ratios = [v / q for q, v in zip(qs, values)]
    peaks: list[int] = []
    for i in range(1, len(qs) - 1):
        if ratios[i] >= ratios[i - 1] and ratios[i] > ratios[i + 1]:
            if peaks and qs[i] - qs[peaks[-1]] < 2 * step:
                if ratios[i] > ratios[peaks[-1]]:
                    peaks[-1] = i
                continue
            peaks.append(i)
    pts = [(_decimal(qs[i]), _decimal(values[i])) for i in peaks]
    if not pts:
        raise InsufficientData("No peak of L3 on the sampled grid")
    kept: list[tuple[Fraction, Fraction]] = []
    for p, h in pts:
        # a rise steeper than slope 1 means the earlier peak was not one
        while kept and h - kept[-1][1] >= p - kept[-1][0]:
            kept.pop()
        if kept and h <= kept[-1][1]:
            continue
        kept.append((p, h))
    p0, h0 = kept[0]
    lead = _decimal(step)
    vertices = [(p0 - lead, h0 - lead), (p0, h0)]
    for p, h in kept[1:]:
        _, h_prev = vertices[-1]
        vertices += [(p - (h - h_prev), h_prev), (p, h)]
    return PLFunction(vertices, 0)


def _tail(values: Sequence[float]) -> Sequence[float]:
    return values[len(values) // 5 :]


def profile(
    pair: PairTarget,
    grid: Sequence[float],
    points: Iterable[HasLogs] | None = None,
    precision: Fraction = DEFAULT_PRECISION,
    *,
    q_max: float = DEFAULT_Q_MAX,
    threads: int = 1,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> ParametricProfile:
    """Sample L_j and L*_j on ``grid`` and summarize the bands.

    L*1 comes from the minimal points when they are given (NORM gauge) and
    from dual enumeration otherwise. Grid points run concurrently; the
    samples are assembled in grid order.

    Raises:
        QTooLarge: a grid point above ``q_max``
        RangeError: the points do not cover the grid
    """
    grid = sorted(grid)
    if len(grid) < 2:
        raise InsufficientData("A profile needs at least two grid points")
    _check_q(grid[0], q_max)
    _check_q(grid[-1], q_max)
    pts = list(points) if points is not None else None
    if pts is not None:
        L1_star_from_points(pts, grid[-1])

    def sample(q: float) -> tuple[ParametricSample, float | None]:
        L = successive_minima(pair, q, precision, q_max=q_max, max_retries=max_retries)
        Ls = dual_successive_minima(pair, q, precision, q_max=q_max, max_retries=max_retries)
        if pts is None:
            return ParametricSample(q, *L, *Ls), None
        l1s = L1_star_from_points(pts, q)
        return ParametricSample(q, *L, l1s, Ls[1], Ls[2]), abs(l1s - Ls[0])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(sample, grid))
    samples = tuple(s for s, _ in results)
    gaps = [g for _, g in results if g is not None]

    qs = np.array([s.q for s in samples])
    L = np.array([[s.L1, s.L2, s.L3] for s in samples])
    ratios = L / qs[:, None]
    tail = _tail(ratios)
    sum_gaps = np.array([s.sum_gap for s in samples])
    dual_gaps = np.array([s.dual_gap for s in samples])
    step = float(np.min(np.diff(qs)))

    try:
        k3: Exact | None = kappa(snap_l3(qs.tolist(), L[:, 2].tolist(), step))
    except InsufficientData as e:
        logger.warning("kappa of the sampled L3 is not computable: %s", e.message)
        k3 = None

    result = ParametricProfile(
        pair=pair,
        samples=samples,
        psi_bars=tuple(float(v) for v in tail.max(axis=0)),  # type: ignore[arg-type]
        psi_unders=tuple(float(v) for v in tail.min(axis=0)),  # type: ignore[arg-type]
        duality_gap_sup=float(np.max(np.abs(dual_gaps))),
        minkowski_gap_sup=float(np.max(np.abs(sum_gaps))),
        duality_slope=float(np.polyfit(qs, dual_gaps, 1)[0]),
        minkowski_slope=float(np.polyfit(qs, sum_gaps, 1)[0]),
        formula_gap_sup=max(gaps) if gaps else None,
        kappa_L3=k3,
    )
    logger.info(
        "profile of %s on %d points: dual gap %.4f, sum gap %.4f",
        pair, len(samples), result.duality_gap_sup, result.minkowski_gap_sup,
        extra={"samples": len(samples), "q_max": float(qs[-1])},
    )
    return result


def dictionary_rows(
    prof: ParametricProfile, lam: float | None, lam_under: float | None
) -> list[tuple[str, float | None, float | None]]:
    """Parametric quantities next to their classical counterparts."""

    def image(v: float | None) -> float | None:
        if v is None:
            return None
        return 1.0 if math.isinf(v) else v / (1 + v)

    k3 = float(prof.kappa_L3) if prof.kappa_L3 is not None else None
    return [
        ("psi_bar_3 vs lambda/(1+lambda)", prof.psi_bars[2], image(lam)),
        ("kappa(L3) vs lambda_under/(1+lambda_under)", k3, image(lam_under)),
    ]


def _fmt(value: float) -> str:
    return f"{value:.{CSV_DIGITS}g}"


def write_profile_csv(prof: ParametricProfile, path: str | Path) -> None:
    """Comma-separated table, one row per grid point, 9 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for s in prof.samples:
                writer.writerow([_fmt(v) for v in s.row()])
    except OSError as e:
        raise IoError(f"Cannot write profile {path}: {e}") from e


def format_summary(prof: ParametricProfile, dictionary: Sequence[tuple] = ()) -> str:
    """Plain-text band and exponent summary."""

    def num(v: float | None) -> str:
        return "n/a" if v is None else f"{v:.6f}"

    trending = abs(prof.duality_slope) > 0.01 or abs(prof.minkowski_slope) > 0.01
    lines = [
        f"duality gap sup   {num(prof.duality_gap_sup)}  slope {prof.duality_slope:+.6f}",
        f"minkowski gap sup {num(prof.minkowski_gap_sup)}  slope {prof.minkowski_slope:+.6f}",
        f"gaps {'TRENDING' if trending else 'non-trending'}",
    ]
    for j in range(3):
        lines.append(
            f"psi_bar_{j + 1} {num(prof.psi_bars[j])}  psi_under_{j + 1} {num(prof.psi_unders[j])}"
        )
    if prof.formula_gap_sup is not None:
        lines.append(f"L*1 points vs enumeration {num(prof.formula_gap_sup)}")
    for label, left, right in dictionary:
        lines.append(f"{label}: {num(left)} vs {num(right)}")
    return "\n".join(lines) + "\n"
