"""Finite-data estimators for the approximation exponents of a pair.

All estimators work on the tail of a minimal point sequence and report the
window (min and max) of the tail statistic next to the value, so a reader
can judge convergence. Nothing here is a certified bound.
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

import numpy as np

from dioph_spectrum.errors import DomainError, InsufficientData, RegimeMismatch
from dioph_spectrum.reals import Exact

logger = logging.getLogger(__name__)

MIN_POINTS = 8
MIN_POINTS_UNDER = 16
MIN_FILTERED = 3
GRID_DEPTH = 8
BETA0_REGIME = 0.1


@dataclass(frozen=True)
class TailPolicy:
    """How much of a sequence to drop and how to read the tail window."""

    fraction: float = 0.2
    minimum: int = 4
    converge_window: float = 0.02
    infinity_threshold: float = 1e6

    def start(self, n: int) -> int:
        """Index of the first point kept."""
        return max(self.minimum, math.floor(n * self.fraction))


DEFAULT_POLICY = TailPolicy()


class HasLogs(Protocol):
    log_X: float
    log_Delta: float


@dataclass(frozen=True)
class ExponentEstimate:
    """Tail estimate of one exponent.

    Attributes:
        value: The estimate (may be +inf)
        window_lo: Smallest tail statistic
        window_hi: Largest tail statistic
        tail_start: First index used
        n_points_used: Number of points entering the statistic
        converged: Tail window narrower than the convergence threshold
    """

    value: float
    window_lo: float
    window_hi: float
    tail_start: int
    n_points_used: int
    converged: bool


@dataclass(frozen=True)
class EpsEntry:
    eps: float
    estimate: ExponentEstimate
    subseq_len: int


@dataclass(frozen=True)
class EpsProfile:
    """lambda-hat-eps along an increasing eps grid."""

    entries: tuple[EpsEntry, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def eps(self) -> list[float]:
        return [e.eps for e in self.entries]

    @property
    def values(self) -> list[float]:
        return [e.estimate.value for e in self.entries]


def _arrays(points: Iterable[HasLogs]) -> tuple[np.ndarray, np.ndarray]:
    pts = list(points)
    lx = np.array([p.log_X for p in pts], dtype=np.float64)
    ld = np.array([p.log_Delta for p in pts], dtype=np.float64)
    return lx, ld


def _estimate(
    stats: np.ndarray, use_max: bool, start: int, n_used: int, policy: TailPolicy
) -> ExponentEstimate:
    lo, hi = float(np.min(stats)), float(np.max(stats))
    value = hi if use_max else lo
    if value > policy.infinity_threshold:
        value = math.inf
        hi = math.inf
    return ExponentEstimate(
        value=value,
        window_lo=lo,
        window_hi=hi,
        tail_start=start,
        n_points_used=n_used,
        converged=(hi - lo) <= policy.converge_window,
    )


def _require(n: int, needed: int, what: str) -> None:
    if n < needed:
        raise InsufficientData(
            f"{what} needs at least {needed} points, got {n}", {"points": n, "needed": needed}
        )


def lambda_est(
    points: Iterable[HasLogs], policy: TailPolicy = DEFAULT_POLICY
) -> ExponentEstimate:
    """Max over the tail of -log Delta_i / log X_i."""
    lx, ld = _arrays(points)
    n = len(lx)
    _require(n, MIN_POINTS, "lambda")
    start = policy.start(n)
    idx = np.arange(start, n)
    idx = idx[lx[idx] > 0]
    if len(idx) == 0:
        raise InsufficientData("No tail point with log X > 0")
    return _estimate(-ld[idx] / lx[idx], True, start, len(idx), policy)


def lambda_hat_est(
    points: Iterable[HasLogs], policy: TailPolicy = DEFAULT_POLICY
) -> ExponentEstimate:
    """Min over the tail of -log Delta_i / log X_{i+1}."""
    lx, ld = _arrays(points)
    n = len(lx)
    _require(n, MIN_POINTS, "lambda-hat")
    start = policy.start(n)
    idx = np.arange(start, n - 1)
    return _estimate(-ld[idx] / lx[idx + 1], False, start, len(idx) + 1, policy)


def lambda_hat_eps_est(
    points: Iterable[HasLogs], eps: float, policy: TailPolicy = DEFAULT_POLICY
) -> tuple[ExponentEstimate, int]:
    """lambda-hat along the subsequence with Delta_i <= X_i^(-eps).

    Returns:
        The estimate and the number of filtered tail indices

    Raises:
        InsufficientData: fewer than 8 points or fewer than 3 filtered tail indices
    """
    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps}")
    lx, ld = _arrays(points)
    n = len(lx)
    _require(n, MIN_POINTS, "lambda-hat-eps")
    start = policy.start(n)
    idx = np.arange(start, n)
    if eps > 0:
        idx = idx[-ld[idx] >= eps * lx[idx]]
    if len(idx) < MIN_FILTERED:
        raise InsufficientData(
            f"Only {len(idx)} tail indices pass the eps={eps:g} filter",
            {"eps": eps, "filtered": int(len(idx)), "needed": MIN_FILTERED},
        )
    stats = -ld[idx[:-1]] / lx[idx[1:]]
    return _estimate(stats, False, start, len(idx), policy), len(idx)


def eps_grid(upper: float, depth: int = GRID_DEPTH) -> list[float]:
    """eps_j = upper * (1 - 2^-j) for j = 1..depth."""
    return [upper * (1 - 2.0**-j) for j in range(1, depth + 1)]


def lambda_under_est(
    points: Iterable[HasLogs], depth: int = GRID_DEPTH, policy: TailPolicy = DEFAULT_POLICY
) -> tuple[ExponentEstimate, EpsProfile]:
    """lambda-under read at the deepest eps grid entry that still has data."""
    pts = list(points)
    _require(len(pts), MIN_POINTS_UNDER, "lambda-under")
    lam = lambda_est(pts, policy)
    upper = lam.value if math.isfinite(lam.value) else lam.window_hi
    if not math.isfinite(upper):
        upper = policy.infinity_threshold

    entries: list[EpsEntry] = []
    for eps in eps_grid(upper, depth):
        try:
            est, m = lambda_hat_eps_est(pts, eps, policy)
        except InsufficientData:
            break
        entries.append(EpsEntry(eps, est, m))
    if not entries:
        raise InsufficientData("The first eps grid entry already has too few points")
    if len(entries) < depth:
        logger.warning("eps grid stopped at depth %d of %d", len(entries), depth)
    else:
        logger.debug("eps grid complete (depth %d)", depth)
    return entries[-1].estimate, EpsProfile(tuple(entries))


def beta0_est(
    points: Iterable[HasLogs], depth: int = GRID_DEPTH, policy: TailPolicy = DEFAULT_POLICY
) -> ExponentEstimate:
    """1 / lambda-under for a pair (xi, xi^2) in the regime lambda = 1."""
    pts = list(points)
    lam = lambda_est(pts, policy)
    if not abs(lam.value - 1) <= BETA0_REGIME:
        raise RegimeMismatch(
            f"lambda estimate {lam.value:.6f} is not within {BETA0_REGIME} of 1",
            {"lambda": lam.value},
        )
    under, _ = lambda_under_est(pts, depth, policy)

    def inv(v: float) -> float:
        return math.inf if v == 0 else 1 / v

    return ExponentEstimate(
        value=inv(under.value),
        window_lo=inv(under.window_hi),
        window_hi=inv(under.window_lo),
        tail_start=under.tail_start,
        n_points_used=under.n_points_used,
        converged=under.converged,
    )


Number = Exact | float | int


def _common(a: Number, b: Number) -> tuple[Number, Number]:
    """Bring a finite float and an exact value into one arithmetic."""
    if isinstance(a, float) or isinstance(b, float):
        return float(a), float(b)
    return a, b


def spectrum_check(lam: Number, lam_under: Number, slack: float = 0.0) -> bool:
    """Whether (lambda, lambda-under) lies in the joint spectrum.

    The spectrum is the point (1/2, 1/2) together with the pairs satisfying
    0 <= lu <= 1, 1/2 < lambda <= inf and lu^2 / (1 - lu) <= lambda, where
    lu = 1 needs lambda = inf. Exact inputs are compared exactly; ``slack``
    relaxes the last inequality for estimates.
    """
    half = Fraction(1, 2)
    if isinstance(lam, float) and math.isinf(lam):
        lam_is_inf = lam > 0
    else:
        lam_is_inf = False
    lam, lam_under = _common(lam, lam_under)
    if not lam_is_inf and lam == half and lam_under == half:
        return True
    if not (0 <= lam_under <= 1):
        return False
    if not lam_is_inf and not lam > half:
        return False
    if lam_under == 1:
        return lam_is_inf
    if lam_is_inf:
        return True
    return lam_under * lam_under / (1 - lam_under) <= lam + slack


@dataclass(frozen=True)
class RatioRow:
    index: int
    log_X: float
    log_Delta: float
    ratio_same: float
    ratio_next: float | None


def ratio_table(points: Iterable[HasLogs]) -> list[RatioRow]:
    """Raw consecutive ratios -log Delta_i / log X_i and -log Delta_i / log X_{i+1}."""
    lx, ld = _arrays(points)
    rows = []
    for i in range(len(lx)):
        same = -ld[i] / lx[i] if lx[i] > 0 else math.inf
        nxt = -ld[i] / lx[i + 1] if i + 1 < len(lx) else None
        rows.append(
            RatioRow(
                i, float(lx[i]), float(ld[i]), float(same), None if nxt is None else float(nxt)
            )
        )
    return rows


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6f}"


def format_estimate(name: str, est: ExponentEstimate) -> str:
    return (
        f"{name:<14} {_fmt(est.value):>12} {_fmt(est.window_lo):>12} {_fmt(est.window_hi):>12} "
        f"{est.tail_start:>6} {est.n_points_used:>6} {'yes' if est.converged else 'no':>9}"
    )


def format_profile(profile: EpsProfile) -> str:
    """Deterministic text table: eps, estimate, window_lo, window_hi, subseq_len."""
    lines = [f"{'eps':>12} {'estimate':>12} {'window_lo':>12} {'window_hi':>12} {'subseq_len':>10}"]
    for e in profile.entries:
        lines.append(
            f"{_fmt(e.eps):>12} {_fmt(e.estimate.value):>12} {_fmt(e.estimate.window_lo):>12} "
            f"{_fmt(e.estimate.window_hi):>12} {e.subseq_len:>10}"
        )
    return "\n".join(lines)


def format_report(estimates: dict[str, ExponentEstimate], profile: EpsProfile | None) -> str:
    """Full exponent report as plain text."""
    header = (
        f"{'exponent':<14} {'value':>12} {'window_lo':>12} {'window_hi':>12} "
        f"{'tail':>6} {'used':>6} {'converged':>9}"
    )
    lines = [header] + [format_estimate(name, est) for name, est in estimates.items()]
    if profile is not None and profile.entries:
        lines += ["", format_profile(profile)]
    return "\n".join(lines) + "\n"
