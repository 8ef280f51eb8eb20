"""Explicit 3-systems realizing a target pair (lambda, lambda-under).

Three families are built here, all in exact arithmetic:

* case 1 (lambda-under > 0 and lambda + lambda-under > 1): geometric
  peaks q_k = beta_0 * ... * beta_k with a slope-1/2 infill on [s_k, t_k];
* case 2 (lambda-under <= 1/2): peaks given by a recurrence with a
  balanced staircase on [s_k, t_k];
* the balanced system for the generic point (1/2, 1/2).

Infill staircases start with cells of (interval length)/infill_cells and
halve the cell until every infill peak of P3 stays strictly below theta.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from dioph_spectrum.errors import DomainError, RegionError, SpectrumError
from dioph_spectrum.exponents import spectrum_check
from dioph_spectrum.reals import Exact, format_exact, parse_exact
from dioph_spectrum.three_system import PLFunction, ThreeSystem

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)
DEFAULT_INFILL_CELLS = 8
MAX_HALVINGS = 40

Extended = Exact | float


def _is_inf(x: Extended) -> bool:
    return isinstance(x, float) and math.isinf(x) and x > 0


@dataclass(frozen=True)
class SpectrumTarget:
    """A pair (lambda, lambda-under) inside the joint spectrum."""

    lam: Extended
    lam_under: Exact

    def __post_init__(self) -> None:
        if isinstance(self.lam, float) and not _is_inf(self.lam):
            raise DomainError("lambda must be exact or +inf")
        if not spectrum_check(self.lam, self.lam_under):
            raise SpectrumError(
                f"{self} is outside the joint spectrum: "
                "need 1/2 < lambda and lambda_under^2 / (1 - lambda_under) <= lambda, "
                "or the point (1/2, 1/2)",
                {"lambda": format_exact(self.lam), "lambda_under": format_exact(self.lam_under)},
            )

    @classmethod
    def parse(cls, lam: str, lam_under: str) -> "SpectrumTarget":
        under = parse_exact(lam_under)
        if isinstance(under, float):
            raise SpectrumError("lambda-under must be finite")
        return cls(parse_exact(lam), under)

    @property
    def is_balanced(self) -> bool:
        return not _is_inf(self.lam) and self.lam == HALF and self.lam_under == HALF

    def psi(self) -> Exact:
        """lambda / (1 + lambda), read as 1 for lambda = inf."""
        return Fraction(1) if _is_inf(self.lam) else self.lam / (1 + self.lam)

    def kappa(self) -> Exact:
        """lambda-under / (1 + lambda-under)."""
        return self.lam_under / (1 + self.lam_under)

    def __str__(self) -> str:
        return f"({format_exact(self.lam)}, {format_exact(self.lam_under)})"


class _Builder:
    """Grows a 3-system one rising segment at a time."""

    def __init__(self, q0: Exact, values: tuple[Exact, Exact, Exact]):
        self.q = q0
        self.vals = list(values)
        self.verts: list[list[tuple[Exact, Exact]]] = [[(q0, v)] for v in values]

    def rise(self, j: int, length: Exact) -> None:
        if length < 0:
            raise DomainError(f"negative rise {length} on P{j + 1} at q={self.q}")
        if length == 0:
            return
        self.q += length
        self.vals[j] += length
        for i in range(3):
            self.verts[i].append((self.q, self.vals[i]))

    def expect(self, q: Exact, what: str) -> None:
        if self.q != q:
            raise DomainError(f"construction drift at {what}: q={self.q}, expected {q}")

    def build(self, final_slopes: tuple[int, int, int], meta: dict[str, str]) -> ThreeSystem:
        comps = tuple(PLFunction(v, s) for v, s in zip(self.verts, final_slopes))
        return ThreeSystem(comps, meta)  # type: ignore[arg-type]


def _cell_size(length: Exact, cells: int, peak_ok) -> Exact:
    """(length / cells) / 2^j for the smallest j whose peaks all satisfy ``peak_ok``."""
    c = length / cells
    for _ in range(MAX_HALVINGS):
        if peak_ok(c):
            return c
        c = c / 2
    raise DomainError(f"infill cell did not meet the theta bound after {MAX_HALVINGS} halvings")


# -- case 1 -----------------------------------------------------------------


@dataclass(frozen=True)
class Case1Params:
    """Constants of the first construction.

    ``beta`` and ``q`` are indexed from 0 up to N + K; the system lives
    on [q_N, q_{N+K}].
    """

    target: SpectrumTarget
    nu: Exact
    beta: tuple[Exact, ...]
    beta_rule: str
    N: int
    theta: Exact
    K: int
    q: tuple[Exact, ...]

    def a(self, k: int) -> tuple[Exact, Exact, Exact]:
        """Vertex a^(k) = q_k (nu/(b_k b_{k-1}), nu/b_k, 1 - nu/b_k - nu/(b_k b_{k-1}))."""
        b, bp, qk = self.beta[k], self.beta[k - 1], self.q[k]
        a1 = qk * self.nu / (b * bp)
        a2 = qk * self.nu / b
        return a1, a2, qk - a1 - a2

    def s(self, k: int) -> Exact:
        b, bp = self.beta[k], self.beta[k - 1]
        return (2 - self.nu / b - 2 * self.nu / (b * bp)) * self.q[k]

    def t(self, k: int) -> Exact:
        return (2 * self.nu + self.nu / self.beta[k]) * self.q[k]

    def r(self, k: int) -> Exact:
        return self.a(k)[2] - self.a(k + 1)[2] + self.q[k + 1]

    def chain_holds(self, k: int) -> bool:
        b, bp = self.beta[k], self.beta[k - 1]
        x = 1 / b
        y = 1 / (b * bp)
        return y <= x < 1 / self.nu - x - y <= 1

    def meta(self) -> dict[str, str]:
        return {
            "case": "1",
            "lambda": format_exact(self.target.lam),
            "lambda_under": format_exact(self.target.lam_under),
            "nu": format_exact(self.nu),
            "beta": self.beta_rule,
            "theta": format_exact(self.theta),
            "N": str(self.N),
            "K": str(self.K),
        }


def derive_case1(target: SpectrumTarget, K: int) -> Case1Params:
    """Constants of the first construction.

    Raises:
        RegionError: lambda-under = 0 or lambda + lambda-under <= 1
    """
    lam, lu = target.lam, target.lam_under
    if not lu > 0 or not (_is_inf(lam) or lam + lu > 1):
        raise RegionError(
            f"case 1 needs lambda-under > 0 and lambda + lambda-under > 1, got {target}",
            {"lambda": format_exact(lam), "lambda_under": format_exact(lu)},
        )
    if K < 1:
        raise DomainError(f"K must be at least 1, got {K}")

    if _is_inf(lam):
        nu = 1 / lu
        theta = Fraction(3, 4)
        rule = "k+1"

        def beta_at(k: int) -> Exact:
            return Fraction(k + 1)
    else:
        nu = 1 / (lu * (1 + 1 / lam) * (1 + lu / lam))
        theta = (1 / (2 + lu / lam) + lam / (1 + lam)) / 2
        ratio = lam / lu
        rule = format_exact(ratio)

        def beta_at(k: int) -> Exact:
            return ratio

    def chain(k: int) -> bool:
        b, bp = beta_at(k), beta_at(k - 1)
        return 1 / (b * bp) <= 1 / b < 1 / nu - 1 / b - 1 / (b * bp) <= 1

    N = 1
    while not chain(N):
        N += 1
        if not _is_inf(lam) or N > 10_000:
            raise RegionError(f"no starting index satisfies the case-1 chain for {target}")
    beta = tuple(beta_at(k) for k in range(N + K + 1))
    q: list[Exact] = []
    prod: Exact = Fraction(1)
    for b in beta:
        prod = prod * b
        q.append(prod)
    params = Case1Params(target, nu, beta, rule, N, theta, K, tuple(q))
    for k in range(N, N + K):
        if not params.chain_holds(k):
            raise RegionError(f"case-1 chain fails at k={k} for {target}")
    logger.debug("case 1 for %s: nu=%s N=%d theta=%s", target, nu, N, theta)
    return params


def _pair_infill(
    b: _Builder, length: Exact, theta: Exact, cells: int
) -> None:
    """Alternate P3 and P2 steps of equal height from P2 = P3 to P2 = P3."""
    if length == 0:
        return
    q_start, v_start = b.q, b.vals[2]

    def peaks_ok(c: Exact) -> bool:
        h = c / 2
        n = length / c
        return all(
            (v_start + i * h + h) / (q_start + i * c + h) < theta for i in range(int(n))
        )

    c = _cell_size(length, cells, peaks_ok)
    for _ in range(int(length / c)):
        b.rise(2, c / 2)
        b.rise(1, c / 2)


def build_case1(params: Case1Params, infill_cells: int = DEFAULT_INFILL_CELLS) -> ThreeSystem:
    """The first construction on [q_N, q_{N+K}]."""
    N, K = params.N, params.K
    a1, a2, a3 = params.a(N)
    b = _Builder(params.q[N], (a1, a2, a3))
    for k in range(N, N + K):
        a1, a2, a3 = params.a(k)
        b.expect(params.q[k], f"q_{k}")
        b.rise(0, a2 - a1)
        b.rise(1, a3 - a2)
        b.expect(params.s(k), f"s_{k}")
        _pair_infill(b, params.t(k) - params.s(k), params.theta, infill_cells)
        b.expect(params.t(k), f"t_{k}")
        _, n2, n3 = params.a(k + 1)
        b.rise(2, n3 - n2)
    b.expect(params.q[N + K], f"q_{N + K}")
    return b.build((1, 0, 0), params.meta())


# -- case 2 -----------------------------------------------------------------


@dataclass(frozen=True)
class Case2Params:
    """Constants of the second construction, indexed k = 0..K."""

    target: SpectrumTarget
    alpha: tuple[Exact, ...]
    psi: tuple[Exact, ...]
    theta: Exact
    K: int
    q: tuple[Exact, ...]

    @property
    def q0(self) -> Exact:
        return self.q[0]

    def s(self, k: int) -> Exact:
        return 3 * self.psi[k] * self.q[k]

    def t(self, k: int) -> Exact:
        return 3 * (1 - self.psi[k + 1]) * self.q[k + 1] / 2

    def r(self, k: int) -> Exact:
        return self.psi[k] * self.q[k] + (1 - self.psi[k + 1]) * self.q[k + 1]

    def meta(self) -> dict[str, str]:
        lu_zero = self.target.lam_under == 0
        inf = _is_inf(self.target.lam)
        return {
            "case": "2",
            "lambda": format_exact(self.target.lam),
            "lambda_under": format_exact(self.target.lam_under),
            "alpha": "min(1/3,1/(k+4))" if lu_zero else format_exact(self.alpha[0]),
            "psi": "1-1/(k+4)" if inf else format_exact(self.psi[0]),
            "theta": format_exact(self.theta),
            "q0": format_exact(self.q0),
            "K": str(self.K),
        }


def derive_case2(target: SpectrumTarget, K: int) -> Case2Params:
    """Constants of the second construction.

    Raises:
        RegionError: lambda-under > 1/2
    """
    lam, lu = target.lam, target.lam_under
    if lu > HALF:
        raise RegionError(
            f"case 2 needs lambda-under <= 1/2, got {format_exact(lu)}",
            {"lambda_under": format_exact(lu)},
        )
    if K < 1:
        raise DomainError(f"K must be at least 1, got {K}")

    def alpha_at(k: int) -> Exact:
        return min(THIRD, Fraction(1, k + 4)) if lu == 0 else lu / (1 + lu)

    def psi_at(k: int) -> Exact:
        return 1 - Fraction(1, k + 4) if _is_inf(lam) else lam / (1 + lam)

    alpha = tuple(alpha_at(k) for k in range(K + 1))
    psi = tuple(psi_at(k) for k in range(K + 1))
    theta = (THIRD + psi[0]) / 2
    q: list[Exact] = [Fraction(1)]
    for k in range(K):
        q.append(psi[k] / (1 - psi[k + 1]) * (1 / alpha[k] - 1) * q[k])
    for k in range(K + 1):
        if not (0 < alpha[k] <= THIRD < theta < psi[k] < 1):
            raise RegionError(f"case-2 sequences out of range at k={k} for {target}")
    logger.debug("case 2 for %s: theta=%s", target, theta)
    return Case2Params(target, alpha, psi, theta, K, tuple(q))


def _balanced_infill(b: _Builder, length: Exact, theta: Exact, cells: int) -> None:
    """Cycles P3 +h, P2 +h, P1 +h from (v, v, v) to (w, w, w)."""
    if length == 0:
        return
    v = b.vals[0]
    rise = length / 3

    def first_peak_ok(h: Exact) -> bool:
        # (v+h)/(3v+h) decreases with v, so the first cycle is the worst
        return (v + h) / (3 * v + h) < theta

    h = _cell_size(rise, cells, first_peak_ok)
    for _ in range(int(rise / h)):
        for j in (2, 1, 0):
            b.rise(j, h)


def build_case2(params: Case2Params, infill_cells: int = DEFAULT_INFILL_CELLS) -> ThreeSystem:
    """The second construction on [q_0, q_K]."""
    q0, psi0 = params.q[0], params.psi[0]
    low = (1 - psi0) * q0 / 2
    b = _Builder(q0, (low, low, psi0 * q0))
    for k in range(params.K):
        qk, pk = params.q[k], params.psi[k]
        b.expect(qk, f"q_{k}")
        b.rise(1, pk * qk - b.vals[1])
        b.rise(0, pk * qk - b.vals[0])
        b.expect(params.s(k), f"s_{k}")
        _balanced_infill(b, params.t(k) - params.s(k), params.theta, infill_cells)
        b.expect(params.t(k), f"t_{k}")
        b.rise(2, params.psi[k + 1] * params.q[k + 1] - b.vals[2])
    b.expect(params.q[params.K], f"q_{params.K}")
    return b.build((0, 1, 0), params.meta())


# -- balanced and dispatch --------------------------------------------------


def build_balanced(K: int) -> ThreeSystem:
    """Unit staircase from level K: every P3 peak is followed by one P2 and one P1 step.

    kappa ratios equal 1/3 at every peak; peak ratios (c+1)/(3c+1) decrease to 1/3.
    """
    if K < 3:
        raise DomainError(f"balanced system needs K >= 3, got {K}")
    c = Fraction(K)
    b = _Builder(3 * c, (c, c, c))
    for i in range(K):
        b.rise(2, 1)
        if i < K - 1:
            b.rise(1, 1)
            b.rise(0, 1)
    meta = {"case": "balanced", "lambda": "1/2", "lambda_under": "1/2", "K": str(K)}
    return b.build((0, 1, 0), meta)


def construct(
    target: SpectrumTarget, K: int, infill_cells: int = DEFAULT_INFILL_CELLS
) -> ThreeSystem:
    """Dispatch a target to the balanced system, case 1 or case 2.

    Case 1 wins where both cases apply.
    """
    if target.is_balanced:
        return build_balanced(K)
    lam, lu = target.lam, target.lam_under
    if lu > 0 and (_is_inf(lam) or lam + lu > 1):
        logger.info("target %s: case 1", target)
        return build_case1(derive_case1(target, K), infill_cells)
    logger.info("target %s: case 2", target)
    return build_case2(derive_case2(target, K), infill_cells)
