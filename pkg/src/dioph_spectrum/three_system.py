"""Exact piecewise-linear functions, 3-systems and the kappa functionals.

All arithmetic is exact over ``Fraction`` or a single quadratic field
(``QuadSurd``). Asymptotic quantities are read on the represented horizon:
the first fifth of the change points is dropped and the abscissa of the
first kept change point is the tail threshold shared by psi-under and
kappa-alpha.
"""

import json
import logging
import random
from bisect import bisect_right
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from pydantic import ValidationError

from dioph_spectrum.errors import (
    AlphaTooLarge,
    DiophantineError,
    DomainError,
    FormatError,
    InsufficientData,
    IoError,
    OutOfDomain,
)
from dioph_spectrum.reals import Exact, QuadSurd, format_exact, parse_exact
from dioph_spectrum.schemas import ComponentSchema, SystemFile

logger = logging.getLogger(__name__)

MIN_CHANGE_POINTS = 3
ALPHA_GRID_DEPTH = 8
PERIOD_REPEATS = 3
UNIT_SLOPES = frozenset({0, 1})


def exact(value: Exact | int | str) -> Exact:
    """Coerce an int, string or exact number into Fraction | QuadSurd."""
    if isinstance(value, (Fraction, QuadSurd)):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        parsed = parse_exact(value)
        if isinstance(parsed, float):
            raise DomainError(f"Vertex value must be finite, got {value!r}")
        return parsed
    raise DomainError(f"Not an exact number: {value!r}")


class PLFunction:
    """Continuous piecewise-linear function with integer slopes from a fixed set.

    The representation is canonical: abscissas strictly increase, repeated
    vertices are coalesced and collinear neighbours merged. The domain is
    [q0, q_end]; ``final_slope`` is the slope just after q_end.
    """

    __slots__ = ("_qs", "_vs", "_slopes", "final_slope", "allowed")

    def __init__(
        self,
        vertices: Iterable[tuple[Exact | int | str, Exact | int | str]],
        final_slope: int = 0,
        allowed: frozenset[int] = UNIT_SLOPES,
    ):
        pts: list[tuple[Exact, Exact]] = []
        for q, v in vertices:
            q, v = exact(q), exact(v)
            if pts and q == pts[-1][0]:
                if v != pts[-1][1]:
                    raise DomainError(f"Discontinuity at q={q}: {pts[-1][1]} != {v}")
                continue
            if pts and q < pts[-1][0]:
                raise DomainError(f"Abscissas must increase: {q} after {pts[-1][0]}")
            pts.append((q, v))
        if not pts:
            raise DomainError("A piecewise-linear function needs at least one vertex")
        if final_slope not in allowed:
            raise DomainError(f"final slope {final_slope} not in {sorted(allowed)}")

        qs, vs, slopes = [pts[0][0]], [pts[0][1]], []
        for q, v in pts[1:]:
            s = _slope(qs[-1], vs[-1], q, v, allowed)
            if slopes and slopes[-1] == s:
                qs[-1], vs[-1] = q, v
            else:
                qs.append(q)
                vs.append(v)
                slopes.append(s)
        self._qs: list[Exact] = qs
        self._vs: list[Exact] = vs
        self._slopes: list[int] = slopes
        self.final_slope = final_slope
        self.allowed = allowed

    @property
    def q0(self) -> Exact:
        return self._qs[0]

    @property
    def q_end(self) -> Exact:
        return self._qs[-1]

    @property
    def vertices(self) -> list[tuple[Exact, Exact]]:
        return list(zip(self._qs, self._vs))

    @property
    def slopes(self) -> list[int]:
        """Slope of each piece between consecutive vertices."""
        return list(self._slopes)

    def eval(self, q: Exact | int) -> Exact:
        """Exact value at q; OutOfDomain outside [q0, q_end]."""
        if q < self.q0 or q > self.q_end:
            raise OutOfDomain(
                f"q={q} outside [{self.q0}, {self.q_end}]",
                {"q": str(q), "q0": str(self.q0), "q_end": str(self.q_end)},
            )
        j = bisect_right(self._qs, q) - 1
        if j >= len(self._slopes):
            return self._vs[-1]
        return self._vs[j] + self._slopes[j] * (q - self._qs[j])

    __call__ = eval

    def outgoing_slope(self, j: int) -> int:
        return self._slopes[j] if j < len(self._slopes) else self.final_slope

    def change_points(self) -> list[Exact]:
        """Abscissas where the slope changes from 1 to 0."""
        return [
            self._qs[j]
            for j in range(1, len(self._qs))
            if self._slopes[j - 1] == 1 and self.outgoing_slope(j) == 0
        ]

    def __neg__(self) -> "PLFunction":
        return PLFunction(
            [(q, -v) for q, v in self.vertices],
            -self.final_slope,
            frozenset(-s for s in self.allowed),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PLFunction):
            return NotImplemented
        return (
            self._qs == other._qs
            and self._vs == other._vs
            and self.final_slope == other.final_slope
        )

    def __hash__(self) -> int:
        return hash((tuple(self._qs), tuple(self._vs), self.final_slope))

    def __repr__(self) -> str:
        verts = ", ".join(f"({q}, {v})" for q, v in self.vertices[:4])
        more = ", ..." if len(self._qs) > 4 else ""
        return f"PLFunction([{verts}{more}], final_slope={self.final_slope})"


def _slope(q1: Exact, v1: Exact, q2: Exact, v2: Exact, allowed: frozenset[int]) -> int:
    dq, dv = q2 - q1, v2 - v1
    for s in sorted(allowed):
        if dv == s * dq:
            return s
    raise DomainError(
        f"Slope between ({q1}, {v1}) and ({q2}, {v2}) is not in {sorted(allowed)}",
        {"q": str(q1)},
    )


@dataclass(frozen=True)
class ThreeSystem:
    """Triple (P1, P2, P3) on a common finite horizon.

    ``construction`` carries the parameters of the construction that
    produced the system, as exact strings.
    """

    components: tuple[PLFunction, PLFunction, PLFunction]
    construction: dict[str, str] = field(default_factory=dict, compare=False)

    @property
    def q0(self) -> Exact:
        return self.components[0].q0

    @property
    def horizon(self) -> Exact:
        return self.components[0].q_end

    @property
    def P3(self) -> PLFunction:
        return self.components[2]

    def breakpoints(self) -> list[Exact]:
        """Sorted union of the vertex abscissas of all components."""
        merged: list[Exact] = []
        for q in sorted({q for c in self.components for q, _ in c.vertices}):
            merged.append(q)
        return merged

    def values(self, q: Exact) -> tuple[Exact, Exact, Exact]:
        return tuple(c.eval(q) for c in self.components)  # type: ignore[return-value]


@dataclass(frozen=True)
class Violation:
    """One failed axiom check; axiom 0 means a structural problem."""

    axiom: int
    q: str | None
    message: str

    def __str__(self) -> str:
        where = f" at q={self.q}" if self.q is not None else ""
        return f"axiom ({self.axiom}){where}: {self.message}"


def _interval_slope(c: PLFunction, a: Exact, b: Exact) -> Exact:
    return (c.eval(b) - c.eval(a)) / (b - a)


def validate(system: ThreeSystem) -> tuple[bool, list[Violation]]:
    """Check the three 3-system axioms exactly. Never raises."""
    violations: list[Violation] = []
    try:
        comps = system.components
        if len(comps) != 3:
            return False, [Violation(0, None, f"expected 3 components, got {len(comps)}")]
        if any(c.allowed != UNIT_SLOPES for c in comps):
            violations.append(Violation(0, None, "components must have slopes in {0, 1}"))
        if len({c.q0 for c in comps}) != 1 or len({c.q_end for c in comps}) != 1:
            return False, [Violation(0, None, "components do not share q0 and horizon")]

        qs = system.breakpoints()
        for q in qs:
            p1, p2, p3 = system.values(q)
            if not (0 <= p1 <= p2 <= p3):
                violations.append(
                    Violation(1, format_exact(q), f"order fails: P=({p1}, {p2}, {p3})")
                )
            if p1 + p2 + p3 != q:
                violations.append(
                    Violation(1, format_exact(q), f"sum {p1 + p2 + p3} differs from q")
                )

        # slope-1 component on each interval, then after the horizon
        risers: list[int | None] = []
        for a, b in zip(qs, qs[1:]):
            slopes = [_interval_slope(c, a, b) for c in comps]
            ones = [j for j, s in enumerate(slopes) if s == 1]
            if len(ones) != 1 or any(s not in (0, 1) for s in slopes):
                violations.append(
                    Violation(
                        2,
                        format_exact(a),
                        f"slopes on [{a}, {b}] are {[str(s) for s in slopes]}",
                    )
                )
                risers.append(None)
            else:
                risers.append(ones[0])
        final = [c.final_slope for c in comps]
        if sorted(final) != [0, 0, 1]:
            violations.append(
                Violation(2, format_exact(system.horizon), f"final slopes are {final}")
            )
            risers.append(None)
        else:
            risers.append(final.index(1))

        for k in range(1, len(risers)):
            r, s = risers[k - 1], risers[k]
            if r is None or s is None or r >= s:
                continue
            q = qs[k]
            vals = system.values(q)
            if len(set(vals[r : s + 1])) != 1:
                violations.append(
                    Violation(
                        3,
                        format_exact(q),
                        f"slope passes from P{r + 1} to P{s + 1} but "
                        f"P{r + 1}={vals[r]}, P{s + 1}={vals[s]}",
                    )
                )
    except DiophantineError as e:
        violations.append(Violation(0, None, e.message))
    return not violations, violations


def _tail_change_points(f: PLFunction) -> tuple[list[Exact], Exact]:
    cps = f.change_points()
    if len(cps) < MIN_CHANGE_POINTS:
        raise InsufficientData(
            f"Need at least {MIN_CHANGE_POINTS} change points, got {len(cps)}",
            {"change_points": len(cps)},
        )
    tail = cps[len(cps) // 5 :]
    return tail, tail[0]


def psi_sup(f: PLFunction) -> Exact:
    """Max of P(q)/q over the tail change points."""
    tail, _ = _tail_change_points(f)
    return max(f.eval(q) / q for q in tail)


def psi_inf(f: PLFunction) -> Exact:
    """Min of P(q)/q over the vertices from the tail threshold on."""
    _, threshold = _tail_change_points(f)
    return min(v / q for q, v in f.vertices if q >= threshold and q > 0)


@dataclass(frozen=True)
class KappaReport:
    """Everything kappa-alpha reads off one function."""

    alpha: Exact
    peaks: tuple[Exact, ...]
    intersections: tuple[Exact, ...]
    ratios: tuple[Exact, ...]
    kappa_alpha: Exact
    psi_sup: Exact
    psi_inf: Exact


def kappa_alpha(f: PLFunction, alpha: Exact | int) -> KappaReport:
    """kappa_alpha on the represented horizon.

    Peaks are the tail change points with P(q)/q >= alpha. For consecutive
    peaks q_i, q_{i+1} the horizontal line through the first meets the
    rising line through the second at r_i = q_{i+1} - P(q_{i+1}) + P(q_i);
    kappa_alpha is the minimum of P(q_i)/r_i.

    Raises:
        AlphaTooLarge: alpha >= psi_sup(f)
        InsufficientData: fewer than 3 change points or surviving peaks
    """
    alpha = exact(alpha)
    tail, _ = _tail_change_points(f)
    sup, inf_ = psi_sup(f), psi_inf(f)
    if alpha >= sup:
        raise AlphaTooLarge(
            f"alpha={alpha} is not below psi_sup={sup}",
            {"alpha": str(alpha), "psi_sup": str(sup)},
        )
    peaks = [q for q in tail if f.eval(q) / q >= alpha]
    if len(peaks) < MIN_CHANGE_POINTS:
        raise InsufficientData(
            f"Only {len(peaks)} peaks reach level alpha={alpha}",
            {"alpha": str(alpha), "peaks": len(peaks)},
        )
    heights = [f.eval(q) for q in peaks]
    rs = [peaks[i + 1] - heights[i + 1] + heights[i] for i in range(len(peaks) - 1)]
    ratios = [heights[i] / rs[i] for i in range(len(rs))]
    return KappaReport(
        alpha=alpha,
        peaks=tuple(peaks),
        intersections=tuple(rs),
        ratios=tuple(ratios),
        kappa_alpha=min(ratios),
        psi_sup=sup,
        psi_inf=inf_,
    )


def _eventually_periodic(seq: Sequence[Exact]) -> bool:
    """True when the sequence ends in PERIOD_REPEATS full copies of some period."""
    n = len(seq)
    for p in range(1, n // PERIOD_REPEATS + 1):
        tail = list(seq[n - PERIOD_REPEATS * p :])
        if tail == tail[:p] * PERIOD_REPEATS:
            return True
    return False


@dataclass(frozen=True)
class KappaGrid:
    """kappa-alpha along alpha_m = psi_sup * (1 - 2^-m)."""

    alphas: tuple[Exact, ...]
    values: tuple[Exact, ...]
    deepest: KappaReport
    converged: bool

    @property
    def value(self) -> Exact:
        return self.values[-1]

    @property
    def depth(self) -> int:
        return len(self.values)


def kappa_grid(f: PLFunction, depth: int = ALPHA_GRID_DEPTH) -> KappaGrid:
    """Evaluate kappa-alpha on the alpha grid and keep the deepest value."""
    sup = psi_sup(f)
    alphas: list[Exact] = []
    reports: list[KappaReport] = []
    for m in range(1, depth + 1):
        alpha = sup * (1 - Fraction(1, 2**m))
        try:
            reports.append(kappa_alpha(f, alpha))
        except InsufficientData:
            break
        alphas.append(alpha)
    if not reports:
        raise InsufficientData("kappa-alpha is not computable at the first grid level")
    values = [r.kappa_alpha for r in reports]
    converged = _eventually_periodic(reports[-1].ratios) and (
        len(values) == 1 or values[-1] == values[-2]
    )
    if not converged:
        logger.warning("kappa grid not converged at depth %d", len(values))
    return KappaGrid(tuple(alphas), tuple(values), reports[-1], converged)


def kappa(f: PLFunction, depth: int = ALPHA_GRID_DEPTH) -> Exact:
    """Deepest computable grid value of kappa-alpha."""
    return kappa_grid(f, depth).value


def _check_dual(f_star: PLFunction) -> None:
    if not set(f_star.slopes) | {f_star.final_slope} <= {0, -1}:
        raise DomainError("kappa* needs slopes in {0, -1}", {"slopes": sorted(set(f_star.slopes))})
    if any(v > 0 for _, v in f_star.vertices):
        raise DomainError("kappa* needs non-positive values")


def kappa_star(f_star: PLFunction, alpha: Exact | int | None = None) -> Exact:
    """Dual functional: -kappa_{-alpha}(-f*), or -kappa(-f*) when alpha is None."""
    _check_dual(f_star)
    f = -f_star
    if alpha is None:
        return -kappa(f)
    return -kappa_alpha(f, -exact(alpha)).kappa_alpha


def perturb(f: PLFunction, bound: Exact | int, seed: int = 0) -> PLFunction:
    """Bounded perturbation that slides every interior plateau along its rises.

    A plateau with a slope-1 piece on both sides moves by a seeded non-zero
    delta with |delta| <= min(bound, a third of either neighbouring rise):
    its left end walks along the rise before it, its right end along the
    rise after it. Plateau lengths are kept, each rise stretches or shrinks
    by the difference of the deltas at its ends, and the first and last
    vertices stay put. The result stays within ``bound`` of ``f``.
    """
    bound = exact(bound)
    if bound < 0:
        raise DomainError(f"bound must be non-negative, got {bound}")
    if bound == 0:
        return f
    rng = random.Random(seed)
    slopes = f.slopes
    shift: list[Exact] = [Fraction(0)] * len(f.vertices)
    for j in range(1, len(slopes) - 1):
        if slopes[j] != 0 or slopes[j - 1] != 1 or slopes[j + 1] != 1:
            continue
        (q_before, _), (a, _), (b, _), (q_after, _) = f.vertices[j - 1 : j + 3]
        step = min(bound, (a - q_before) / 3, (q_after - b) / 3)
        delta = step * Fraction(rng.choice((-1, 1)) * rng.randint(1, 16), 16)
        shift[j] = shift[j + 1] = delta
    moved = [(q + d, v + d) for (q, v), d in zip(f.vertices, shift)]
    logger.debug(
        "perturbed %d plateaus", sum(1 for d in shift if d) // 2, extra={"bound": str(bound)}
    )
    return PLFunction(moved, f.final_slope, f.allowed)


def system_to_model(system: ThreeSystem) -> SystemFile:
    return SystemFile(
        q0=format_exact(system.q0),
        horizon=format_exact(system.horizon),
        components=[
            ComponentSchema(
                vertices=[(format_exact(q), format_exact(v)) for q, v in c.vertices],
                final_slope=c.final_slope,
            )
            for c in system.components
        ],
        construction=dict(system.construction) or None,
    )


def save_system(system: ThreeSystem, path: str | Path) -> None:
    """Write a system file (JSON, exact values as strings)."""
    text = json.dumps(system_to_model(system).model_dump(), indent=2)
    try:
        Path(path).write_text(text + "\n")
    except OSError as e:
        raise IoError(f"Cannot write system file {path}: {e}") from e


def load_system(path: str | Path) -> ThreeSystem:
    """Read a system file and re-validate the axioms.

    Raises:
        IoError: file cannot be read
        FormatError: schema mismatch, bad vertices or failed axioms
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoError(f"Cannot read system file {path}: {e}") from e
    try:
        model = SystemFile.model_validate_json(text)
    except ValidationError as e:
        raise FormatError(f"System file {path} does not match the schema: {e}") from e
    try:
        comps = tuple(PLFunction(c.vertices, c.final_slope) for c in model.components)
    except DomainError as e:
        raise FormatError(f"System file {path}: {e.message}") from e
    system = ThreeSystem(comps, dict(model.construction or {}))  # type: ignore[arg-type]
    if exact(model.q0) != system.q0 or exact(model.horizon) != system.horizon:
        raise FormatError(f"System file {path}: q0/horizon do not match the vertices")
    ok, violations = validate(system)
    if not ok:
        raise FormatError(
            f"System file {path} violates the 3-system axioms: {violations[0]}",
            {"violations": [str(v) for v in violations]},
        )
    return system
