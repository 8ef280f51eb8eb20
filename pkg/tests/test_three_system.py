"""Tests for piecewise-linear functions, 3-systems and the kappa functionals."""

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dioph_spectrum.constructions import build_balanced
from dioph_spectrum.errors import (
    AlphaTooLarge,
    DomainError,
    FormatError,
    InsufficientData,
    IoError,
    OutOfDomain,
)
from dioph_spectrum.three_system import (
    PLFunction,
    ThreeSystem,
    _eventually_periodic,
    kappa,
    kappa_alpha,
    kappa_grid,
    kappa_star,
    load_system,
    perturb,
    psi_inf,
    psi_sup,
    save_system,
    validate,
)
from tests.conftest import geometric_sawtooth

THIRD = Fraction(1, 3)


def small_system(p3_final: int = 1, shift_p3: int = 0) -> ThreeSystem:
    """P3 rises on [3, 4], P2 on [4, 5], P3 again on [5, 6]."""
    return ThreeSystem(
        (
            PLFunction([(3, 1), (6, 1)], 0),
            PLFunction([(3, 1), (4, 1), (5, 2), (6, 2)], 0),
            PLFunction(
                [(3, 1 + shift_p3), (4, 2 + shift_p3), (5, 2 + shift_p3), (6, 3 + shift_p3)],
                p3_final,
            ),
        )
    )


def rise_plateau(steps: list[tuple[int, int]], start: int = 10) -> PLFunction:
    """Alternating rise and plateau lengths from (start, 0), ending on a peak."""
    q, v = Fraction(start), Fraction(0)
    verts = [(q, v)]
    for i, (rise, plateau) in enumerate(steps):
        q, v = q + rise, v + rise
        verts.append((q, v))
        if i < len(steps) - 1:
            q = q + plateau
            verts.append((q, v))
    return PLFunction(verts, 0)


class TestPLFunction:
    """Tests for PLFunction construction and evaluation."""

    def test_eval(self, sawtooth):
        """Test values on rises and plateaus."""
        assert sawtooth.eval(2) == 1
        assert sawtooth.eval(Fraction(7, 2)) == Fraction(3, 2)
        assert sawtooth.eval(5) == 2
        assert sawtooth(7) == 3

    def test_out_of_domain(self, sawtooth):
        """Test evaluation outside [q0, q_end]."""
        assert sawtooth.q0 == 1
        assert sawtooth.q_end == 1024
        with pytest.raises(OutOfDomain):
            sawtooth.eval(0)
        with pytest.raises(OutOfDomain):
            sawtooth.eval(2000)

    def test_change_points(self, sawtooth):
        """Test change points are the peaks 2^k."""
        assert sawtooth.change_points() == [Fraction(2**k) for k in range(1, 11)]

    def test_canonical_form(self):
        """Test repeated and collinear vertices are merged."""
        f = PLFunction([(0, 0), (1, 1), (1, 1), (2, 2), (3, 2)])
        assert f.vertices == [(0, 0), (2, 2), (3, 2)]
        assert f.slopes == [1, 0]
        assert f == PLFunction([(0, 0), (2, 2), (3, 2)])

    def test_bad_slope(self):
        """Test slopes outside {0, 1} are rejected."""
        with pytest.raises(DomainError):
            PLFunction([(0, 0), (1, 2)])

    def test_decreasing_abscissa(self):
        """Test abscissas must increase."""
        with pytest.raises(DomainError):
            PLFunction([(1, 0), (0, 0)])

    def test_discontinuity(self):
        """Test two values at one abscissa are rejected."""
        with pytest.raises(DomainError):
            PLFunction([(0, 0), (0, 1)])

    def test_negation(self, sawtooth):
        """Test negation flips values and allowed slopes."""
        neg = -sawtooth
        assert neg.eval(4) == -2
        assert neg.allowed == frozenset({0, -1})
        assert -neg == sawtooth


class TestValidate:
    """Tests for the 3-system axiom checker."""

    def test_valid(self):
        """Test a small hand-built system."""
        ok, violations = validate(small_system())
        assert ok
        assert violations == []

    def test_balanced(self):
        """Test the balanced staircase is a 3-system."""
        assert validate(build_balanced(10))[0]

    def test_sum(self):
        """Test a shifted component breaks the sum axiom."""
        ok, violations = validate(small_system(shift_p3=1))
        assert not ok
        assert [v.q for v in violations if v.axiom == 1] == ["3", "4", "5", "6"]

    def test_final_slopes(self):
        """Test no rising component after the horizon."""
        ok, violations = validate(small_system(p3_final=0))
        assert not ok
        assert [v.axiom for v in violations] == [2]
        assert violations[0].q == "6"

    def test_transfer(self):
        """Test the rise passing from P2 to P3 while P2 < P3."""
        system = ThreeSystem(
            (
                PLFunction([(5, 1), (7, 1)], 0),
                PLFunction([(5, 1), (6, 2), (7, 2)], 0),
                PLFunction([(5, 3), (6, 3), (7, 4)], 1),
            )
        )
        ok, violations = validate(system)
        assert not ok
        assert [(v.axiom, v.q) for v in violations] == [(3, "6")]
        assert "P2" in str(violations[0])

    def test_mismatched_horizons(self):
        """Test components on different domains."""
        system = ThreeSystem(
            (
                PLFunction([(3, 1), (6, 1)], 0),
                PLFunction([(3, 1), (5, 1)], 0),
                PLFunction([(3, 1), (6, 4)], 1),
            )
        )
        ok, violations = validate(system)
        assert not ok
        assert violations[0].axiom == 0


class TestPsi:
    """Tests for psi-bar and psi-under on the horizon."""

    def test_sawtooth(self, sawtooth):
        """Test peak ratio 1/2 and plateau-end ratio 1/3."""
        assert psi_sup(sawtooth) == Fraction(1, 2)
        assert psi_inf(sawtooth) == THIRD

    def test_too_few_change_points(self):
        """Test two change points are not enough."""
        with pytest.raises(InsufficientData):
            psi_sup(geometric_sawtooth(2))


class TestKappa:
    """Tests for kappa-alpha, the alpha grid and the dual functional."""

    def test_kappa_alpha(self, sawtooth):
        """Test peaks, intersections and the minimum ratio."""
        report = kappa_alpha(sawtooth, Fraction(2, 5))
        assert report.peaks == tuple(Fraction(2**k) for k in range(3, 11))
        assert report.intersections == tuple(Fraction(3 * 2 ** (k - 1)) for k in range(3, 10))
        assert set(report.ratios) == {THIRD}
        assert report.kappa_alpha == THIRD

    def test_kappa_alpha_zero(self, sawtooth):
        """Test alpha = 0 keeps every tail peak."""
        assert kappa_alpha(sawtooth, 0).kappa_alpha == THIRD

    def test_alpha_too_large(self, sawtooth):
        """Test alpha above psi-bar."""
        with pytest.raises(AlphaTooLarge):
            kappa_alpha(sawtooth, Fraction(3, 5))

    def test_grid(self, sawtooth):
        """Test the grid converges to 1/3."""
        grid = kappa_grid(sawtooth)
        assert grid.depth == 8
        assert grid.alphas[0] == Fraction(1, 4)
        assert grid.converged
        assert kappa(sawtooth) == THIRD

    def test_grid_depth(self, sawtooth):
        """Test a shallow grid."""
        assert kappa_grid(sawtooth, depth=2).depth == 2

    @pytest.mark.parametrize(
        "seq,expected",
        [
            ([1, 2, 3, 3], False),
            ([1, 2, 1, 2], False),
            ([1, 2, 3, 3, 3], True),
            ([5, 1, 2, 1, 2, 1, 2], True),
            ([], False),
        ],
    )
    def test_periodic_tail_needs_three_copies(self, seq, expected):
        """Test two equal trailing blocks are not enough to call the tail periodic."""
        assert _eventually_periodic([Fraction(x) for x in seq]) is expected

    def test_monotone_in_alpha(self):
        """Test kappa-alpha does not decrease with alpha on a geometric sawtooth."""
        f = geometric_sawtooth(12, Fraction(3), Fraction(2, 3))
        alphas = [Fraction(i, 20) for i in range(0, 13)]
        values = [kappa_alpha(f, a).kappa_alpha for a in alphas]
        assert values == sorted(values)
        assert values[-1] <= psi_inf(f)

    def test_kappa_star(self, sawtooth):
        """Test the dual functional on -P."""
        assert kappa_star(-sawtooth, Fraction(-2, 5)) == -THIRD
        assert kappa_star(-sawtooth) == -THIRD

    def test_kappa_star_rejects_primal(self, sawtooth):
        """Test kappa* needs a non-increasing function."""
        with pytest.raises(DomainError):
            kappa_star(sawtooth)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(1, 20), st.integers(1, 20)), min_size=4, max_size=12
        )
    )
    def test_matches_direct_computation(self, steps):
        """Test kappa-alpha at 0 against the peaks read off the generator."""
        f = rise_plateau(steps)
        q, v = Fraction(10), Fraction(0)
        peaks = []
        for rise, plateau in steps:
            q, v = q + rise, v + rise
            peaks.append((q, v))
            q = q + plateau
        tail = peaks[len(peaks) // 5 :]
        ratios = [
            tail[i][1] / (tail[i + 1][0] - tail[i + 1][1] + tail[i][1])
            for i in range(len(tail) - 1)
        ]
        report = kappa_alpha(f, 0)
        assert report.peaks == tuple(p for p, _ in tail)
        assert report.kappa_alpha == min(ratios)
        assert report.psi_sup == max(h / p for p, h in tail)


def sup_distance(f: PLFunction, g: PLFunction):
    """Largest |f - g| over both vertex sets, where the difference peaks."""
    qs = {q for q, _ in f.vertices} | {q for q, _ in g.vertices}
    return max(abs(f.eval(q) - g.eval(q)) for q in qs)


def plateau_lengths(f: PLFunction) -> list:
    return [
        f.vertices[j + 1][0] - f.vertices[j][0] for j, s in enumerate(f.slopes) if s == 0
    ]


class TestPerturb:
    """Tests for bounded perturbations."""

    @pytest.mark.parametrize("bound,seed", [(1, 0), (2, 7), (5, 42)])
    def test_vertices_move(self, bound, seed):
        """Test every interior peak and valley moves while the ends stay put."""
        f = geometric_sawtooth(12)
        g = perturb(f, bound, seed)
        assert len(g.vertices) == len(f.vertices)
        assert g.vertices[0] == f.vertices[0]
        assert g.vertices[-1] == f.vertices[-1]
        for (q, v), (q2, v2) in zip(f.vertices[1:-1], g.vertices[1:-1]):
            assert q2 != q
            assert q2 - q == v2 - v
        assert set(g.slopes) <= {0, 1}
        assert plateau_lengths(g) == plateau_lengths(f)
        assert 0 < sup_distance(f, g) <= bound

    @pytest.mark.parametrize("bound,seed", [(1, 0), (2, 7), (5, 42)])
    def test_kappa_stable(self, bound, seed):
        """Test each kappa ratio moves by at most 2B/(3r) and the tail returns to 1/3."""
        f = geometric_sawtooth(30)
        g = perturb(f, bound, seed)
        alpha = Fraction(2, 5)
        base = kappa_alpha(f, alpha)
        rep = kappa_alpha(g, alpha)
        assert base.kappa_alpha == THIRD
        assert len(rep.peaks) == len(base.peaks)
        assert rep.peaks != base.peaks
        for ratio, r in zip(rep.ratios, rep.intersections):
            assert abs(ratio - THIRD) <= 2 * Fraction(bound) / (3 * r)
        assert abs(rep.kappa_alpha - THIRD) <= 2 * Fraction(bound) / (3 * min(rep.intersections))
        assert abs(rep.ratios[-1] - THIRD) < Fraction(1, 10**6)

    def test_bound_above_plateau(self, sawtooth):
        """Test a bound far above the shortest plateau still gives a valid function."""
        g = perturb(sawtooth, 100, 1)
        assert g.allowed == sawtooth.allowed
        assert set(g.slopes) <= {0, 1}
        assert plateau_lengths(g) == plateau_lengths(sawtooth)
        assert sup_distance(sawtooth, g) <= 100

    def test_deterministic(self, sawtooth):
        """Test equal seeds give equal functions."""
        assert perturb(sawtooth, 2, 3) == perturb(sawtooth, 2, 3)

    def test_zero_bound(self, sawtooth):
        """Test bound 0 is the identity."""
        assert perturb(sawtooth, 0) == sawtooth

    def test_negative_bound(self, sawtooth):
        """Test a negative bound is rejected."""
        with pytest.raises(DomainError):
            perturb(sawtooth, -1)


class TestSystemFile:
    """Tests for save_system / load_system."""

    def test_round_trip(self, tmp_path):
        """Test save then load preserves components and metadata."""
        system = build_balanced(5)
        path = tmp_path / "s.json"
        save_system(system, path)
        loaded = load_system(path)
        assert loaded == system
        assert loaded.construction["case"] == "balanced"

    def test_exact_strings(self, tmp_path):
        """Test values are written as exact strings."""
        path = tmp_path / "s.json"
        save_system(small_system(), path)
        data = json.loads(path.read_text())
        assert data["q0"] == "3"
        assert data["components"][2]["vertices"][1] == ["4", "2"]

    def test_axiom_violation(self, tmp_path):
        """Test a file that breaks the axioms is rejected."""
        path = tmp_path / "s.json"
        save_system(small_system(p3_final=0), path)
        with pytest.raises(FormatError):
            load_system(path)

    def test_bad_json(self, tmp_path):
        """Test malformed JSON."""
        path = tmp_path / "s.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            load_system(path)

    def test_missing(self, tmp_path):
        """Test a missing file."""
        with pytest.raises(IoError):
            load_system(tmp_path / "missing.json")
