"""Tests for combined-graph rendering and run manifests."""

import json
import re

import pytest

from dioph_spectrum.constructions import build_balanced
from dioph_spectrum.errors import DomainError, IoError
from dioph_spectrum.manifest import RunManifest, manifest_path, read_manifest, write_manifest
from dioph_spectrum.render import COLORS, CombinedGraphRenderer, render_svg
from dioph_spectrum.three_system import PLFunction, ThreeSystem


@pytest.fixture
def system():
    """A small balanced system."""
    return build_balanced(4)


@pytest.fixture
def renderer():
    """Combined graph renderer."""
    return CombinedGraphRenderer()


class TestCombinedGraph:
    """Tests for CombinedGraphRenderer."""

    def test_polylines(self, renderer, system):
        """Test one polyline per component in the fixed colors."""
        svg = renderer.render(system)
        ids = re.findall(r'<polyline id="(P\d)"', svg)
        assert ids == ["P1", "P2", "P3"]
        for color in COLORS:
            assert f'stroke="{color}"' in svg

    def test_deterministic(self, renderer, system, tmp_path):
        """Test identical inputs give identical files."""
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render_svg(system, a)
        render_svg(system, b)
        assert a.read_bytes() == b.read_bytes()

    def test_markers(self, renderer, system):
        """Test a marker for every change point."""
        svg = renderer.render(system)
        expected = sum(len(c.change_points()) for c in system.components)
        assert svg.count("<circle") == expected

    def test_labels(self, renderer, system):
        """Test the axis labels are exact values."""
        svg = renderer.render(system)
        assert ">12</text>" in svg
        assert ">22</text>" in svg
        assert ">8</text>" in svg

    def test_size(self, renderer, system):
        """Test the requested canvas size."""
        svg = renderer.render(system, width=300, height=200)
        assert 'width="300" height="200"' in svg

    @pytest.mark.parametrize("width,height", [(0, 500), (800, 80)])
    def test_bad_size(self, renderer, system, width, height):
        """Test sizes that leave no plotting area."""
        with pytest.raises(DomainError):
            renderer.render(system, width=width, height=height)

    def test_log_scale(self, renderer, system):
        """Test the log-scale flag is recorded."""
        assert 'data-scale="log"' in renderer.render(system, log_scale=True)
        assert 'data-scale="linear"' in renderer.render(system)

    def test_log_scale_needs_positive_q(self, renderer):
        """Test log scale on a system starting at q = 0."""
        zero = ThreeSystem(
            (
                PLFunction([(0, 0), (1, 0)], 0),
                PLFunction([(0, 0), (1, 0)], 0),
                PLFunction([(0, 0), (1, 1)], 1),
            )
        )
        with pytest.raises(DomainError):
            renderer.render(zero, log_scale=True)

    def test_unwritable(self, system, tmp_path):
        """Test a write into a missing directory."""
        with pytest.raises(IoError):
            render_svg(system, tmp_path / "missing" / "out.svg")


class TestRunManifest:
    """Tests for run manifests."""

    def test_path(self, tmp_path):
        """Test the manifest sits next to its output."""
        assert manifest_path(tmp_path / "s.json").name == "s.json.manifest.json"

    def test_round_trip(self, tmp_path):
        """Test write then read."""
        manifest = RunManifest(
            "construct", {"lambda": "1", "K": 20}, "0.1.0", derived={"nu": "2/3"}
        )
        path = write_manifest(manifest, tmp_path / "s.json")
        data = json.loads(path.read_text())

        assert data["command"] == "construct"
        assert data["derived"] == {"nu": "2/3"}
        assert read_manifest(tmp_path / "s.json") == manifest

    def test_comparable(self):
        """Test two runs differ only in the timestamp."""
        a = RunManifest("render", {"width": 800}, "0.1.0", timestamp="2024-01-01T00:00:00+00:00")
        b = RunManifest("render", {"width": 800}, "0.1.0")
        assert a != b
        assert a.comparable() == b.comparable()
        assert "timestamp" not in a.comparable()

    def test_missing(self, tmp_path):
        """Test reading a manifest that does not exist."""
        with pytest.raises(IoError):
            read_manifest(tmp_path / "none.json")
