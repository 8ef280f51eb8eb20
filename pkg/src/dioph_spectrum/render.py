"""Combined-graph SVG rendering of 3-systems."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, select_autoescape

from dioph_spectrum.errors import DomainError, IoError
from dioph_spectrum.reals import format_exact
from dioph_spectrum.three_system import PLFunction, ThreeSystem

logger = logging.getLogger(__name__)

COLORS = ("#1f77b4", "#2ca02c", "#d62728")
STROKE_WIDTH = 1.5
MARKER_RADIUS = 2.5
MARGIN = 40
DEFAULT_WIDTH = 800
DEFAULT_HEIGHT = 500


@dataclass(frozen=True)
class _Component:
    name: str
    color: str
    points: str
    markers: tuple[tuple[str, str], ...]


def _coord(v: float) -> str:
    return f"{v:.3f}"


class CombinedGraphRenderer:
    """Draws P1, P2, P3 on common axes, with markers at change points.

    Output depends only on the system and the options: coordinates are
    rounded to three decimals and the file carries no timestamp.
    """

    def __init__(self) -> None:
        template_dir = Path(__file__).parent / "templates"
        self.env = Environment(
            loader=FileSystemLoader(template_dir),
            autoescape=select_autoescape(enabled_extensions=("svg.jinja",)),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )

    def render(
        self,
        system: ThreeSystem,
        width: int = DEFAULT_WIDTH,
        height: int = DEFAULT_HEIGHT,
        log_scale: bool = False,
    ) -> str:
        """SVG text of the combined graph.

        Raises:
            DomainError: non-positive size, or log scale on a system touching q = 0
        """
        if width <= 2 * MARGIN or height <= 2 * MARGIN:
            raise DomainError(
                f"width and height must exceed {2 * MARGIN}, got {width}x{height}",
                {"width": width, "height": height},
            )
        q_lo, q_hi = float(system.q0), float(system.horizon)
        v_hi = float(max(v for _, v in system.P3.vertices))
        positive = [
            float(v) for c in system.components for _, v in c.vertices if v > 0
        ]
        v_lo = min(positive) if log_scale and positive else 0.0
        if log_scale and q_lo <= 0:
            raise DomainError("log scale needs q0 > 0")

        def axis(t: float) -> float:
            return math.log(t) if log_scale else t

        def scale(lo: float, hi: float, size: int, flip: bool):
            a, b = axis(lo), axis(hi)
            span = (b - a) or 1.0

            def to_px(t: float) -> float:
                frac = (axis(t) - a) / span
                return size - MARGIN - frac * (size - 2 * MARGIN) if flip else MARGIN + frac * (
                    size - 2 * MARGIN
                )

            return to_px

        x_px = scale(q_lo, q_hi, width, False)
        y_px = scale(v_lo, v_hi, height, True)

        def point(q: float, v: float) -> tuple[str, str]:
            return _coord(x_px(q)), _coord(y_px(max(v, v_lo)))

        components = []
        for j, c in enumerate(system.components):
            pts = [point(float(q), float(v)) for q, v in self._trace(c, system.horizon)]
            marks = tuple(point(float(q), float(c.eval(q))) for q in c.change_points())
            components.append(
                _Component(
                    name=f"P{j + 1}",
                    color=COLORS[j],
                    points=" ".join(f"{x},{y}" for x, y in pts),
                    markers=marks,
                )
            )

        template = self.env.get_template("combined_graph.svg.jinja")
        svg = template.render(
            width=width,
            height=height,
            margin=MARGIN,
            x_axis_end=width - MARGIN,
            y_axis_end=height - MARGIN,
            stroke_width=STROKE_WIDTH,
            marker_radius=MARKER_RADIUS,
            components=components,
            q0_label=format_exact(system.q0),
            horizon_label=format_exact(system.horizon),
            top_label=format_exact(max(v for _, v in system.P3.vertices)),
            scale="log" if log_scale else "linear",
        )
        logger.debug("rendered %d components, %d bytes", len(components), len(svg))
        return svg

    @staticmethod
    def _trace(c: PLFunction, horizon) -> list:
        pts = list(c.vertices)
        if pts[-1][0] < horizon:
            pts.append((horizon, c.eval(horizon)))
        return pts


def render_svg(
    system: ThreeSystem,
    path: str | Path,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    log_scale: bool = False,
) -> None:
    """Render ``system`` and write the SVG file."""
    svg = CombinedGraphRenderer().render(system, width, height, log_scale)
    try:
        Path(path).write_text(svg)
    except OSError as e:
        raise IoError(f"Cannot write SVG {path}: {e}") from e
