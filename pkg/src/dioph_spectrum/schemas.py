"""Pydantic models for the on-disk formats.

Points files are JSON lines: one :class:`PointsHeader` followed by
:class:`PointRecord` lines. System files are one :class:`SystemFile` JSON
document with exact values stored as strings.
"""

from typing import Literal

from pydantic import BaseModel, Field, field_validator

from dioph_spectrum.errors import DiophantineError
from dioph_spectrum.reals import parse_exact, parse_real

POINTS_KIND = "dioph.points"
SYSTEM_KIND = "dioph.system"
FORMAT_VERSION = 1


def _check_real(v: str) -> str:
    try:
        parse_real(v)
    except DiophantineError as e:
        raise ValueError(e.message) from e
    return v


def _check_exact(v: str) -> str:
    try:
        parse_exact(v)
    except DiophantineError as e:
        raise ValueError(e.message) from e
    return v


class PointsHeader(BaseModel):
    """First line of a points file."""

    kind: Literal["dioph.points"] = POINTS_KIND
    version: int = FORMAT_VERSION
    xi: str
    eta: str
    gauge: Literal["HEIGHT", "NORM"]
    x0_max: int = Field(..., ge=0)
    precision: str

    @field_validator("xi", "eta")
    @classmethod
    def validate_real(cls, v: str) -> str:
        """Coordinates must parse with the real-number grammar."""
        return _check_real(v)

    @field_validator("precision")
    @classmethod
    def validate_precision(cls, v: str) -> str:
        return _check_exact(v)


class PointRecord(BaseModel):
    """One minimal point."""

    i: int = Field(..., ge=0)
    x: tuple[int, int, int]
    log_x: float
    log_delta: float


class ComponentSchema(BaseModel):
    """One component P_j: vertex list plus the slope after the last vertex."""

    vertices: list[tuple[str, str]] = Field(..., min_length=1)
    final_slope: int = Field(..., ge=0, le=1)

    @field_validator("vertices")
    @classmethod
    def validate_vertices(cls, v: list[tuple[str, str]]) -> list[tuple[str, str]]:
        for q, value in v:
            _check_exact(q)
            _check_exact(value)
        return v


class SystemFile(BaseModel):
    """A 3-system with exact breakpoints, plus optional construction metadata."""

    kind: Literal["dioph.system"] = SYSTEM_KIND
    version: int = FORMAT_VERSION
    q0: str
    horizon: str
    components: list[ComponentSchema] = Field(..., min_length=3, max_length=3)
    construction: dict[str, str] | None = None

    @field_validator("q0", "horizon")
    @classmethod
    def validate_bounds(cls, v: str) -> str:
        return _check_exact(v)
