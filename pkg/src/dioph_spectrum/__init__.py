"""dioph-spectrum - exponents of simultaneous approximation and their 3-system models."""

__version__ = "0.1.0"

from dioph_spectrum.constructions import SpectrumTarget, construct  # noqa: E402
from dioph_spectrum.errors import DiophantineError  # noqa: E402
from dioph_spectrum.minimal_points import Gauge, PairTarget, enumerate_points  # noqa: E402
from dioph_spectrum.three_system import PLFunction, ThreeSystem, kappa  # noqa: E402

__all__ = [
    "DiophantineError",
    "Gauge",
    "PLFunction",
    "PairTarget",
    "SpectrumTarget",
    "ThreeSystem",
    "construct",
    "enumerate_points",
    "kappa",
    "__version__",
]
