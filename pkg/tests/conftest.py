"""Shared fixtures: synthetic minimal points and sawtooth functions."""

from fractions import Fraction

import pytest

from dioph_spectrum.minimal_points import MinimalPoint
from dioph_spectrum.three_system import PLFunction


def synthetic_points(log_x, log_delta):
    """Minimal-point stand-ins carrying only the two logarithms."""
    return [
        MinimalPoint(i, (i + 1, 0, 0), float(x), float(d))
        for i, (x, d) in enumerate(zip(log_x, log_delta))
    ]


def geometric_sawtooth(n: int, base: Fraction = Fraction(2), level: Fraction = Fraction(1, 2)):
    """Peaks at base^k with height level * base^k for k = 1..n.

    Between peaks the function is flat at the previous height, then rises
    with slope 1 to the next peak.
    """
    q = base
    h = level * base
    verts = [(q - h, Fraction(0)), (q, h)]
    for _ in range(n - 1):
        q_next, h_next = q * base, h * base
        verts.append((q_next - (h_next - h), h))
        verts.append((q_next, h_next))
        q, h = q_next, h_next
    return PLFunction(verts, 0)


@pytest.fixture
def sawtooth():
    """Peaks q_k = 2^k, heights 2^(k-1), k = 1..10."""
    return geometric_sawtooth(10)


@pytest.fixture
def doubling_points():
    """log X_i = 2^i, log Delta_i = -2^i for i = 1..20."""
    xs = [2.0**i for i in range(1, 21)]
    return synthetic_points(xs, [-x for x in xs])


@pytest.fixture
def linear_points():
    """log X_i = i, log Delta_i = -i/2 for i = 1..20."""
    xs = list(range(1, 21))
    return synthetic_points(xs, [-x / 2 for x in xs])
