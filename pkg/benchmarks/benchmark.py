"""Performance benchmarks for dioph-spectrum.

This module provides benchmarks for:
- Minimal point enumeration in both gauges
- 3-system construction and the kappa grid
- Successive minima of the parametric geometry
- SVG rendering

Run with: python -m benchmarks.benchmark
"""

import statistics
import time
from collections.abc import Callable
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction


@dataclass
class BenchmarkResult:
    """Result of a benchmark run."""

    name: str
    iterations: int
    total_time_ms: float
    mean_time_ms: float
    std_dev_ms: float
    min_time_ms: float
    max_time_ms: float

    def __str__(self) -> str:
        return (
            f"{self.name}:\n"
            f"  Iterations: {self.iterations}\n"
            f"  Mean: {self.mean_time_ms:.2f}ms\n"
            f"  Std Dev: {self.std_dev_ms:.2f}ms\n"
            f"  Min: {self.min_time_ms:.2f}ms\n"
            f"  Max: {self.max_time_ms:.2f}ms"
        )


def benchmark(name: str, iterations: int = 10) -> Callable:
    """Decorator that times ``iterations`` calls of a method."""

    def decorator(func: Callable) -> Callable:
        def wrapper(*args, **kwargs) -> BenchmarkResult:
            times = []
            for _ in range(iterations):
                start = time.perf_counter()
                func(*args, **kwargs)
                times.append((time.perf_counter() - start) * 1000)

            return BenchmarkResult(
                name=name,
                iterations=iterations,
                total_time_ms=sum(times),
                mean_time_ms=statistics.mean(times),
                std_dev_ms=statistics.stdev(times) if len(times) > 1 else 0,
                min_time_ms=min(times),
                max_time_ms=max(times),
            )

        return wrapper

    return decorator


@contextmanager
def timer(name: str):
    """Print the wall time of a block."""
    start = time.perf_counter()
    yield
    print(f"{name}: {(time.perf_counter() - start) * 1000:.2f}ms")


class MinimalPointBenchmarks:
    """Benchmarks for the minimal point engine."""

    @benchmark("Height gauge, (sqrt 2, sqrt 3) to 10^5", iterations=3)
    def benchmark_height(self):
        from dioph_spectrum.minimal_points import Gauge, PairTarget, enumerate_points

        enumerate_points(PairTarget.parse("sqrt(2)", "sqrt(3)"), 10**5, Gauge.HEIGHT)

    @benchmark("Norm gauge, (cf:[1;|2], cbrt(2)) to 10^4", iterations=3)
    def benchmark_norm(self):
        from dioph_spectrum.minimal_points import Gauge, PairTarget, enumerate_points

        enumerate_points(PairTarget.parse("cf:[1;|2]", "cbrt(2)"), 10**4, Gauge.NORM)


class SystemBenchmarks:
    """Benchmarks for constructions and kappa."""

    @benchmark("Case 1 construction, K = 20", iterations=5)
    def benchmark_construct(self):
        from dioph_spectrum.constructions import SpectrumTarget, construct

        construct(SpectrumTarget.parse("1", "1/2"), 20)

    @benchmark("kappa grid of P3, K = 20", iterations=5)
    def benchmark_kappa(self):
        from dioph_spectrum.constructions import SpectrumTarget, construct
        from dioph_spectrum.three_system import kappa_grid

        kappa_grid(construct(SpectrumTarget.parse("1", "1/2"), 20).components[2])

    @benchmark("Bounded perturbation, bound 1", iterations=5)
    def benchmark_perturb(self):
        from dioph_spectrum.constructions import build_balanced
        from dioph_spectrum.three_system import perturb

        perturb(build_balanced(20).components[2], Fraction(1))

    @benchmark("SVG render, K = 20", iterations=10)
    def benchmark_render(self):
        from dioph_spectrum.constructions import build_balanced
        from dioph_spectrum.render import CombinedGraphRenderer

        CombinedGraphRenderer().render(build_balanced(20))


class ParametricBenchmarks:
    """Benchmarks for successive minima."""

    @benchmark("Successive minima at q = 6", iterations=3)
    def benchmark_minima(self):
        from dioph_spectrum.minimal_points import PairTarget
        from dioph_spectrum.parametric import successive_minima

        successive_minima(PairTarget.parse("sqrt(2)", "sqrt(3)"), 6.0)


def run_all_benchmarks():
    """Run all benchmarks and print results."""
    print("=" * 60)
    print("dioph-spectrum Performance Benchmarks")
    print("=" * 60)
    print()

    groups = {
        "Minimal Points": MinimalPointBenchmarks(),
        "3-Systems": SystemBenchmarks(),
        "Parametric Geometry": ParametricBenchmarks(),
    }
    for title, group in groups.items():
        print(title)
        print("-" * 40)
        for name in sorted(dir(group)):
            if name.startswith("benchmark_"):
                print(getattr(group, name)())
                print()

    print("=" * 60)
    print("Benchmarks Complete")
    print("=" * 60)


if __name__ == "__main__":
    with timer("Total"):
        run_all_benchmarks()
