"""Performance benchmarks for dioph-spectrum."""

from benchmarks.benchmark import (
    BenchmarkResult,
    MinimalPointBenchmarks,
    ParametricBenchmarks,
    SystemBenchmarks,
    benchmark,
    run_all_benchmarks,
    timer,
)

__all__ = [
    "BenchmarkResult",
    "benchmark",
    "timer",
    "MinimalPointBenchmarks",
    "SystemBenchmarks",
    "ParametricBenchmarks",
    "run_all_benchmarks",
]
