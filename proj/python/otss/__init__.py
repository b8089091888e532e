"""Benchmark harness and estimators for contextual decision weights."""

try:
    from ._otss import (
        BenchConfig,
        Benchmark,
        FitConfig,
        Model,
        evaluate,
        fit,
        generate_benchmark,
        paired_bootstrap,
        regret,
    )
except ImportError:  # in-tree build: the extension sits next to the package
    from _otss import (
        BenchConfig,
        Benchmark,
        FitConfig,
        Model,
        evaluate,
        fit,
        generate_benchmark,
        paired_bootstrap,
        regret,
    )

__all__ = [
    "BenchConfig",
    "Benchmark",
    "FitConfig",
    "Model",
    "evaluate",
    "fit",
    "generate_benchmark",
    "paired_bootstrap",
    "regret",
]
