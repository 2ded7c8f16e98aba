"""Cadet-branch matching with price-responsive priorities.

Thin JSON-document bridge over the C++ core. Every function takes and
returns strings in the same schemas the `cadet-match` command-line tool
uses, so pipelines can mix scripts and shell invocations freely.
"""

from ._core import (
    audit,
    bayesian_equilibria,
    generate_cohort,
    pure_equilibria,
    run_mechanism,
    sweep_csv,
    verify_suite,
)

__all__ = [
    "audit",
    "bayesian_equilibria",
    "generate_cohort",
    "pure_equilibria",
    "run_mechanism",
    "sweep_csv",
    "verify_suite",
]
