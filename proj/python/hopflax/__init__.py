"""Hopf-Lax viscosity solutions: thin wrapper over the compiled core."""

from _hopflax import (  # noqa: F401
    HypothesisError,
    InputError,
    NondifferentiableError,
    NumericalError,
    ParseError,
    Problem,
    ProblemFile,
    classify_curve,
    conjugate_value,
    gradient,
    load_problem,
    make_problem,
    minimizers,
    parse_problem,
    preimage,
    roundtrip,
    solve_grid_json,
    strip,
    value,
    verify,
)

__all__ = [
    "HypothesisError",
    "InputError",
    "NondifferentiableError",
    "NumericalError",
    "ParseError",
    "Problem",
    "ProblemFile",
    "classify_curve",
    "conjugate_value",
    "gradient",
    "load_problem",
    "make_problem",
    "minimizers",
    "parse_problem",
    "preimage",
    "roundtrip",
    "solve_grid_json",
    "strip",
    "value",
    "verify",
]
