"""Parameter checks shared by the estimators and the harness."""

from __future__ import annotations

import numbers

from .lowdisc import KINDS


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_positive_float(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return float(value)


def check_choice(value, name: str, choices) -> str:
    if value not in choices:
        raise ValueError(f"{name} must be one of {tuple(choices)}, got {value!r}")
    return value


def check_point_source(value) -> str:
    return check_choice(value, "point_source", KINDS)


def check_problem(problem) -> None:
    for attr in ("noise_dim", "sigma2", "draw", "loss"):
        if not hasattr(problem, attr):
            raise TypeError(f"problem {problem!r} lacks required attribute {attr!r}")
