"""Rotation numbers, random dynamics and conjugacy reconstruction on the circle."""
from .circle import (
    Arc,
    CirclePoint,
    GeneratorSystem,
    Homeo,
    Moebius,
    Orientation,
    PiecewiseLinear,
    Rotation,
    Word,
    WordComposition,
    chain,
    compose,
    conjugate,
    cyclic_order,
    eval_inverse_lift,
    eval_lift,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "BACKEND",
    "CirclePoint",
    "GeneratorSystem",
    "Homeo",
    "Moebius",
    "Orientation",
    "PiecewiseLinear",
    "Rotation",
    "Word",
    "WordComposition",
    "chain",
    "compose",
    "conjugate",
    "cyclic_order",
    "eval_inverse_lift",
    "eval_lift",
]
