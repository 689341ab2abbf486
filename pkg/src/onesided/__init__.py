"""Explicit one-sided badly approximable pairs: construction, verification, scans."""

from .constants import AlgebraicConstants, derive_constants, g_of_gamma, c_of_gamma_big, solve_sigma
from .construction import (
    ConstructionState,
    ParameterProfile,
    alpha_enclosure,
    init,
    run,
    step,
)
from .numerics import PrecisionPolicy, RealEnclosure

__version__ = "0.1.0"

__all__ = [
    "AlgebraicConstants",
    "ConstructionState",
    "ParameterProfile",
    "PrecisionPolicy",
    "RealEnclosure",
    "alpha_enclosure",
    "c_of_gamma_big",
    "derive_constants",
    "g_of_gamma",
    "init",
    "run",
    "solve_sigma",
    "step",
]
