"""Inertial game dynamics on Hessian-Riemannian simplices."""

from .errors import (BoundaryError, ConfigError, DomainError, InconclusiveError, InertiaError,
                     MissingPrimitiveError, NoPotentialError, OffSurfaceError)
from .kernels import Kernel, classify_wellposedness, get_kernel, log_barrier, power, shahshahani
from .games import NormalFormGame, SymmetricGame, load_game, named_game
from .dynamics import DynamicsSpec, FieldKind, PhasePoint
from .integrator import IntegratorConfig, TerminationKind, TrajectoryRecord, integrate

__version__ = "0.1.0"

__all__ = [
    "BoundaryError", "ConfigError", "DomainError", "InconclusiveError", "InertiaError",
    "MissingPrimitiveError", "NoPotentialError", "OffSurfaceError",
    "Kernel", "classify_wellposedness", "get_kernel", "log_barrier", "power", "shahshahani",
    "NormalFormGame", "SymmetricGame", "load_game", "named_game",
    "DynamicsSpec", "FieldKind", "PhasePoint",
    "IntegratorConfig", "TerminationKind", "TrajectoryRecord", "integrate",
]
