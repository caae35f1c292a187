"""Simulator of a stored-program machine whose pins acquire information
through a binary, pointer-mediated state reduction."""

__version__ = "0.1.0"

from .config import RunConfig, build_machine, load_config
from .machine import Machine, member_rng
from .physics import PhysicsParams, PointerKinematics
from .quantum import DensityMatrix, PointerState, PurifiedState

__all__ = [
    "__version__",
    "RunConfig",
    "build_machine",
    "load_config",
    "Machine",
    "member_rng",
    "PhysicsParams",
    "PointerKinematics",
    "DensityMatrix",
    "PointerState",
    "PurifiedState",
]
