"""Identity-based signcryption and a deterministic simulator for robot relay chains."""

from .bilinear import GroupParams, default_params, wide_params
from .ibsc import extract, setup, signcrypt, unsigncrypt
from .planning import plan_chain
from .sim import SimConfig, Simulation

__all__ = [
    "GroupParams",
    "default_params",
    "wide_params",
    "setup",
    "extract",
    "signcrypt",
    "unsigncrypt",
    "plan_chain",
    "SimConfig",
    "Simulation",
]
