"""Sprays on conical regions: geodesics, curvature, projective deformations,
path-space reconstruction and projective completion."""

from .catalog import named_factor, named_spray
from .core import ConicalDomain, ProjectiveFactor, SprayField, TangentState, eval_spray, projective_deform
from .errors import SprayError

__all__ = [
    "ConicalDomain",
    "ProjectiveFactor",
    "SprayError",
    "SprayField",
    "TangentState",
    "eval_spray",
    "named_factor",
    "named_spray",
    "projective_deform",
]
__version__ = "0.1.0"
