"""Flow-matching denoiser study kit: weightings, parametrization classes and desk-scale experiments."""
from .errors import ConfigError, FlowdenError, NonFiniteError, ShapeError, UsageError
from .kernels import BACKEND
from .objectives import ParamClass, WeightingScheme, interpolate, unified_loss

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "FlowdenError",
    "NonFiniteError",
    "ShapeError",
    "UsageError",
    "ParamClass",
    "WeightingScheme",
    "interpolate",
    "unified_loss",
]
