"""Simulation and Bayesian inference for normalized completely random
measures whose ranked frequencies exhibit a double power-law."""

from .errors import DpcrmError, NumericError, ParseError, ResourceError, ValidationError
from .models import MixtureTail, ModelSpec

__version__ = "0.1.0"

__all__ = [
    "ModelSpec", "MixtureTail",
    "DpcrmError", "ValidationError", "ParseError", "NumericError", "ResourceError",
    "__version__",
]
