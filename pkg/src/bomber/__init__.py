"""Optimal ammunition allocation for the continuous bomber problem."""
from .errors import BomberError, ConfigurationError, DomainError
from .model import ModelParams

__version__ = "0.1.0"

__all__ = ["BomberError", "ConfigurationError", "DomainError", "ModelParams", "__version__"]
