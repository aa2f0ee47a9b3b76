"""Simulation tools for the gamma-LQG metric and the KPZ dimension relations."""
from .errors import LqgError
from .params import LqgParams, coupling_params

__version__ = "0.1.0"

__all__ = ["LqgError", "LqgParams", "coupling_params", "__version__"]
