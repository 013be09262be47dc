"""Genetic search for reversible Boolean circuits built from qutrit gates."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
