# defaults/__init__.py
"""Constant lookup tables shared by the core and the CLI."""

from defaults.polynomials import DEFAULT_POLYNOMIALS, default_polynomial
from defaults.experiments import EXPERIMENTS, ExperimentInfo

__all__ = ["DEFAULT_POLYNOMIALS", "default_polynomial", "EXPERIMENTS", "ExperimentInfo"]
