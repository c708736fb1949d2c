"""Least-squares Monte-Carlo exposure profiles for nested simulation problems."""

__version__ = "0.1.0"

from .engine import MarketModel, RunPlan, RunResult, run
from .instruments import InstrumentSpec
from .regression import BasisSpec

__all__ = ["BasisSpec", "InstrumentSpec", "MarketModel", "RunPlan", "RunResult", "run", "__version__"]
