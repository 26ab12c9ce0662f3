"""Numerical diagnostics for qualitative robustness of statistical estimators."""

from .measures import DiscreteMeasure, GaugeFunction, convolve, convolve_power, dirac, empirical, mix
from .metrics import prohorov, psi_distance, strassen_feasible, wasserstein1
from .functionals import Functional, avar, premium
from .seeding import SeedSpec

__version__ = "0.1.0"

__all__ = [
    "DiscreteMeasure", "GaugeFunction", "Functional", "SeedSpec",
    "avar", "convolve", "convolve_power", "dirac", "empirical", "mix", "premium",
    "prohorov", "psi_distance", "strassen_feasible", "wasserstein1",
]
