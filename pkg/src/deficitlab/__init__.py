"""Numerical deficits for entropy, Fisher information, transport and hypercontractive inequalities."""

from .density import GaussianMixture, GridDensity, SampleCloud, gaussian, mixture, standard_gaussian
from .functionals import Estimate, EstimatorSettings, FunctionalCatalog, catalog
from .reports import DeficitReport, Verdict

__all__ = [
    "DeficitReport",
    "Estimate",
    "EstimatorSettings",
    "FunctionalCatalog",
    "GaussianMixture",
    "GridDensity",
    "SampleCloud",
    "Verdict",
    "catalog",
    "gaussian",
    "mixture",
    "standard_gaussian",
]

__version__ = "0.1.0"
