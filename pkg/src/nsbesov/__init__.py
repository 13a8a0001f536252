"""Littlewood-Paley analysis and bilinear Navier-Stokes estimates on band-limited fields."""

from ._kernels import BACKEND
from .errors import (
    AliasingError,
    BudgetError,
    ConvergenceError,
    GridError,
    HypothesisError,
    NSBesovError,
    SingularityError,
    SymbolError,
)
from .spectral import (
    FrequencyGrid,
    PatchField,
    PhysicalField,
    SpectralField,
    lp_norm,
    make_grid,
    resample_to_block,
    sample_symbol,
    spectral_product,
    to_physical,
    to_spectral,
    windowed_convolution,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AliasingError",
    "BudgetError",
    "ConvergenceError",
    "GridError",
    "HypothesisError",
    "NSBesovError",
    "SingularityError",
    "SymbolError",
    "FrequencyGrid",
    "PatchField",
    "PhysicalField",
    "SpectralField",
    "lp_norm",
    "make_grid",
    "resample_to_block",
    "sample_symbol",
    "spectral_product",
    "to_physical",
    "to_spectral",
    "windowed_convolution",
    "__version__",
]
