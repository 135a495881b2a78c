"""Operator transfer-matrix scattering in two and three dimensions."""

from .errors import (
    ConfigError,
    ConvergenceError,
    NumericalError,
    PremiseError,
    SpectralSingularityError,
    TMScatterError,
    TransferOverflowError,
)
from .momentum import GridFunction, MomentumGrid, build_grid, project, varpi

__version__ = "0.1.0"
