"""Exception hierarchy shared by the library and the command line front-end."""

from __future__ import annotations


class TMScatterError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ConfigError(TMScatterError, ValueError):
    """Invalid parameters or configuration documents."""

    exit_code = 2


class NumericalError(TMScatterError, ArithmeticError):
    """A computation could not be carried out reliably."""

    exit_code = 3


class TransferOverflowError(NumericalError):
    """Evanescent growth factors would overflow double precision."""


class SpectralSingularityError(NumericalError):
    """The linear system I + K22 is numerically singular.

    Attributes
    ----------
    sigma_min : float
        Smallest singular value of the system matrix.
    """

    def __init__(self, message: str, sigma_min: float = float("nan")):
        super().__init__(message)
        self.sigma_min = sigma_min


class ConvergenceError(NumericalError):
    """An iterative oracle failed to converge."""

    def __init__(self, message: str, ratio: float = float("nan")):
        super().__init__(message)
        self.ratio = ratio


class PremiseError(TMScatterError):
    """A certificate was requested for a potential that violates its premise."""

    exit_code = 4
