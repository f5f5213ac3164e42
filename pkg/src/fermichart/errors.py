"""Exception hierarchy shared by all fermichart modules."""

from __future__ import annotations


class FermiChartError(Exception):
    """Base class for every error raised by fermichart."""


class DomainError(FermiChartError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(DomainError):
    """An argument lies outside the range covered by a tabulated model."""


class DivergentIntegralError(DomainError):
    """The requested chart integral diverges (e.g. the chi kernel down to t = 0)."""


class OutOfChartError(FermiChartError):
    """A point lies outside the maximal Fermi chart (rho >= rho_max)."""


class BeyondHorizonError(OutOfChartError):
    """A point lies on or beyond the cosmological event horizon."""


class NotRegularError(FermiChartError):
    """The scale factor fails the regularity diagnostics."""


class IntegrandError(FermiChartError, ArithmeticError):
    """The integrand returned a non-finite value."""


class ConvergenceError(FermiChartError):
    """Adaptive quadrature ran out of subdivisions.

    ``best`` holds the best available :class:`~fermichart.numerics.QuadResult`.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class NoRootError(FermiChartError):
    """No sign change was found for a bracketed root search."""
