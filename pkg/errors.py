"""
Exception hierarchy shared by the numerical modules and the CLI.

The CLI maps these onto exit codes: DomainError raised while validating
a configuration is a usage error, any other SaddleIndexError is a
computation error.
"""


class SaddleIndexError(Exception):
    """Base class for every error raised by this project."""


class DomainError(SaddleIndexError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class CoverageError(SaddleIndexError):
    """A Monte Carlo density does not cover the region an integral needs."""

    def __init__(self, message: str, interval=None):
        super().__init__(message)
        self.interval = interval


class BranchError(SaddleIndexError):
    """The requested formula branch does not apply on this side of m_c."""


class SamplingError(SaddleIndexError, RuntimeError):
    """The eigen-solver kept failing after every allowed resample."""


class RootBracketError(SaddleIndexError):
    """No sign change was found while bracketing a root."""

    def __init__(self, message: str, interval=None):
        super().__init__(message)
        self.interval = interval


class FractionalProbabilityWarning(UserWarning):
    """Mean counts decay exponentially, so ratios of them lose their meaning as probabilities."""
