"""
Exception hierarchy. Every error raised on purpose by phonocav derives from
PhonocavError and also from the builtin it specializes, so callers catching
ValueError / RuntimeError keep working.
"""

from __future__ import annotations


class PhonocavError(Exception):
    """Base class for phonocav errors."""


class ConfigError(PhonocavError, ValueError):
    """Invalid run configuration or a request the numerics cannot honor."""


class ConvergenceError(PhonocavError, RuntimeError):
    """An iterative solver or a quadrature did not converge."""

    def __init__(self, message: str, residual: float = float("nan")) -> None:
        super().__init__(message)
        self.residual = residual


class TruncationError(PhonocavError, RuntimeError):
    """A correlation kernel has not decayed at the end of its time grid."""


class UnsupportedConfigurationError(PhonocavError, ValueError):
    """The selected method does not cover this parameter regime."""


class MissingChannelError(PhonocavError, ValueError):
    """A phonon channel refers to a correlation function absent from the table."""


class DegeneratePeaksError(PhonocavError, RuntimeError):
    """Fewer than two resolvable emission peaks."""


class ImaginaryRenormalizationError(PhonocavError, ValueError):
    """Peak positions give a negative radicand for the coupling renormalization."""
