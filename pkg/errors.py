#!/usr/bin/env python3
"""
Exception hierarchy for the parabolic Lamé toolkit.

Library modules raise these; only the CLI catches them and maps them to exit codes.
"""

from typing import Any, Dict, List, Optional


class ParLameError(RuntimeError):
    """Base error for every failure raised by the toolkit."""


class InvalidGeometryError(ParLameError):
    """Degenerate box or ball, empty patch, or malformed geometry document."""


class PreconditionError(ParLameError):
    """An operation was called outside its documented preconditions."""


class UnsupportedDimensionError(PreconditionError):
    """Requested spatial dimension is not implemented."""


class NotParabolicError(ParLameError):
    """Lamé coefficients violate the uniform parabolicity margin."""

    def __init__(self, message: str, root: float, theta: float):
        super().__init__(message)
        self.root = root
        self.theta = theta


class KernelDomainError(ParLameError):
    """Kernel derivative requested on the degenerate branch t <= 0."""


class NumericalError(ParLameError):
    """A numerical procedure did not reach its tolerance."""

    def __init__(self, message: str, achieved: Optional[float] = None):
        super().__init__(message)
        self.achieved = achieved


class ExtrapolationError(NumericalError):
    """One-sided Richardson extrapolation did not settle."""

    def __init__(self, message: str, achieved: Optional[float] = None,
                 samples: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message, achieved)
        self.samples = samples or []


class AmbiguousTraceError(ParLameError):
    """Target lies on the integration set and no side was given."""


class DensityError(ParLameError):
    """Density evaluator produced non-finite or misshaped values."""


class CaloricIdentityError(ParLameError):
    """An exact polynomial identity failed after construction."""


class IllConditionedError(NumericalError):
    """Least-squares fit is rank deficient and unregularized."""


class DomainError(ParLameError):
    """Evaluation target lies outside the admissible space-time set."""


class UsageError(ParLameError):
    """Bad command-line flags or configuration file."""
