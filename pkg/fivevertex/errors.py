"""
Exception types for fivevertex.

Every error raised deliberately by the library derives from FiveVertexError,
so callers (and the CLI) can catch the whole family at once. Argument-style
errors also derive from ValueError.
"""

from typing import Optional


class FiveVertexError(Exception):
    """Base class for all fivevertex errors."""


class InvalidArgumentError(FiveVertexError, ValueError):
    """Non-finite or otherwise unusable numeric input."""


class SingularArgumentError(FiveVertexError, ValueError):
    """Argument sits on a pole or branch point of the function."""


class CriticalWeightError(FiveVertexError, ValueError):
    """Some product alpha_i * beta_j equals 1."""


class RegimeError(FiveVertexError, ValueError):
    """Mixed small/large products, or an operation called in the wrong regime."""


class InvalidConfigurationError(FiveVertexError, ValueError):
    """A lattice configuration violates the five-vertex local rules."""


class ConfigParseError(FiveVertexError, ValueError):
    """A domain config file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(FiveVertexError, ValueError):
    """Point outside the domain of definition (lower half-plane, outside the slope triangle)."""


class OutOfPhaseError(FiveVertexError, ValueError):
    """Slope target outside the pure (strictly convex) phase."""


class StencilError(FiveVertexError, ValueError):
    """A finite-difference stencil leaves the region where the formula holds."""


class ParameterError(FiveVertexError, ValueError):
    """A named-example parameter is out of its admissible range."""


class CriticalPointError(FiveVertexError, ValueError):
    """The envelope linear system is degenerate at this u."""


class SizeLimitError(FiveVertexError, ValueError):
    """Requested computation exceeds the configured size guard."""


class FeasibilityError(FiveVertexError, ValueError):
    """Boundary heights admit no valid path configuration."""


class ConvergenceError(FiveVertexError, RuntimeError):
    """An iterative solver failed to converge."""


class BoundaryProximityWarning(UserWarning):
    """Result lies close to the boundary of the upper half-plane or at large |u|."""
