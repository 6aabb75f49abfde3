"""Semantic exception hierarchy.

Numerical *failures* (quadrature non-convergence) are not exceptions: the
quadrature routines return a best estimate plus a flag.  Exceptions are
reserved for contract violations (bad inputs) and structural degeneracies
that make a result meaningless rather than merely imprecise.
"""


class PredcpError(Exception):
    """Base class for all library errors."""


class DomainError(PredcpError, ValueError):
    """Input outside the mathematical domain of an operation."""


class StructuralError(PredcpError, ValueError):
    """Shape or configuration mismatch (wrong dimensions, bad layer index)."""


class DegenerateMapError(PredcpError):
    """A divergence map whose derivative vanishes on the probe region.

    Raised instead of silently returning -inf log density; callers that can
    represent masked zeros (e.g. joint density grids) catch this.
    """

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class UnboundedMapError(PredcpError):
    """Bracket expansion failed: the map never reaches the target value."""
