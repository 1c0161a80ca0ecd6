"""Exception hierarchy for the certification toolkit.

Everything derives from ``ValueError`` so callers that only guard against bad
input keep working; the CLI maps the subclasses onto exit codes.
"""

from typing import Optional, Tuple


class CertificationError(ValueError):
    """Base class for all toolkit errors."""


class ResourceLimitError(CertificationError):
    """A generator or search would exceed the configured resource cap."""

    def __init__(self, message: str, requested: Optional[int] = None, cap: Optional[int] = None):
        super().__init__(message)
        self.requested = requested
        self.cap = cap


class SchemaError(CertificationError):
    """Input document is malformed or violates its schema."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class DisconnectedGraphError(CertificationError):
    """A metric graph is not connected."""

    def __init__(self, message: str, vertex: Optional[str] = None):
        super().__init__(message)
        self.vertex = vertex


class InvalidPointError(CertificationError):
    """Unknown vertex or edge, or an offset outside its edge."""


class InvalidVectorError(CertificationError):
    """Vector and norm data are inconsistent."""


class GeodesicError(CertificationError):
    """A point sequence does not have the required geodesic shape."""


class PreconditionViolation(CertificationError):
    """An operation precondition fails; ``pair`` names the witnessing points."""

    def __init__(self, message: str, pair: Optional[Tuple[object, object]] = None):
        super().__init__(message)
        self.pair = pair


class OracleError(CertificationError):
    """A witness oracle could not serve a segment."""

    def __init__(self, message: str, segment: Optional[Tuple[object, object]] = None):
        super().__init__(message)
        self.segment = segment


class TreeError(CertificationError):
    """Incomplete or degenerate delta-tree data."""


class WitnessInvariantError(CertificationError):
    """A reflexivity witness does not satisfy its invariants."""
