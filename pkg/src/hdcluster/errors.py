"""Exception hierarchy shared by all modules."""


class HDClusterError(Exception):
    """Base class for all package errors."""


class EncodingError(HDClusterError, ValueError):
    """Invalid mode index, digit string or aperture geometry."""


class ValidationError(HDClusterError, ValueError):
    """An operator or permutation failed a structural check (unitarity, bijectivity, shape)."""


class CompilationError(HDClusterError):
    """A graph could not be compiled into per-photon mode operations.

    ``certificate`` carries the offending edges or the matching that failed.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class UnsupportedGraphError(HDClusterError, ValueError):
    """The graph lacks the structure a witness or measurement setting needs."""


class InsufficientDataError(HDClusterError, ValueError):
    """Count tables carry no events."""


class PatternError(HDClusterError, ValueError):
    """Malformed measurement pattern (e.g. forward-referencing dependency)."""


class OrderViolationError(HDClusterError, ValueError):
    """Dependency relation is cyclic or an allocation breaks the photon order."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GeometryError(HDClusterError, ValueError):
    """Optical grids, stacks or mode sets are inconsistent."""
