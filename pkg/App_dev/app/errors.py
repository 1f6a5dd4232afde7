"""Exceptions raised by the reconstruction toolkit.

Every class also derives from the closest builtin so callers may catch
either the toolkit type or the plain ``ValueError``/``OSError``.
"""


class ReconError(Exception):
    """Base class for toolkit failures."""


class InvalidSizeError(ReconError, ValueError):
    pass


class DimensionMismatchError(ReconError, ValueError):
    pass


class SizeCapError(ReconError, ValueError):
    pass


class DegenerateGeometryError(ReconError, ValueError):
    pass


class DecodeError(ReconError, OSError):
    pass


class WindowContainmentError(ReconError, RuntimeError):
    """A variational refinement produced a window that misses the previous estimate."""
