"""Measurement-guided initialization for FALQON on weighted MaxCut."""

__version__ = "0.1.0"


class InvalidInstanceError(ValueError):
    """A problem instance cannot be built from the given parameters."""


class ResourceLimitError(RuntimeError):
    """A requested size exceeds an enumeration or memory bound."""
