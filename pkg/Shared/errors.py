# Shared/errors.py
from __future__ import annotations


class LabError(Exception):
    """Base class for every error raised by the lab."""


# --- fields ---
class InvalidFieldError(LabError, ValueError):
    pass


class GeometryMismatchError(LabError, ValueError):
    pass


# --- transport ---
class BalanceError(LabError, ValueError):
    pass


class CapacityError(LabError):
    pass


class UnsupportedExponentError(LabError, ValueError):
    pass


class ConsistencyError(LabError):
    pass


class InvalidPotentialError(LabError, ValueError):
    pass


# --- curves ---
class DegenerateCurveError(LabError, ValueError):
    pass


class OffsetTooLargeError(LabError, ValueError):
    pass


# --- rays ---
class OutOfRangeError(LabError, ValueError):
    pass


class DegenerateRayError(LabError, ValueError):
    pass


class ExpansionDomainError(LabError, ValueError):
    pass


# --- recovery / closed forms ---
class InadmissibleEpsilonError(LabError, ValueError):
    pass


class GridTooCoarseError(LabError, ValueError):
    pass


class RingBoundsError(LabError, ValueError):
    pass


# --- harness ---
class ConfigError(LabError):
    pass


class InvariantFailure(LabError):
    """A numerical invariant did not hold (exit code 2)."""
