"""
Exception hierarchy shared by the kinodynamics and planning packages.
"""
from typing import Optional


class KinodynamicsError(Exception):
    """Base class for every error raised by the toolkit."""


class PathDomainError(KinodynamicsError, ValueError):
    """Path parameter outside [0, s_end]."""


class DegeneratePathError(KinodynamicsError, ValueError):
    """Coincident endpoints or a zero tangent."""


class ContinuityError(KinodynamicsError, ValueError):
    """Two paths cannot be joined with C1 continuity."""


class DimensionMismatchError(KinodynamicsError, ValueError):
    pass


class SystemEvaluationError(KinodynamicsError):
    """A system model produced non-finite constraint data."""


class EndpointMismatchError(KinodynamicsError, ValueError):
    """Requested boundary velocities disagree with a velocity profile."""


class ScenarioError(KinodynamicsError):
    """Malformed or missing input file."""


class InfeasibleError(KinodynamicsError):
    """No valid velocity profile exists for the requested boundary conditions."""

    def __init__(self, reason: str, message: Optional[str] = None):
        self.reason = reason
        super().__init__(f"{reason}: {message}" if message else f"infeasible: {reason}")
