class PlannerError(Exception):
    """Base class for all errors raised by busplanner."""


class GeometryError(PlannerError, ValueError):
    pass


class OutOfDomainError(GeometryError):
    """A station or a projected point lies outside the path domain."""


class ProjectionError(GeometryError):
    """The orthogonal projection onto the path is undefined."""


class ModelDomainError(PlannerError, ValueError):
    """The road-aligned model is singular at the requested state."""

    def __init__(self, message, station=None):
        super().__init__(message)
        self.station = station


class DistortionError(PlannerError, ValueError):
    """The arc-circle does not reach the requested station."""


class ScenarioError(PlannerError, ValueError):
    """Malformed or inconsistent scenario document."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class InfeasibleCorridorError(ScenarioError):
    pass


class QpSolveError(PlannerError):
    """The QP solver did not return an optimal point.

    ``status`` is one of ``primal_infeasible``, ``dual_infeasible``,
    ``iteration_limit`` or ``numerical_error``.
    """

    def __init__(self, status, message=""):
        super().__init__(message or status)
        self.status = status
