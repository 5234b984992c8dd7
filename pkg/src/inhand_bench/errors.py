"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map outcome classes to
process exit statuses without a lookup table.
"""


class BenchError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


# --- input / loading -------------------------------------------------------


class MeshError(BenchError, ValueError):
    """Invalid mesh topology or geometry."""


class ParseError(MeshError):
    """Malformed mesh file."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class EmptyMesh(MeshError):
    pass


class NonFinite(MeshError):
    pass


class TooFewVertices(MeshError):
    pass


class SchemaError(BenchError, ValueError):
    """A task or trial document does not match its schema."""


class MissingField(SchemaError):
    pass


class MeshResolutionError(BenchError):
    """A mesh referenced by a task or trial could not be loaded."""


class ReportIoError(BenchError, OSError):
    pass


# --- scoring ---------------------------------------------------------------


class ScoringError(BenchError):
    exit_code = 4


class DegenerateTask(ScoringError, ValueError):
    """Initial and desired positions coincide; percentage errors are undefined."""


class NonUnitQuaternion(ScoringError, ValueError):
    pass


class MissingLinkPlacements(ScoringError):
    pass


class EmptySample(ScoringError, ValueError):
    pass


# --- geometry --------------------------------------------------------------


class GeometryError(BenchError):
    exit_code = 5


class InvalidTolerance(GeometryError, ValueError):
    pass


class DisconnectedVertices(GeometryError):
    pass


class NoRobotContact(GeometryError):
    """No link of the hand touches the object within the contact tolerance."""


class EmptyRegionProjection(GeometryError):
    """The contact region does not meet the object surface."""
