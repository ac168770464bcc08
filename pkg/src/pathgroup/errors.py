"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class PathGroupError(Exception):
    exit_code = 1


class BadArgsError(PathGroupError, ValueError):
    exit_code = 2


class InvalidDimensionError(BadArgsError):
    pass


class PreconditionError(BadArgsError):
    pass


class ResolutionError(BadArgsError):
    pass


class CutLocusError(PathGroupError):
    exit_code = 3


class OutOfChartError(PathGroupError):
    exit_code = 4


class InconclusiveError(PathGroupError):
    exit_code = 5


class BranchError(PathGroupError, ValueError):
    exit_code = 4


class DegeneracyError(PathGroupError):
    exit_code = 3


class IllPosedCapError(BadArgsError):
    pass


class ConsistencyError(PathGroupError):
    exit_code = 6


class ChartDegenerateError(OutOfChartError):
    pass
