"""
Exception hierarchy for the deterministic transmission toolkit
"""

from typing import Optional


class DetnetError(Exception):
    """Base class for every error raised by this package"""


class ConfigurationError(DetnetError):
    """Invalid time configuration, topology or application description"""


class ScenarioFormatError(ConfigurationError):
    """Scenario file could not be parsed or carries unknown fields"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class RouteError(DetnetError):
    """Route does not follow the access/core/access segment structure"""


class CycleMapError(DetnetError):
    """Cycle index, cycle shift or offset outside its domain"""


class UnboundVariableError(DetnetError):
    """A decision variable needed for analysis is missing from the schedule"""


class SearchSpaceTooLarge(DetnetError):
    """Exhaustive search refused because the instance is too large"""

    def __init__(self, message: str, estimate: float):
        self.estimate = estimate
        super().__init__(f"{message} (estimated {estimate:.3g} candidate assignments)")


class GclCompileError(DetnetError):
    """Gate control list cannot be built for the given schedule"""


class PifoCompileError(DetnetError):
    """PIFO program has clashing ranks"""


class SimulationInvariantError(DetnetError):
    """Scheduled traffic broke a determinism guarantee during simulation"""


class JitterUndefinedError(DetnetError):
    """Jitter needs at least two completed messages"""
