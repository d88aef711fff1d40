"""
Domain exceptions for the similarity boundary analysis toolkit
"""
from typing import Optional


class IfsError(Exception):
    """Base class for every error raised by this package"""


class BackendMismatchError(IfsError, ValueError):
    """Points or maps from different ambient-space backends were combined"""


class DimensionMismatchError(IfsError, ValueError):
    """Euclidean operands disagree in dimension"""


class SymbolRangeError(IfsError, ValueError):
    """An address symbol lies outside 1..N"""


class NotContractionError(IfsError, ValueError):
    """A similitude ratio is not in (0, 1)"""


class OrthogonalityError(IfsError, ValueError):
    """A linear part deviates from an orthogonal matrix beyond the repair limit"""


class PreimageOutsideSpaceError(IfsError, ValueError):
    """The partial inverse of a sequence-space map is undefined at the point"""


class RasterUnavailableError(IfsError, ValueError):
    """Grid rasters and SVG rendering need the Euclidean backend"""


class NotTileCandidateError(IfsError, ValueError):
    """The similarity dimension differs from the ambient dimension"""


class EmptyPointSetError(IfsError, ValueError):
    """A point set operation received an empty input"""


class UnknownFixtureError(IfsError, KeyError):
    """The requested gallery fixture does not exist"""


class SpecParseError(IfsError, ValueError):
    """A spec file could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class BudgetExceededError(IfsError, RuntimeError):
    """An enumeration would exceed the configured address budget"""

    def __init__(self, requested: int, allowed: int):
        self.requested = requested
        self.allowed = allowed
        super().__init__(
            f"enumeration of {requested} addresses exceeds the budget of {allowed}; "
            "lower --depth or raise --budget"
        )


class InternalComputationError(IfsError, RuntimeError):
    """A computation that cannot fail for valid input failed anyway"""
