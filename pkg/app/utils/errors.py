"""Exception hierarchy for the resonance solver.

None of these derive from ValueError: pydantic only converts ValueError and
AssertionError raised inside validators, so ours reach the caller unchanged.
"""
from typing import Any, Dict, Optional


class RPMError(Exception):
    """Base class for every error raised by this package"""


class ConfigurationError(RPMError):
    """Invalid precision or solver configuration"""


class DecimalParseError(RPMError):
    """Malformed decimal text"""

    def __init__(self, text: str, position: int, reason: str = "unexpected character"):
        self.text = text
        self.position = position
        self.reason = reason
        shown = repr(text[position]) if position < len(text) else "end of input"
        super().__init__(f"Cannot parse {text!r}: {reason} at position {position} ({shown})")


class DomainError(RPMError):
    """Argument outside the domain of an operation (e.g. g < 0)"""


class ConsistencyError(RPMError):
    """alpha(alpha-1) does not match the centrifugal strength"""


class UnsupportedPotentialError(RPMError):
    """Potential the beta = 2 recursion cannot represent"""


class ModeError(RPMError):
    """Exact-rational operation called with non-rational input"""


class NormalizationError(RPMError):
    """Wavefunction series not normalized to c_0 = 1"""


class MatrixSizeError(RPMError):
    """Coefficient table too short for the requested Hankel matrix"""


class CostGuardError(RPMError):
    """Exact computation refused because it would be too expensive"""


class UndefinedRatioError(RPMError):
    """Ratio column requested where it is undefined (g = 0)"""


class ResonanceNotFoundError(RPMError):
    """No theta-stable rotated eigenvalue near the requested target"""


class SequenceFailedError(RPMError):
    """Every entry of a Hankel sequence failed to converge"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
