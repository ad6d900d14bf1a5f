class OdpError(Exception):
    """Base class for all library errors."""


class DomainError(OdpError, ValueError):
    """A smooth primitive was evaluated outside its declared domain."""


class UnsupportedExpressionError(OdpError, ValueError):
    """The expression falls outside the admissible AST class."""


class InfeasiblePointError(OdpError, ValueError):
    """The point does not map into the constraint set."""


class SchemaError(OdpError, ValueError):
    """A problem or sequence file does not match its schema."""


class MalformedSequenceError(OdpError, ValueError):
    pass


class BasePointCollisionError(MalformedSequenceError):
    """A directional sequence visits the base point itself."""


class SolverStallError(OdpError, RuntimeError):
    pass


class NotOrthodisjunctiveError(OdpError, ValueError):
    pass


class VerificationRegressionError(OdpError, RuntimeError):
    """A transformed sequence no longer passes verification."""


class DirectionNotCriticalError(OdpError, ValueError):
    pass


class BoundednessViolationError(OdpError, RuntimeError):
    """Multipliers that must stay bounded were observed to diverge."""


class InvalidDirectionError(OdpError, ValueError):
    """A direction is zero or not of unit length."""
