"""Exception hierarchy shared by every drmx module.

Each error carries an ``exit_code`` so the command line can map failures to
the documented process status without a lookup table.
"""


class DrmxError(Exception):
    exit_code = 4


class UsageError(DrmxError, ValueError):
    exit_code = 1


class ConfigError(UsageError):
    pass


class ParseError(DrmxError, ValueError):
    """A malformed input artifact. ``line``/``col`` are 1-based."""

    exit_code = 2

    def __init__(self, message, line=None, col=None, token=None):
        self.message = message
        self.line = line
        self.col = col
        self.token = token
        where = f" at line {line}, column {col}" if line is not None else ""
        near = f" near {token!r}" if token is not None else ""
        super().__init__(f"{message}{where}{near}")


class NonDefiniteClause(ParseError):
    pass


class UnproducibleInputType(ParseError):
    def __init__(self, type_name, **kw):
        self.type_name = type_name
        super().__init__(f"no mode produces input type {type_name!r}", **kw)


class UnknownLabel(ParseError):
    pass


class MissingAssignment(ParseError):
    pass


class ResourceExceeded(DrmxError):
    exit_code = 3


class UniverseTooLarge(ResourceExceeded):
    pass


class NoHeadMode(DrmxError, ValueError):
    exit_code = 2


class EmptyBottom(DrmxError, ValueError):
    pass


class NoActiveFeatures(DrmxError, ValueError):
    pass


class BadDims(DrmxError, ValueError):
    exit_code = 1


class WidthMismatch(DrmxError, ValueError):
    pass


class SingleClassData(DrmxError, ValueError):
    exit_code = 1


class NonFiniteLoss(DrmxError, ArithmeticError):
    pass


class UnknownFeature(DrmxError, KeyError):
    pass


class EmptyNeighborhood(DrmxError, ValueError):
    pass


class MissingDefinition(DrmxError, KeyError):
    pass


class NonUniqueDefinition(DrmxError, ValueError):
    pass


class ClassMismatch(DrmxError, ValueError):
    pass


class DenominatorMismatch(DrmxError, ValueError):
    pass


class TooFewInstances(DrmxError, ValueError):
    exit_code = 1


class InvariantViolation(DrmxError, AssertionError):
    exit_code = 4
