"""Exception hierarchy shared by every module of the engine."""


class GeometryError(Exception):
    """Base class for all engine errors."""


class DomainError(GeometryError, ValueError):
    """An input violates an operation's precondition."""


class EvaluationDomainError(DomainError):
    """A scalar function was evaluated outside its domain.

    ``subexpr`` carries the printed offending subexpression when the
    failure happened inside an expression tree.
    """

    def __init__(self, message, subexpr=None):
        super().__init__(message if subexpr is None else f"{message} in {subexpr}")
        self.subexpr = subexpr


class ExprSyntaxError(GeometryError, SyntaxError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.msg = message
        self.offset = offset


class UnknownIdentifier(GeometryError, NameError):
    def __init__(self, name, offset=None):
        where = "" if offset is None else f" at byte {offset}"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.offset = offset


class SingularMatrix(GeometryError, ArithmeticError):
    pass


class SingularMetric(SingularMatrix):
    pass


class SignatureViolation(GeometryError):
    pass


class DegenerateInducedMetric(GeometryError):
    pass


class RankDeficientImmersion(GeometryError):
    pass
