class NilbenchError(Exception):
    """Base class for every error raised by the library"""


class InputError(NilbenchError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ''
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ': '
        super().__init__(where + message)


class SemanticError(InputError):
    pass


class CapExceeded(NilbenchError):
    pass


class DegreeMismatch(NilbenchError):
    pass


class NotRegular(NilbenchError):
    pass


class NotAGroup(NilbenchError):
    pass


class NotInverseSquare(NilbenchError):
    pass


class InconsistentPattern(NilbenchError):
    pass


class BudgetExceeded(NilbenchError):
    pass


class MalformedRees(NilbenchError):
    pass


class NotPrime(NilbenchError):
    pass


class NotInverse(NilbenchError):
    pass


class BadParameter(NilbenchError):
    pass


class InvalidDelta(NilbenchError):
    def __init__(self, message, offending=()):
        self.offending = tuple(offending)
        super().__init__(message)


class InternalInconsistency(NilbenchError):
    pass
