class DyadicError(Exception):
    exit_code = 2


class DomainRangeError(DyadicError, IndexError):
    """A cube or level lies outside the active grid geometry."""


class ShapeMismatchError(DyadicError, ValueError):
    """Two grid objects live on different geometries."""


class ParameterError(DyadicError, ValueError):
    """Inadmissible exponents, smoothness index or truncation parameter."""


class InputError(DyadicError, ValueError):
    pass


class BlockSizeError(DyadicError, ValueError):
    pass


class ParseError(DyadicError, ValueError):

    def __init__(self, message: str, line: int = None, offset: int = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if offset is not None:
            location.append(f"offset {offset}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.line = line
        self.offset = offset


class DataError(DyadicError, ValueError):
    exit_code = 3


class GateFailure(DyadicError):
    exit_code = 1

    def __init__(self, suite: str, failing: list):
        super().__init__(f"suite {suite} failed: {', '.join(failing)}")
        self.suite = suite
        self.failing = failing
