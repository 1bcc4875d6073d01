"""Exception hierarchy shared by all nervecal modules."""


class NervecalError(Exception):
    """Base class for every error raised by this package."""


class DiameterOutOfRange(NervecalError, ValueError):
    pass


class AxonTooShort(NervecalError, ValueError):
    pass


class NumericalDivergence(NervecalError, ArithmeticError):
    """A simulation produced a non-finite membrane potential."""

    def __init__(self, message, *, step=None, cell=None):
        super().__init__(message)
        self.step = step
        self.cell = cell

    def with_cell(self, cell):
        err = NumericalDivergence(f"{self} [cell {cell}]", step=self.step, cell=cell)
        return err


class EmptyWindow(NervecalError, ValueError):
    pass


class ParamsOutOfBox(NervecalError, ValueError):
    pass


class LengthMismatch(NervecalError, ValueError):
    pass


class HealthyAmplitudeDegenerate(NervecalError, ValueError):
    pass


class ParseError(NervecalError, ValueError):
    pass


class ValidationError(NervecalError, ValueError):
    """Reference or config content failed validation.

    ``row`` and ``column`` locate the offending cell when known.
    """

    def __init__(self, message, *, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(NervecalError, ValueError):
    pass
