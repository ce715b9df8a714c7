class RkhsDagmaError(Exception):
    """Base class of every error raised by rkhsdagma."""


class ShapeError(RkhsDagmaError, ValueError):
    pass


class DataError(RkhsDagmaError, ValueError):
    def __init__(self, msg, row=None):
        if row is not None:
            msg = "row {}: {}".format(row, msg)
        super().__init__(msg)
        self.row = row


class ConfigError(RkhsDagmaError, ValueError):
    pass


class OutOfDomainError(RkhsDagmaError, ArithmeticError):
    """
     Raised when a matrix A is outside {A : rho(A) < s}, i.e. when the LU factorization of
     (sI - A) without pivoting hits a non-positive pivot.
    """
    def __init__(self, pivot_index=None, pivot_value=None, msg=None):
        if msg is None:
            msg = "Matrix outside of the log-det domain (pivot {} = {})".format(pivot_index, pivot_value)
        super().__init__(msg)
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value


class NonFiniteError(RkhsDagmaError, FloatingPointError):
    def __init__(self, iteration, value=None):
        msg = "Non-finite objective ({})".format(value)
        if iteration is not None:
            msg += " at iteration {}".format(iteration)
        super().__init__(msg + ".")
        self.iteration = iteration
        self.value = value


class OptimizationError(RkhsDagmaError, RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = [] if trace is None else trace
