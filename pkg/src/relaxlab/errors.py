"""Exception hierarchy for relaxlab."""


class RelaxLabError(Exception):
    """Base class for all errors raised by relaxlab."""


class ContractError(RelaxLabError, ValueError):
    """An argument violates a documented precondition (shape, sign, range)."""


class ModelConstructionError(RelaxLabError, ValueError):
    """Model parameters fail a structural inequality on the validation box."""

    def __init__(self, inequality, witness=None, value=None):
        self.inequality = inequality
        self.witness = witness
        self.value = value
        msg = f"model invariant violated: {inequality}"
        if witness is not None:
            msg += f" at {witness!r}"
        if value is not None:
            msg += f" (value {value!r})"
        super().__init__(msg)


class NumericalError(RelaxLabError, ArithmeticError):
    """An iterative method failed to converge within its iteration cap."""


class UnsupportedModelError(RelaxLabError):
    """The model lacks structure required by an operation."""


class StepSizeError(RelaxLabError, ValueError):
    """A time step exceeds the CFL stability bound."""


class BlowUpError(RelaxLabError):
    """The numerical state became non-finite."""

    def __init__(self, time, cell):
        self.time = time
        self.cell = cell
        super().__init__(f"non-finite state at t={time:.6g}, cell {cell}")


class SmoothnessLostError(RelaxLabError):
    """The equilibrium solution left the smooth (pre-shock) regime."""

    def __init__(self, time, growth):
        self.time = time
        self.growth = growth
        super().__init__(
            f"gradient grew by a factor {growth:.3g} by t={time:.6g}; "
            "the reference solution is no longer smooth"
        )


class InconclusiveStudyError(RelaxLabError):
    """Every convergence-study point lies below the discretization floor."""


class ConfigError(RelaxLabError, ValueError):
    """Malformed or semantically invalid run configuration."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
